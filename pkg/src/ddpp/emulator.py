"""Noiseless state-vector emulation of the analog Rydberg evolution.

The Hamiltonian is

    H(t) = c * Omega(t) * sum_i X_i - delta(t) * sum_i n_i + sum_{i<j} V_ij n_i n_j

with ``c = 1/2`` by default (``drive="half"``) so that a lone atom under a
flat drive Omega performs Rabi oscillations P1 = sin^2(Omega t / 2) and the
blockade radius is (C6/Omega)^(1/6).  ``drive="full"`` uses c = 1.

Basis index bit ``j`` holds the occupation of atom ``j``.  Pulse times are
in ns; the integrator works in us so that H is in rad/us.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .embedding import AtomRegister
from .errors import NormDriftExceeded, RegisterTooLarge
from .samples import SamplePool

DEFAULT_N_CAP = 16
RTOL = 1e-8
ATOL = 1e-10
NORM_DRIFT_LIMIT = 1e-6
_DRIVE = {"half": 0.5, "full": 1.0}


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    n: int

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def occupations(self) -> np.ndarray:
        return occupation_table(self.n)

    def expected_weight(self) -> float:
        return float(self.probabilities() @ occupation_table(self.n).sum(axis=1))

    def excitation_probability(self, atoms) -> float:
        """Probability that every atom in ``atoms`` is measured excited."""
        occ = occupation_table(self.n)
        return float(self.probabilities()[occ[:, list(atoms)].all(axis=1)].sum())


def occupation_table(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)


class RydbergHamiltonian:
    """Matrix-free H(t) for a fixed register and schedule.

    With ``max_energy`` set, only basis states whose interaction energy is at
    most that value are kept (the ground state always is); ``states`` lists
    their full-space indices.
    """

    def __init__(self, interactions: np.ndarray, schedule, drive: str = "half", max_energy: float | None = None):
        v = np.asarray(interactions, dtype=float)
        self.n = v.shape[0]
        self.schedule = schedule
        self.drive = _DRIVE[drive]
        occ = occupation_table(self.n).astype(float)
        v = np.triu(v, k=1)
        energy = np.einsum("ki,ij,kj->k", occ, v, occ)
        if max_energy is None:
            self.states = None
            self.weight = occ.sum(axis=1)
            self.interaction_diag = energy
            self._flip = None
        else:
            keep = np.flatnonzero(energy <= max_energy)
            self.states = keep
            self.weight = occ[keep].sum(axis=1)
            self.interaction_diag = energy[keep]
            self._flip = _flip_matrix(self.n, keep)

    @property
    def dim(self) -> int:
        return 2**self.n if self.states is None else len(self.states)

    def embed(self, psi: np.ndarray) -> np.ndarray:
        """Lift a (possibly truncated) state back to the full 2^n space."""
        if self.states is None:
            return psi
        full = np.zeros(2**self.n, dtype=complex)
        full[self.states] = psi
        return full

    def coefficients(self, t_us: float) -> tuple[float, float]:
        t_ns = t_us * 1e3
        return self.drive * self.schedule.omega(t_ns), self.schedule.delta(t_ns)

    def flip(self, psi: np.ndarray) -> np.ndarray:
        """sum_i X_i applied to ``psi``."""
        if self._flip is not None:
            return self._flip @ psi
        n = self.n
        flipped = np.zeros_like(psi)
        for j in range(n):
            view = psi.reshape(2 ** (n - 1 - j), 2, 2**j)
            flipped.reshape(view.shape)[...] += view[:, ::-1, :]
        return flipped

    def apply(self, t_us: float, psi: np.ndarray) -> np.ndarray:
        rabi, detuning = self.coefficients(t_us)
        out = (self.interaction_diag - detuning * self.weight) * psi
        if rabi:
            out += rabi * self.flip(psi)
        return out

    def matrix(self, t_us: float) -> np.ndarray:
        """Dense H(t); intended for small registers and checks."""
        rabi, detuning = self.coefficients(t_us)
        h = np.diag(self.interaction_diag - detuning * self.weight).astype(complex)
        h += rabi * (self._flip.toarray() if self._flip is not None else _flip_matrix(self.n).toarray())
        return h


def _flip_matrix(n: int, states=None) -> sparse.csr_matrix:
    states = np.arange(2**n) if states is None else np.asarray(states)
    where = np.full(2**n, -1)
    where[states] = np.arange(len(states))
    rows, cols = [], []
    for j in range(n):
        partner = where[states ^ (1 << j)]
        ok = partner >= 0
        rows.append(np.flatnonzero(ok))
        cols.append(partner[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(states), len(states)))


def evolve(reg: AtomRegister, schedule, n_cap: int = DEFAULT_N_CAP, *, drive: str = "half",
           rtol: float = RTOL, atol: float = ATOL, energy_cutoff: float | None = None) -> QuantumState:
    """Integrate the Schroedinger equation from all-ground to the end of ``schedule``."""
    if reg.n > n_cap:
        raise RegisterTooLarge(f"{reg.n} atoms exceed the state-vector cap of {n_cap}; use the classical sampler")
    return evolve_interactions(reg.interactions() if reg.n > 1 else np.zeros((1, 1)), schedule,
                               drive=drive, rtol=rtol, atol=atol, energy_cutoff=energy_cutoff)


def evolve_interactions(interactions, schedule, *, drive: str = "half", rtol: float = RTOL,
                        atol: float = ATOL, energy_cutoff: float | None = None) -> QuantumState:
    """Evolve the all-ground state under ``H(t)``.

    ``energy_cutoff`` (in units of the peak drive) drops basis states whose
    interaction energy exceeds ``energy_cutoff * omega_max``.  Their
    populations are of order (Omega / V)^2, and removing them shrinks the
    spectral radius that limits the explicit step size.  ``None`` keeps the
    full space.
    """
    cutoff = None if energy_cutoff is None else energy_cutoff * schedule.omega_max
    ham = RydbergHamiltonian(interactions, schedule, drive, max_energy=cutoff)
    psi = np.zeros(ham.dim, dtype=complex)
    psi[0] = 1.0

    def rhs(t, y):
        return -1j * ham.apply(t, y)

    # restart at waveform kinks so the error control never straddles one
    marks = [b * 1e-3 for b in schedule.breakpoints()]
    for t0, t1 in zip(marks[:-1], marks[1:]):
        if t1 <= t0:
            continue
        sol = solve_ivp(rhs, (t0, t1), psi, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise NormDriftExceeded(f"integrator failed: {sol.message}")
        psi = sol.y[:, -1]
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift >= NORM_DRIFT_LIMIT:
        raise NormDriftExceeded(f"norm drifted by {drift:.3g}")
    return QuantumState(ham.embed(psi / np.linalg.norm(psi)), ham.n)


def sample(state: QuantumState, n_meas: int, rng_seed: int, *, schedule: str = "-") -> SamplePool:
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(2**state.n, size=n_meas, p=state.probabilities())
    bits = ((idx[:, None] >> np.arange(state.n)) & 1).astype(np.uint8)
    return SamplePool(bits, seed=rng_seed, schedule=schedule)
