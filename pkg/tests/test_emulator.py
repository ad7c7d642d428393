import math

import numpy as np
import pytest
from scipy.linalg import expm

from ddpp.embedding import AtomRegister, embed_graph
from ddpp.emulator import QuantumState, RydbergHamiltonian, evolve, evolve_interactions, sample
from ddpp.errors import RegisterTooLarge
from ddpp.instances import generate_instance
from ddpp.pulses import ConstantPulse, make_schedule
from ddpp.schedgraph import build_graph

TWO_PI = 2 * math.pi
C6 = 865723.02
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PN = np.diag([0.0, 1.0]).astype(complex)


def single_atom():
    return AtomRegister.from_omega([[0.0, 0.0]], TWO_PI)


def magnus_oracle(interactions, schedule, steps):
    """Midpoint exponential stepping on the dense Hamiltonian built from Kronecker products."""
    n = len(interactions)

    def op(single, j):
        out = np.eye(1)
        for k in reversed(range(n)):
            out = np.kron(out, single if k == j else np.eye(2))
        return out

    xs = [op(PX, j) for j in range(n)]
    ns = [op(PN, j) for j in range(n)]
    vint = sum(interactions[i][j] * ns[i] @ ns[j] for i in range(n) for j in range(i + 1, n))
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    dt = schedule.total_time / steps
    for k in range(steps):
        t = (k + 0.5) * dt
        h = 0.5 * schedule.omega(t) * sum(xs) - schedule.delta(t) * sum(ns) + vint
        psi = expm(-1j * h * dt * 1e-3) @ psi
    return psi


@pytest.mark.parametrize("phase", [math.pi, math.pi / 2, 2.3])
def test_rabi(phase):
    omega = TWO_PI
    t_ns = phase / omega * 1e3
    st = evolve(single_atom(), ConstantPulse(t_ns, omega))
    assert st.probabilities()[1] == pytest.approx(math.sin(phase / 2) ** 2, abs=1e-6)


def test_far_atoms_factorize():
    omega = TWO_PI
    t_ns = 0.7 / omega * 1e3 * math.pi
    one = evolve(single_atom(), ConstantPulse(t_ns, omega)).probabilities()[1]
    two = evolve(AtomRegister.from_omega([[0, 0], [200, 0]], omega), ConstantPulse(t_ns, omega))
    assert two.excitation_probability([0]) == pytest.approx(one, abs=1e-4)
    assert two.excitation_probability([1]) == pytest.approx(one, abs=1e-4)
    assert two.excitation_probability([0, 1]) == pytest.approx(one**2, abs=1e-4)


@pytest.mark.parametrize("r", [5.0, 6.0])
def test_two_atom_blockade_matches_dense_oracle(r):
    s = make_schedule(450, TWO_PI, -0.5 * TWO_PI)
    st = evolve(AtomRegister.from_omega([[0, 0], [r, 0]], TWO_PI), s)
    v = C6 / r**6
    ref = magnus_oracle([[0, v], [v, 0]], s, steps=18000)
    assert np.abs(st.probabilities() - np.abs(ref) ** 2).max() < 1e-6
    assert st.excitation_probability([0, 1]) < 1e-2


def test_three_atoms_match_dense_oracle():
    pos = np.array([[0, 0], [6.0, 0], [3.0, 5.0]])
    reg = AtomRegister.from_omega(pos, TWO_PI)
    s = make_schedule(300, TWO_PI, 0.25 * TWO_PI)
    st = evolve(reg, s)
    ref = magnus_oracle(reg.interactions(), s, steps=12000)
    assert np.abs(st.probabilities() - np.abs(ref) ** 2).max() < 1e-6


@pytest.mark.parametrize("n", [1, 3, 5, 6])
def test_hamiltonian_is_hermitian(n):
    rng = np.random.default_rng(n)
    reg = AtomRegister.from_omega(rng.uniform(0, 20, size=(n, 2)), TWO_PI)
    ham = RydbergHamiltonian(reg.interactions(), make_schedule(450, TWO_PI, 0.3), "half")
    for t in (0.0, 0.03, 0.2, 0.41):
        h = ham.matrix(t)
        assert np.array_equal(h, h.conj().T)
        psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        assert np.allclose(ham.apply(t, psi), h @ psi)


def test_hamiltonian_signs():
    # one atom: H = (omega/2) X - delta n
    s = ConstantPulse(100.0, 2.0, 0.7)
    h = RydbergHamiltonian(np.zeros((1, 1)), s, "half").matrix(0.05)
    assert np.allclose(h, [[0, 1.0], [1.0, -0.7]])
    h = RydbergHamiltonian(np.zeros((1, 1)), s, "full").matrix(0.05)
    assert np.allclose(h, [[0, 2.0], [2.0, -0.7]])
    h = RydbergHamiltonian(np.array([[0, 3.0], [3.0, 0]]), ConstantPulse(1.0, 0.0), "half").matrix(0)
    assert np.allclose(np.diag(h).real, [0, 0, 0, 3.0])


def test_register_cap():
    reg = AtomRegister.from_omega(np.arange(34).reshape(17, 2) * 10, TWO_PI)
    with pytest.raises(RegisterTooLarge):
        evolve(reg, make_schedule(450, TWO_PI, 0.0))


def test_energy_cutoff():
    g = build_graph(generate_instance(8, 30, 3))
    reg = embed_graph(g)
    s = make_schedule(600, reg.omega_max, 0.25 * reg.omega_max)
    full = evolve(reg, s)
    loose = evolve(reg, s, energy_cutoff=1e12)
    assert np.allclose(full.amplitudes, loose.amplitudes, atol=1e-7)
    cut = evolve(reg, s, energy_cutoff=20)
    assert np.abs(cut.probabilities() - full.probabilities()).max() < 2e-3
    assert cut.expected_weight() == pytest.approx(full.expected_weight(), abs=0.02)
    assert cut.norm() == pytest.approx(1.0, abs=1e-8)


def test_norm_after_evolution():
    reg = embed_graph(build_graph(generate_instance(6, 30, 0)))
    st = evolve(reg, make_schedule(450, reg.omega_max, 0.0))
    assert st.norm() == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_weight_rises_with_final_detuning(seed):
    reg = embed_graph(build_graph(generate_instance(6, 30, seed)))
    ws = [evolve(reg, make_schedule(450 * TWO_PI / reg.omega_max, reg.omega_max, f * reg.omega_max))
          .expected_weight() for f in (-1, -0.5, 0, 0.5)]
    assert all(b >= a for a, b in zip(ws, ws[1:]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_blockade_suppression_on_embedded_graphs(seed):
    inst = generate_instance(6 + 2 * seed, 30, 100 + seed)
    g = build_graph(inst)
    reg = embed_graph(g)
    s = make_schedule(450 * TWO_PI / reg.omega_max, reg.omega_max, -0.5 * reg.omega_max)
    bits = sample(evolve(reg, s), 10_000, seed).bits
    for i, j in g.edge_list:
        assert (bits[:, i] & bits[:, j]).mean() < 0.05


def test_sample_ground_state():
    st = QuantumState(np.array([1, 0, 0, 0, 0, 0, 0, 0], dtype=complex), 3)
    assert set(sample(st, 50, 0).bitstrings()) == {"000"}


def test_sample_uniform_frequencies():
    st = QuantumState(np.full(4, 0.5, dtype=complex), 2)
    pool = sample(st, 100_000, 1)
    counts = {s: 0 for s in ("00", "01", "10", "11")}
    for s in pool.bitstrings():
        counts[s] += 1
    for c in counts.values():
        assert c / 100_000 == pytest.approx(0.25, abs=0.01)


def test_sample_bit_order():
    amp = np.zeros(8, dtype=complex)
    amp[0b001] = 1  # atom 0 excited
    assert sample(QuantumState(amp, 3), 3, 0).bitstrings() == ["100"] * 3


def test_sampled_mean_matches_expectation():
    reg = AtomRegister.from_omega([[0, 0], [6.0, 0], [12.0, 0]], TWO_PI)
    st = evolve(reg, make_schedule(450, TWO_PI, -0.5 * TWO_PI))
    pool = sample(st, 20_000, 5)
    w = pool.weights()
    assert abs(w.mean() - st.expected_weight()) < 3 * w.std() / math.sqrt(len(w))
    assert sample(st, 100, 9) == sample(st, 100, 9)


def test_evolve_interactions_matches_register_path():
    reg = AtomRegister.from_omega([[0, 0], [6.0, 0]], TWO_PI)
    s = make_schedule(450, TWO_PI, 0.0)
    a = evolve(reg, s).amplitudes
    b = evolve_interactions(reg.interactions(), s).amplitudes
    assert np.array_equal(a, b)
