import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfsep import qsim
from mfsep.concepts import BoolFunc, prepare_phase_state
from mfsep.errors import CapacityError

R2 = 1 / np.sqrt(2)


def test_hadamard_on_zero():
    s = qsim.apply(qsim.basis_state(1, 0), qsim.H(0))
    assert np.allclose(s.amps, [R2, R2])


def test_phase_oracle_on_uniform():
    s = qsim.apply(qsim.uniform_state(1), qsim.PhaseOracle(BoolFunc.from_table([0, 1])))
    assert np.allclose(s.amps, [R2, -R2])


def test_cnot_little_endian():
    # |01> has qubit 0 set; CNOT(0 -> 1) gives |11>
    s = qsim.apply(qsim.basis_state(2, 0b01), qsim.CNOT(0, 1))
    assert np.allclose(s.amps, np.eye(4)[0b11])


def test_cnot_rejects_equal_qubits():
    with pytest.raises(ValueError):
        qsim.CNOT(1, 1)


def test_phase_state_distribution_is_flat(rng):
    for n in range(1, 7):
        p = qsim.outcome_distribution(prepare_phase_state(BoolFunc.random(n, rng)))
        assert np.allclose(p, 1 / 2**n)


def test_outcome_distribution_minus_state():
    p = qsim.outcome_distribution(qsim.StateVector(1, np.array([R2, -R2], dtype=complex)))
    assert np.allclose(p, [0.5, 0.5])


def test_fourier_of_constant_is_point_mass():
    s = prepare_phase_state(BoolFunc.from_table([0, 0, 0, 0]))
    out = qsim.apply_all(s, [qsim.H(0), qsim.H(1)])
    # oracle: explicit H (x) H matrix
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(out.amps, np.kron(h, h) @ s.amps)
    assert np.allclose(qsim.outcome_distribution(out), [1, 0, 0, 0])


def test_sample_point_mass(rng):
    s = qsim.basis_state(3, 5)
    assert {qsim.sample(s, rng) for _ in range(50)} == {5}


def test_sample_uniform_frequencies(rng):
    draws = qsim.sample_many(qsim.uniform_state(2), 100_000, rng)
    freq = np.bincount(draws, minlength=4) / draws.size
    assert np.all(np.abs(freq - 0.25) <= 0.01)


def test_sample_reproducible():
    s = qsim.random_state(3, np.random.default_rng(1))
    a = [qsim.sample(s, np.random.default_rng(7)) for _ in range(3)]
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    assert [qsim.sample(s, r1) for _ in range(20)] == [qsim.sample(s, r2) for _ in range(20)]
    assert len(set(a)) == 1


def test_capacity_cap():
    with pytest.raises(CapacityError):
        qsim.uniform_state(qsim.MAX_QUBITS + 1)
    assert qsim.uniform_state(3, max_qubits=3).n == 3


def test_circuit_unitary_matches_kron():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    xm = np.array([[0, 1], [1, 0]])
    U = qsim.circuit_unitary(2, [qsim.H(1), qsim.X(0)])
    assert np.allclose(U, np.kron(h, np.eye(2)) @ np.kron(np.eye(2), xm))


gates = st.sampled_from(["H", "X", "Z", "CNOT"])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.lists(st.tuples(gates, st.integers(0, 7), st.integers(0, 7)), max_size=12),
       st.integers(0, 2**32 - 1))
def test_norm_preserved_and_involutions(n, ops, seed):
    rng = np.random.default_rng(seed)
    s = qsim.random_state(n, rng)
    for name, a, b in ops:
        a, b = a % n, b % n
        if name == "CNOT":
            if a == b:
                continue
            op = qsim.CNOT(a, b)
        else:
            op = getattr(qsim, name)(a)
        t = qsim.apply(s, op)
        assert abs(t.norm - 1) < 1e-10
        assert np.allclose(qsim.apply(t, op).amps, s.amps, atol=1e-12)
        s = t
    f = BoolFunc.random(n, rng)
    assert np.allclose(qsim.apply(qsim.apply(s, qsim.PhaseOracle(f)), qsim.PhaseOracle(f)).amps, s.amps)
