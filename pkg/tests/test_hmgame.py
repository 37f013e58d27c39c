import numpy as np
import pytest

from mfsep import qsim
from mfsep.concepts import BoolFunc
from mfsep.errors import DegenerateMatchingError
from mfsep.fqlearner import build_ux
from mfsep.hmgame import (
    HmAnswer,
    HmInstance,
    Matching,
    estimate_success,
    hm_classical_baseline,
    hm_quantum,
    hm_random_guess,
    random_instance,
    reduce_measure_first,
)
from mfsep.mflearner import Strategy, default_ell, measure


def test_matching_edges():
    m = Matching(3, 0b101)
    assert len(m.edges()) == 4
    assert {v for e in m.edges() for v in e} == set(range(8))
    with pytest.raises(DegenerateMatchingError):
        Matching(3, 0)


def test_quantum_single_qubit(rng):
    inst = HmInstance(BoolFunc.from_table([0, 1]), 1)
    ans = hm_quantum(inst, rng)
    assert (ans.y, ans.z, ans.parity) == (0, 1, 1)


def test_quantum_never_fails(rng):
    for n in range(1, 9):
        for _ in range(100):
            inst = random_instance(n, rng)
            assert inst.is_correct(hm_quantum(inst, rng))


def test_quantum_invalid_mass_is_zero(rng):
    # the measured label w decodes to a correct answer; sum the Born mass of the rest
    for n in range(1, 9):
        inst = random_instance(n, rng)
        c = build_ux(inst.x, inst.n)
        probs = qsim.outcome_distribution(c.final_state(inst.f))
        bad = 0.0
        for w in range(2**n):
            y0, b = c.decode(w)
            if not inst.is_correct(HmAnswer.of(y0, y0 ^ inst.x, b)):
                bad += probs[w]
        assert bad < 1e-12


def test_classical_full_table_always_wins(rng):
    n = 3
    for _ in range(50):
        inst = random_instance(n, rng)
        assert inst.is_correct(hm_classical_baseline(2 * 2**n, inst, rng))


def test_classical_small_budget_is_a_guess():
    est = estimate_success(lambda i, r: hm_classical_baseline(2, i, r), 12, 4000, np.random.default_rng(1))
    # one revealed pair hits an edge with probability 1 / (N - 1)
    assert abs(est.rate - (0.5 + 0.5 / 4095)) <= 3 * 0.5 / np.sqrt(4000)


def test_classical_monotone_in_budget():
    rates = [estimate_success(lambda i, r, c=c: hm_classical_baseline(c, i, r), 6, 4000,
                              np.random.default_rng(9)).rate for c in (2, 4, 8, 16, 32, 64)]
    assert rates == sorted(rates)
    assert rates[-1] == 1.0


def test_classical_cost_bits(rng):
    inst = random_instance(5, rng)
    assert hm_classical_baseline(8, inst, rng).cost_bits == 8 * 6
    assert hm_classical_baseline(100, inst, rng).cost_bits == 32 * 6


def test_reduction_leaky_is_exact(rng):
    for n in (1, 4, 8):
        s = Strategy.leaky(m_budget=2**n)
        for _ in range(20):
            inst = random_instance(n, rng)
            ans = reduce_measure_first(s, inst, rng)
            assert inst.is_correct(ans) and ans.cost_bits == 2**n


def test_reduction_shadow_well_below_threshold():
    n = 8
    ell = default_ell(n)
    s = Strategy.shadow(ell, m_budget=3 * n * ell)
    est = estimate_success(lambda i, r: reduce_measure_first(s, i, r), n, 300, np.random.default_rng(5))
    assert est.high < 7 / 8
    assert est.mean_cost_bits == 3 * n * ell


def test_reduction_payload_is_record(rng):
    s = Strategy.shadow(6)
    inst = random_instance(3, rng)
    seed = 77
    ans = reduce_measure_first(s, inst, np.random.default_rng(seed))
    _, alice, _ = np.random.default_rng(seed).spawn(3)
    rep = measure(s, inst.f, s.ell, alice)
    assert ans.sent == rep.to_bytes()
    assert len(ans.sent) == (rep.m + 7) // 8


def test_estimate_success_rates():
    q = estimate_success(hm_quantum, 5, 1000, np.random.default_rng(0))
    assert q.rate == 1.0 and q.successes == 1000
    g = estimate_success(hm_random_guess, 5, 4000, np.random.default_rng(0))
    assert g.low <= 0.5 <= g.high
    again = estimate_success(hm_random_guess, 5, 4000, np.random.default_rng(0))
    assert again == g
    with pytest.raises(ValueError):
        estimate_success(hm_quantum, 5, 0, np.random.default_rng(0))


def test_answer_canonical_form():
    assert HmAnswer.of(5, 2, 1) == HmAnswer.of(2, 5, 1)
    inst = HmInstance(BoolFunc.from_table([0, 1, 1, 1]), 3)
    assert inst.is_correct(HmAnswer.of(0, 3, 1)) and not inst.is_correct(HmAnswer.of(0, 3, 0))
    assert not inst.is_correct(HmAnswer.of(0, 1, 1))
