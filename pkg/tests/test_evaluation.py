import numpy as np
import pytest

from mfsep.concepts import FULL_X, BoolFunc, LabelMode, ConceptSample, Distribution, FSource, concept_distribution, tv_distance
from mfsep.errors import ConfigError, NoExactModeError
from mfsep.evaluation import (
    CSV_COLUMNS,
    EvalCriteria,
    FullyQuantumProtocol,
    MeasureFirstProtocol,
    SeparationConfig,
    empirical_distribution,
    evaluate_learnability,
    exact_generator_distribution,
    separation_experiment,
)
from mfsep.fqlearner import LearnerOutput, build_ux
from mfsep.mflearner import MfGenerator, Strategy, default_ell


class ConstantGenerator:
    def __init__(self, n, x):
        self.n, self.x = n, x

    def sample(self, f, rng):
        return ConceptSample(self.n, self.x, 0, 0)

    def exact_distribution(self, f):
        return Distribution.point_mass(2 * self.n + 1, ConceptSample(self.n, self.x, 0, 0).code)


class SampleOnly:
    def sample(self, f, rng):
        return ConceptSample(f.n, 1, 0, 0)


def test_criteria_ranges():
    with pytest.raises(ConfigError):
        EvalCriteria(1.2, 0.5, 0.5)
    c = EvalCriteria(0.95, 0.95, 0.5)
    assert c.above_hm_threshold and c.good(0.05) and not c.good(0.06)
    assert not EvalCriteria(0.9, 0.9, 1.0).above_hm_threshold


def test_exact_distribution_fq_and_leaky(rng):
    n, x = 4, 0b1011
    f = BoolFunc.random(n, rng)
    fq = LearnerOutput(build_ux(x, n), FULL_X, 1)
    assert tv_distance(exact_generator_distribution(fq, f), concept_distribution(f, x)) <= 1e-9
    pipe = MeasureFirstProtocol(Strategy.leaky(m_budget=16)).train(n, x, FSource.UNIFORM, rng)
    assert tv_distance(exact_generator_distribution(pipe, f, rng), concept_distribution(f, x)) <= 1e-9


def test_exact_distribution_constant_generator(rng):
    d = exact_generator_distribution(ConstantGenerator(3, 5), BoolFunc.random(3, rng))
    assert d.as_dict() == {ConceptSample(3, 5, 0, 0).code: 1.0}


def test_exact_mode_missing(rng):
    with pytest.raises(NoExactModeError):
        exact_generator_distribution(SampleOnly(), BoolFunc.random(2, rng))
    with pytest.raises(NoExactModeError):
        exact_generator_distribution(MfGenerator(2, 1, "shadow"), BoolFunc.random(2, rng))


def test_empirical_concentrates(rng):
    n, x = 2, 3
    f = BoolFunc.random(n, rng)
    fq = LearnerOutput(build_ux(x, n), FULL_X, 1)
    emp = empirical_distribution(fq, f, 1_000_000, rng)
    assert tv_distance(emp, concept_distribution(f, x)) <= 0.01


def test_empirical_single_trial_and_reproducible(rng):
    f = BoolFunc.random(3, rng)
    fq = LearnerOutput(build_ux(5, 3), FULL_X, 1)
    one = empirical_distribution(fq, f, 1, rng)
    assert len(one.as_dict()) == 1
    a = empirical_distribution(fq, f, 500, np.random.default_rng(4))
    b = empirical_distribution(fq, f, 500, np.random.default_rng(4))
    assert a.as_dict() == b.as_dict()
    slow = empirical_distribution(SampleOnly(), f, 3, rng)
    assert slow.as_dict() == {ConceptSample(3, 1, 0, 0).code: 1.0}


@pytest.mark.parametrize("eps, delta, p", [(0.0, 1.0, 1.0), (0.99, 1.0, 1.0), (0.5, 0.5, 0.5)])
def test_fq_protocol_always_learnable(eps, delta, p, rng):
    rep = evaluate_learnability(FullyQuantumProtocol(), 0b101, FSource.UNIFORM, EvalCriteria(eps, delta, p),
                                20, 3, rng, n=3)
    assert rep.verdict and rep.delta_hat == [1.0, 1.0, 1.0]
    assert max(max(r) for r in rep.tv) <= 1e-9


def test_leaky_protocol_learnable(rng):
    for n in (2, 5, 8):
        proto = MeasureFirstProtocol(Strategy.leaky(m_budget=2**n))
        rep = evaluate_learnability(proto, 1, FSource.UNIFORM, EvalCriteria(0.99, 1.0, 1.0), 10, 2, rng, n=n)
        assert rep.verdict and rep.good_fraction == 1.0


def test_shadow_protocol_fails_strict_criteria():
    n = 8
    ell = default_ell(n)
    proto = MeasureFirstProtocol(Strategy.shadow(ell, m_budget=3 * n * ell))
    for seed in range(3):
        rep = evaluate_learnability(proto, 0b10110101, FSource.UNIFORM, EvalCriteria(0.95, 0.9, 0.5),
                                    10, 2, np.random.default_rng(seed), n=n)
        assert not rep.verdict


def test_prf_functions_in_evaluation(rng):
    rep = evaluate_learnability(FullyQuantumProtocol(), 3, FSource.PRF, EvalCriteria(0.5, 0.5, 0.5), 5, 1, rng, n=4)
    assert rep.verdict and rep.config["f_source"] == "prf"


def test_empirical_mode_report(rng):
    rep = evaluate_learnability(FullyQuantumProtocol(), 3, FSource.UNIFORM, EvalCriteria(0.5, 0.5, 0.5),
                                3, 1, rng, n=2, exact=False, shots=20_000)
    assert max(rep.tv[0]) < 0.05


def test_separation_fq_zero_and_deterministic():
    cfg = SeparationConfig(n_values=(2, 4), f_trials=8, seed=3)
    a = separation_experiment(cfg)
    b = separation_experiment(SeparationConfig(n_values=(2, 4), f_trials=8, seed=3, threads=3))
    assert a.rows_csv() == b.rows_csv() and a.summary_csv() == b.summary_csv()
    assert a.rows_csv().splitlines()[0] == ",".join(CSV_COLUMNS)
    fq = [r for r in a.rows if r["protocol"] == "fq"]
    assert fq and all(r["tv_exact_or_emp"] <= 1e-9 for r in fq)
    leaky = [r for r in a.rows if r["strategy"] == "leaky"]
    assert leaky and all(r["tv_exact_or_emp"] <= 1e-9 for r in leaky)
    c = separation_experiment(SeparationConfig(n_values=(2, 4), f_trials=8, seed=4))
    assert c.rows_csv() != a.rows_csv()


def test_separation_arms_share_draws():
    res = separation_experiment(SeparationConfig(n_values=(3,), f_trials=4, seed=1))
    by_arm = {}
    for r in res.rows:
        by_arm.setdefault(r["strategy"], []).append(r["trial"])
    assert len({tuple(v) for v in by_arm.values()}) == 1


def test_separation_leaky_skipped_above_cap():
    cfg = SeparationConfig(n_values=(9,), strategies=("leaky",), f_trials=1, leaky_max_n=8)
    assert [a.strategy_id for a in cfg.arms(9)] == ["quantum"]


def test_separation_parity_labels():
    res = separation_experiment(SeparationConfig(n_values=(3,), f_trials=3, strategies=("leaky",),
                                                 label_mode=LabelMode.PARITY))
    assert [s["failures"] for s in res.summary] == [0, 0]
    assert all(r["tv_exact_or_emp"] <= 1e-9 for r in res.rows)


class _OneLabelConfig(SeparationConfig):
    def arms(self, n):
        return [FullyQuantumProtocol(n_examples=1, label_mode=LabelMode.PARITY)]


def test_separation_counts_training_failures():
    # a single parity label cannot pin down x at n = 3
    res = separation_experiment(_OneLabelConfig(n_values=(3,), f_trials=2, protocol_trials=4))
    failures = res.summary[0]["failures"]
    assert failures > 0
    assert len(res.rows) == 2 * (4 - failures)
