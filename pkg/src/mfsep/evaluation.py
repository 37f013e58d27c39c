"""Learnability verdicts and the fully-quantum vs measure-first comparison.

A trained protocol passes for one function ``f`` when the total-variation
distance between its output distribution and the true concept distribution
is at most ``1 - eps``. Over a sample of functions the passing fraction is
``delta_hat``; over repeated training runs the fraction with
``delta_hat >= delta`` is ``p_hat``, and the verdict is ``p_hat >= p_succ``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .concepts import (
    EXACT_MAX_N,
    FULL_X,
    BoolFunc,
    Distribution,
    FSource,
    LabelMode,
    as_int,
    concept_distribution,
    generate_training_data,
    tv_distance,
)
from .errors import CapacityError, ConfigError, MfsepError, NoExactModeError
from .fqlearner import LearnerOutput, fully_quantum_learn
from .gf2bits import BitVec
from .mflearner import (
    MeasureFirstPipeline,
    MfGenerator,
    Strategy,
    StrategyKind,
    default_ell,
    measure_first_learn,
    measure_training_data,
)
from .prfcrypto import DEFAULT_SPEC, sample_key
from .seeding import derive_rng, derive_seed
from .stats import wilson_interval

log = logging.getLogger(__name__)

__all__ = [
    "HM_THRESHOLD",
    "EvalCriteria",
    "EvalReport",
    "FullyQuantumProtocol",
    "MeasureFirstProtocol",
    "exact_generator_distribution",
    "empirical_distribution",
    "empirical_tv_bound",
    "evaluate_learnability",
    "SeparationConfig",
    "separation_experiment",
    "CSV_COLUMNS",
]

HM_THRESHOLD = 7 / 8


@dataclass(frozen=True)
class EvalCriteria:
    eps: float
    delta: float
    p_succ: float

    def __post_init__(self):
        for name in ("eps", "delta", "p_succ"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} is outside [0, 1]")

    @property
    def tv_threshold(self) -> float:
        return 1.0 - self.eps

    @property
    def above_hm_threshold(self) -> bool:
        """``eps * delta > 7/8``: the regime ruled out for measure-first protocols."""
        return self.eps * self.delta > HM_THRESHOLD

    def above_prf_threshold(self, c: float) -> bool:
        return self.eps * self.delta * self.p_succ > c

    def good(self, tv: float) -> bool:
        return tv <= 1.0 - self.eps


# --- protocols -----------------------------------------------------------


@dataclass(frozen=True)
class FullyQuantumProtocol:
    n_examples: int = 1
    label_mode: LabelMode = FULL_X
    ell: int = 1

    name = "fq"
    strategy_id = "quantum"

    def record_length(self, n: int) -> int | None:
        return None

    def train(self, n: int, x: int, f_source: FSource, rng: np.random.Generator) -> LearnerOutput:
        data = generate_training_data(n, x, self.n_examples, self.ell, self.label_mode, f_source, rng)
        return fully_quantum_learn(data)


@dataclass(frozen=True)
class MeasureFirstProtocol:
    strategy: Strategy
    n_examples: int = 1
    label_mode: LabelMode = FULL_X

    name = "mf"

    @property
    def strategy_id(self) -> str:
        return self.strategy.strategy_id

    @property
    def ell(self) -> int:
        return self.strategy.ell

    def record_length(self, n: int) -> int:
        return self.strategy.record_length(n)

    def train(self, n: int, x: int, f_source: FSource, rng: np.random.Generator) -> MeasureFirstPipeline:
        data_rng, meas_rng = rng.spawn(2)
        data = generate_training_data(
            n, x, self.n_examples, self.strategy.ell, self.label_mode, f_source, data_rng
        )
        measured = measure_training_data(self.strategy, data, meas_rng)
        return MeasureFirstPipeline(self.strategy, measure_first_learn(self.strategy, measured))


# --- distributions of trained generators ---------------------------------


def exact_generator_distribution(generator, f: BoolFunc, rng=None, rep=None) -> Distribution:
    """Exact output distribution of a trained generator on ``f``.

    Measure-first generators are conditioned on a record: pass ``rep``
    for a bare :class:`MfGenerator`; a :class:`MeasureFirstPipeline` draws
    one from ``rng``. Raises :class:`NoExactModeError` when the generator
    only supports sampling.
    """
    if f.n > EXACT_MAX_N:
        raise NoExactModeError(f"exact mode is capped at n={EXACT_MAX_N}; sample instead")
    if isinstance(generator, MfGenerator):
        if rep is None:
            raise NoExactModeError("a bare measure-first generator needs a record")
        return generator.exact_distribution(rep)
    method = getattr(generator, "exact_distribution", None)
    if method is None:
        raise NoExactModeError(f"{type(generator).__name__} has no exact mode; sample instead")
    if isinstance(generator, MeasureFirstPipeline):
        if rng is None:
            raise ValueError("a measure-first pipeline needs rng to draw its record")
        return method(f, rng)
    return method(f)


def empirical_tv_bound(nbits: int, trials: int) -> float:
    return float(np.sqrt((1 << nbits) / trials))


def empirical_distribution(generator, f: BoolFunc, trials: int, rng: np.random.Generator) -> Distribution:
    """Frequency vector of ``trials`` independent draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    nbits = 2 * f.n + 1
    many = getattr(generator, "sample_many", None)
    if many is not None:
        codes = many(f, trials, rng)
    else:
        codes = np.fromiter((generator.sample(f, rng).code for _ in range(trials)), dtype=np.int64, count=trials)
    log.debug("empirical distribution from %d draws; TV bound %.3g", trials, empirical_tv_bound(nbits, trials))
    return Distribution.from_arrays(nbits, codes, np.full(trials, 1.0 / trials))


def _tv_for(trained, f: BoolFunc, x: int, rng, exact: bool, shots: int) -> float:
    target = concept_distribution(f, x)
    if exact:
        est = exact_generator_distribution(trained, f, rng)
    else:
        est = empirical_distribution(trained, f, shots, rng)
    return tv_distance(est, target)


@dataclass
class EvalReport:
    criteria: EvalCriteria
    tv: list[list[float]]
    indicators: list[list[bool]]
    delta_hat: list[float]
    p_hat: float
    delta_ci: tuple[float, float]
    p_ci: tuple[float, float]
    verdict: bool
    config: dict = field(default_factory=dict)

    @property
    def good_fraction(self) -> float:
        """Pooled fraction of sampled functions in the good set."""
        flat = [v for row in self.indicators for v in row]
        return float(np.mean(flat))

    def to_json(self) -> str:
        d = asdict(self)
        d["good_fraction"] = self.good_fraction
        return json.dumps(d, sort_keys=True, default=str)


def _draw_function(n: int, f_source: FSource, rng: np.random.Generator) -> BoolFunc:
    if FSource(f_source) is FSource.UNIFORM:
        return BoolFunc.random(n, rng)
    return BoolFunc.from_prf(n, sample_key(DEFAULT_SPEC, rng), DEFAULT_SPEC)


def evaluate_learnability(
    protocol,
    x,
    f_source: FSource,
    criteria: EvalCriteria,
    f_trials: int,
    protocol_trials: int,
    rng: np.random.Generator,
    *,
    n: int | None = None,
    exact: bool = True,
    shots: int = 10_000,
) -> EvalReport:
    """Train ``protocol_trials`` times; score each run on ``f_trials`` fresh functions."""
    if isinstance(x, BitVec):
        n = x.len
    if n is None:
        raise ValueError("n is required when x is an int")
    x = as_int(x, n)
    if f_trials < 1 or protocol_trials < 1:
        raise ConfigError("f_trials and protocol_trials must be >= 1")
    tvs, inds = [], []
    for run_rng in rng.spawn(protocol_trials):
        train_rng, eval_rng = run_rng.spawn(2)
        trained = protocol.train(n, x, f_source, train_rng)
        row = []
        for frng in eval_rng.spawn(f_trials):
            f = _draw_function(n, f_source, frng)
            row.append(_tv_for(trained, f, x, frng, exact, shots))
        tvs.append(row)
        inds.append([criteria.good(tv) for tv in row])
    delta_hat = [float(np.mean(r)) for r in inds]
    passed = sum(d >= criteria.delta for d in delta_hat)
    pooled = sum(sum(r) for r in inds)
    p_hat = passed / protocol_trials
    return EvalReport(
        criteria=criteria,
        tv=tvs,
        indicators=inds,
        delta_hat=delta_hat,
        p_hat=p_hat,
        delta_ci=wilson_interval(pooled, protocol_trials * f_trials),
        p_ci=wilson_interval(passed, protocol_trials),
        verdict=p_hat >= criteria.p_succ,
        config={
            "protocol": protocol.name,
            "strategy": protocol.strategy_id,
            "n": n,
            "x": x,
            "f_source": FSource(f_source).value,
            "f_trials": f_trials,
            "protocol_trials": protocol_trials,
            "mode": "exact" if exact else "empirical",
            "success_reading": "fraction of independent training runs meeting the delta clause",
        },
    )


# --- separation experiment -----------------------------------------------

CSV_COLUMNS = ["n", "protocol", "strategy", "ell", "m", "f_source", "trial",
               "tv_exact_or_emp", "indicator", "seed"]
SUMMARY_COLUMNS = ["n", "protocol", "strategy", "ell", "m", "tv_median", "tv_q25",
                   "tv_q75", "delta_hat", "p_hat", "p_ci_low", "p_ci_high", "failures"]


@dataclass(frozen=True)
class SeparationConfig:
    n_values: tuple[int, ...] = (2, 4, 6, 8)
    strategies: tuple[str, ...] = ("shadow", "fourier", "leaky")
    ell: int | None = None
    m_budget: int | None = None
    f_trials: int = 100
    protocol_trials: int = 1
    f_source: FSource = FSource.UNIFORM
    label_mode: LabelMode = FULL_X
    criteria: EvalCriteria = EvalCriteria(0.5, 0.5, 0.5)
    seed: int = 0
    leaky_max_n: int = 8
    exact: bool = True
    shots: int = 10_000
    threads: int = 1

    def ell_for(self, n: int) -> int:
        return default_ell(n) if self.ell is None else self.ell

    def budget_for(self, n: int) -> int:
        return 3 * n * self.ell_for(n) if self.m_budget is None else self.m_budget

    def arms(self, n: int) -> list:
        out: list = [FullyQuantumProtocol(label_mode=self.label_mode,
                                          n_examples=1 if self.label_mode is FULL_X else n + 10)]
        for sid in self.strategies:
            kind = StrategyKind(sid)
            if kind is StrategyKind.LEAKY:
                if n > self.leaky_max_n:
                    continue
                strategy = Strategy.leaky(1, m_budget=1 << n)
            else:
                ell = self.ell_for(n)
                strategy = Strategy(kind, ell, m_budget=self.budget_for(n))
            n_ex = 1 if self.label_mode is FULL_X else n + 10
            out.append(MeasureFirstProtocol(strategy, n_examples=n_ex, label_mode=self.label_mode))
        return out


@dataclass
class SeparationResult:
    rows: list[dict]
    summary: list[dict]
    timings: dict[str, float]

    def rows_csv(self) -> str:
        return _to_csv(self.rows, CSV_COLUMNS)

    def summary_csv(self) -> str:
        return _to_csv(self.summary, SUMMARY_COLUMNS)

    def median_tv(self, n: int, strategy: str) -> float:
        for s in self.summary:
            if s["n"] == n and s["strategy"] == strategy:
                return s["tv_median"]
        raise KeyError((n, strategy))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _to_csv(rows: Sequence[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def separation_experiment(config: SeparationConfig) -> SeparationResult:
    """Run every arm on shared (x, f) draws and tabulate per-trial TV.

    For a given ``(n, protocol trial, f trial)`` all arms see the same hidden
    string and the same function; only their own measurement randomness
    differs. Every stream comes from :func:`derive_seed`, so results do not
    depend on ``threads``.
    """
    rows: list[dict] = []
    summary: list[dict] = []
    timings: dict[str, float] = {}
    crit = config.criteria
    for n in config.n_values:
        if config.exact and n > EXACT_MAX_N:
            raise CapacityError(f"exact mode supports n <= {EXACT_MAX_N}")
        for arm in config.arms(n):
            t0 = time.perf_counter()
            arm_rows: list[dict] = []
            deltas = []
            failures = 0
            for pt in range(config.protocol_trials):
                x_rng = derive_rng(config.seed, "x", n, pt)
                x = int(x_rng.integers(1, 1 << n))
                try:
                    trained = arm.train(n, x, config.f_source,
                                        derive_rng(config.seed, "train", arm.strategy_id, n, pt))
                except MfsepError as exc:
                    # a run that cannot train scores zero good functions
                    log.warning("n=%d %s trial %d: training failed: %s", n, arm.strategy_id, pt, exc)
                    failures += 1
                    deltas.append(0.0)
                    continue

                def one(ft, pt=pt, trained=trained, x=x):
                    f = _draw_function(n, config.f_source, derive_rng(config.seed, "f", n, pt, ft))
                    seed = derive_seed(config.seed, "eval", arm.strategy_id, n, pt, ft)
                    tv = _tv_for(trained, f, x, np.random.default_rng(seed), config.exact, config.shots)
                    return ft, tv, seed

                if config.threads > 1:
                    with ThreadPoolExecutor(config.threads) as pool:
                        results = list(pool.map(one, range(config.f_trials)))
                else:
                    results = [one(ft) for ft in range(config.f_trials)]
                results.sort()
                inds = []
                for ft, tv, seed in results:
                    ind = crit.good(tv)
                    inds.append(ind)
                    arm_rows.append({
                        "n": n, "protocol": arm.name, "strategy": arm.strategy_id,
                        "ell": arm.ell, "m": arm.record_length(n),
                        "f_source": FSource(config.f_source).value,
                        "trial": pt * config.f_trials + ft,
                        "tv_exact_or_emp": tv, "indicator": ind, "seed": seed,
                    })
                deltas.append(float(np.mean(inds)))
            tv_arr = np.array([r["tv_exact_or_emp"] for r in arm_rows])
            q25, med, q75 = np.quantile(tv_arr, [0.25, 0.5, 0.75]) if tv_arr.size else (np.nan,) * 3
            passed = sum(d >= crit.delta for d in deltas)
            lo, hi = wilson_interval(passed, len(deltas))
            summary.append({
                "n": n, "protocol": arm.name, "strategy": arm.strategy_id,
                "ell": arm.ell, "m": arm.record_length(n),
                "tv_median": float(med),
                "tv_q25": float(q25),
                "tv_q75": float(q75),
                "delta_hat": float(np.mean(deltas)),
                "p_hat": passed / len(deltas),
                "p_ci_low": lo, "p_ci_high": hi,
                "failures": failures,
            })
            rows.extend(arm_rows)
            timings[f"{arm.strategy_id}/n={n}"] = time.perf_counter() - t0
            log.info("n=%d %s: median TV %.4f", n, arm.strategy_id, summary[-1]["tv_median"])
    return SeparationResult(rows, summary, timings)
