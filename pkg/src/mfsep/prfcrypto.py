"""Keyed pseudorandom Boolean functions and the PRF-vs-random distinguisher.

The function family is the Speck64/128 block cipher (27 rounds, 32-bit
words) keyed by a uniform 128-bit key, with the input ``y`` placed in the low
bits of the 64-bit plaintext, the input length ``n`` in the top byte for
domain separation, and the least significant ciphertext bit as output. It is
an efficiently computable keyed family; security against quantum-query
adversaries is an assumption and is not tested here beyond a statistical
battery.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, MfsepError
from .stats import wilson_interval

log = logging.getLogger(__name__)

__all__ = [
    "PrfSpec",
    "DEFAULT_SPEC",
    "sample_key",
    "prf_eval",
    "prf_eval_many",
    "prf_table",
    "speck_encrypt",
    "key_words",
    "DistinguisherReport",
    "distinguisher_run",
    "estimate_advantage",
]

_ROUNDS = 27
_MASK32 = np.uint32(0xFFFFFFFF)


@dataclass(frozen=True)
class PrfSpec:
    key_bits: int = 128
    construction: str = "speck64-128-lsb"
    version: str = "1"

    def __post_init__(self):
        if self.key_bits != 128 or self.construction != "speck64-128-lsb":
            raise ConfigError(f"unsupported PRF construction {self}")


DEFAULT_SPEC = PrfSpec()


def _ror(v, r):
    return (v >> np.uint32(r)) | (v << np.uint32(32 - r))


def _rol(v, r):
    return (v << np.uint32(r)) | (v >> np.uint32(32 - r))


def key_words(key: int) -> np.ndarray:
    """128-bit key -> words ``(k0, l0, l1, l2)``, least significant first."""
    return np.array([(key >> (32 * i)) & 0xFFFFFFFF for i in range(4)], dtype=np.uint32)


def _round_keys(words: np.ndarray) -> list[np.ndarray]:
    # words has shape (4, ...); every round key broadcasts over the trailing axes
    k = words[0]
    ls = [words[1], words[2], words[3]]
    out = [k]
    with np.errstate(over="ignore"):
        for i in range(_ROUNDS - 1):
            l_new = ((k + _ror(ls[i], 8)) & _MASK32) ^ np.uint32(i)
            ls.append(l_new)
            k = _rol(k, 3) ^ l_new
            out.append(k)
    return out


def speck_encrypt(key, hi, lo) -> tuple[np.ndarray, np.ndarray]:
    """Speck64/128 on arrays of (high word, low word) plaintext halves.

    ``key`` is a 128-bit integer holding words ``(k0, l0, l1, l2)`` from
    least to most significant (the ordering of the published test vectors),
    or an array of such words with shape ``(4, ...)`` broadcasting against
    the plaintext.
    """
    words = key_words(key) if isinstance(key, (int, np.integer)) else np.asarray(key, dtype=np.uint32)
    x = np.asarray(hi, dtype=np.uint32).copy()
    y = np.asarray(lo, dtype=np.uint32).copy()
    with np.errstate(over="ignore"):
        for rk in _round_keys(words):
            x = ((_ror(x, 8) + y) & _MASK32) ^ rk
            y = _rol(y, 3) ^ x
    return x, y


def sample_key(spec: PrfSpec, rng: np.random.Generator) -> int:
    """Uniform key of ``spec.key_bits`` bits."""
    return int.from_bytes(rng.bytes(spec.key_bits // 8), "little")


def prf_eval_many(spec: PrfSpec, key, ys, n: int) -> np.ndarray:
    """Output bits for an array of inputs; ``key`` may be an int or a word array."""
    ys = np.asarray(ys, dtype=np.uint64)
    if n > 56:
        raise ValueError("inputs longer than 56 bits are not supported")
    block = ys | (np.uint64(n) << np.uint64(56))
    hi = (block >> np.uint64(32)).astype(np.uint32)
    lo = (block & np.uint64(0xFFFFFFFF)).astype(np.uint32)
    cx, _ = speck_encrypt(key, hi, lo)
    return (cx & np.uint32(1)).astype(np.uint8)


def prf_eval(spec: PrfSpec, key: int, y, n: int | None = None) -> int:
    """One output bit. ``y`` is an int (with ``n`` given) or a BitVec."""
    if n is None:
        n, y = y.len, y.value
    if not 0 <= y < (1 << n):
        raise ValueError(f"input {y} out of range for n={n}")
    return int(prf_eval_many(spec, key, [y], n)[0])


def prf_table(spec: PrfSpec, key: int, n: int) -> np.ndarray:
    return prf_eval_many(spec, key, np.arange(1 << n, dtype=np.uint64), n)


# --- distinguisher -------------------------------------------------------


@dataclass
class DistinguisherReport:
    n: int
    strategy: str
    trials: int
    p_prf: float
    p_rand: float
    ci_prf: tuple[float, float]
    ci_rand: tuple[float, float]
    gap_ci: tuple[float, float]
    failures: int = 0
    spec_version: str = DEFAULT_SPEC.version
    outcomes_prf: list[int] = field(default_factory=list, repr=False)
    outcomes_rand: list[int] = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.p_prf - self.p_rand

    @property
    def gap_consistent_with_zero(self) -> bool:
        lo, hi = self.gap_ci
        return lo <= 0.0 <= hi

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("outcomes_prf")
        d.pop("outcomes_rand")
        d["gap"] = self.gap
        d["ci"] = {"prf": d.pop("ci_prf"), "rand": d.pop("ci_rand"), "gap": d.pop("gap_ci")}
        return json.dumps(d, sort_keys=True)


def distinguisher_run(
    oracle,
    strategy,
    rng: np.random.Generator,
    learner: Callable | None = None,
    n_examples: int = 1,
    spec: PrfSpec = DEFAULT_SPEC,
) -> int:
    """One run of the six-step distinguisher with oracle access to ``oracle``.

    (1) draw x uniformly, (2) build measured training data from fresh
    PRF-keyed functions, (3) train, (4) prepare the oracle's phase state,
    (5) measure it with the same strategy, (6) output 1 iff the generated
    sample satisfies the relation for the oracle function.
    Training failures are logged and count as output 0.
    """
    return _run(oracle, strategy, rng, learner, n_examples, spec)[0]


def _run(oracle, strategy, rng, learner, n_examples, spec) -> tuple[int, bool]:
    from .concepts import F_SOURCE_PRF, FULL_X, generate_training_data, prepare_phase_state
    from .concepts import in_relation
    from .mflearner import measure_first_learn, measure_state, measure_training_data

    learner = learner or measure_first_learn
    n = oracle.n
    x = int(rng.integers(0, 1 << n))
    data = generate_training_data(
        n, x, n_examples, strategy.ell, FULL_X, F_SOURCE_PRF, rng, spec=spec,
        allow_zero=True,
    )
    measured = measure_training_data(strategy, data, rng)
    try:
        gen = learner(strategy, measured)
    except MfsepError as exc:
        log.warning("training failed in distinguisher run: %s", exc)
        return 0, True
    state = prepare_phase_state(oracle)
    rep = measure_state(strategy, state, rng)
    sample = gen.generate(rep, rng)
    return int(sample.x == x and in_relation(oracle, x, sample.y, sample.b)), False


def estimate_advantage(
    spec: PrfSpec,
    strategy,
    n: int,
    trials: int,
    rng: np.random.Generator,
    learner: Callable | None = None,
    n_examples: int = 1,
) -> DistinguisherReport:
    """Acceptance rates of the distinguisher on PRF oracles and uniform oracles."""
    from .concepts import BoolFunc

    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    prf_rng, rand_rng = rng.spawn(2)
    out_prf, out_rand = [], []
    failures = 0
    for r in prf_rng.spawn(trials):
        f = BoolFunc.from_prf(n, sample_key(spec, r), spec)
        bit, failed = _run(f, strategy, r, learner, n_examples, spec)
        out_prf.append(bit)
        failures += failed
    for r in rand_rng.spawn(trials):
        f = BoolFunc.random(n, r)
        bit, failed = _run(f, strategy, r, learner, n_examples, spec)
        out_rand.append(bit)
        failures += failed
    k_prf, k_rand = sum(out_prf), sum(out_rand)
    p1, p2 = k_prf / trials, k_rand / trials
    half = 1.96 * np.sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / trials)
    return DistinguisherReport(
        n=n,
        strategy=strategy.strategy_id,
        trials=trials,
        p_prf=p1,
        p_rand=p2,
        ci_prf=wilson_interval(k_prf, trials),
        ci_rand=wilson_interval(k_rand, trials),
        gap_ci=(p1 - p2 - half, p1 - p2 + half),
        failures=failures,
        spec_version=spec.version,
        outcomes_prf=out_prf,
        outcomes_rand=out_rand,
    )
