"""Measure-first pipelines: a fixed measurement strategy, then classical learning.

Strategies act on each of the ``ell`` copies separately and know nothing about
``x`` or the labels; :func:`measure_state` takes no label argument.

Record layouts (bit offsets into the flat m-bit record):

* ``pauli3-v1`` (random Pauli shadows): copy ``c``, qubit ``q`` occupies bits
  ``3*(c*n + q) + {0, 1}`` for the basis (0 = X, 1 = Y, 2 = Z) and
  ``3*(c*n + q) + 2`` for the outcome.  ``m = 3 n ell``.
* ``fourier-v1`` (Hadamard-basis sampling): bit ``c*n + q``.  ``m = n ell``.
* ``table-v1`` (leaky control): bit ``y`` is ``f(y)``.  ``m = 2^n``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import qsim
from .concepts import (
    BoolFunc,
    ConceptSample,
    Distribution,
    TrainingExample,
    prepare_phase_state,
)
from .errors import BudgetError, DimensionError, StrategyMismatchError
from .fqlearner import recover_x
from .gf2bits import BitVec, parity

__all__ = [
    "StrategyKind",
    "Strategy",
    "ClassicalRep",
    "MfGenerator",
    "MeasureFirstPipeline",
    "default_ell",
    "measure",
    "measure_state",
    "measure_training_data",
    "shadow_estimate_parity",
    "snapshot_parity_estimates",
    "measure_first_learn",
    "mf_generate",
]

_LAYOUTS = {"shadow": "pauli3-v1", "fourier": "fourier-v1", "leaky": "table-v1"}

# basis-change unitaries applied before a Z measurement: X, Y, Z
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_ROTATIONS = np.stack([
    _H,
    _H @ np.diag([1, -1j]),
    np.eye(2, dtype=np.complex128),
])

# amplitudes per chunk when batching copies or edge estimates
_CHUNK = 1 << 21


class StrategyKind(str, Enum):
    SHADOW = "shadow"
    FOURIER = "fourier"
    LEAKY = "leaky"


def default_ell(n: int) -> int:
    return 10 * n * n


@dataclass(frozen=True)
class Strategy:
    """A measurement strategy, fixed before any label or target is seen.

    ``m_budget`` caps the record length; the leaky strategy refuses to run
    without one large enough to hold the whole truth table. ``groups > 1``
    makes the shadow sign decision a median of that many block means instead
    of the plain mean.
    """

    kind: StrategyKind
    ell: int
    m_budget: int | None = None
    groups: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.ell < 1:
            raise ValueError("ell must be >= 1")

    @classmethod
    def shadow(cls, ell: int, **kw) -> "Strategy":
        return cls(StrategyKind.SHADOW, ell, **kw)

    @classmethod
    def fourier(cls, ell: int, **kw) -> "Strategy":
        return cls(StrategyKind.FOURIER, ell, **kw)

    @classmethod
    def leaky(cls, ell: int = 1, m_budget: int | None = None) -> "Strategy":
        return cls(StrategyKind.LEAKY, ell, m_budget=m_budget)

    @property
    def strategy_id(self) -> str:
        return self.kind.value

    def record_length(self, n: int) -> int:
        if self.kind is StrategyKind.SHADOW:
            return 3 * n * self.ell
        if self.kind is StrategyKind.FOURIER:
            return n * self.ell
        return 1 << n

    def check_budget(self, n: int) -> int:
        m = self.record_length(n)
        if self.kind is StrategyKind.LEAKY and self.m_budget is None:
            raise BudgetError("the leaky strategy needs an explicit m_budget override")
        if self.m_budget is not None and m > self.m_budget:
            raise BudgetError(f"{self.strategy_id} needs m={m} bits, budget is {self.m_budget}")
        return m


@dataclass(frozen=True, eq=False)
class ClassicalRep:
    """The m-bit record produced by a strategy, stored as a 0/1 array."""

    strategy_id: str
    n: int
    ell: int
    bits: np.ndarray

    @property
    def m(self) -> int:
        return int(self.bits.size)

    @property
    def layout(self) -> str:
        return _LAYOUTS[self.strategy_id]

    def to_bitvec(self) -> BitVec:
        return BitVec(self.m, int.from_bytes(self.to_bytes(), "little"))

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits, bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, strategy_id: str, n: int, ell: int, m: int, payload: bytes) -> "ClassicalRep":
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
        if bits.size < m or bits[m:].any():
            raise DimensionError("payload does not hold an m-bit record")
        return cls(strategy_id, n, ell, bits[:m].copy())

    def to_json_obj(self) -> dict:
        return {
            "strategy": self.strategy_id,
            "n": self.n,
            "ell": self.ell,
            "m": self.m,
            "bits": self.to_bitvec().hex(),
            "layout": self.layout,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, d: dict) -> "ClassicalRep":
        if d["layout"] != _LAYOUTS[d["strategy"]]:
            raise ValueError(f"unknown layout {d['layout']!r} for {d['strategy']}")
        m = d["m"]
        v = BitVec.from_hex(d["bits"], m)
        return cls.from_bytes(d["strategy"], d["n"], d["ell"], m, v.value.to_bytes((m + 7) // 8, "little"))

    @classmethod
    def from_json(cls, text: str) -> "ClassicalRep":
        return cls.from_json_obj(json.loads(text))

    # structured views of the record

    def shadow_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(bases, outcomes), each shaped ``(ell, n)``."""
        self._expect("shadow")
        rec = self.bits.reshape(self.ell, self.n, 3)
        return rec[..., 0] | (rec[..., 1] << 1), rec[..., 2]

    def fourier_outcomes(self) -> np.ndarray:
        self._expect("fourier")
        rec = self.bits.reshape(self.ell, self.n).astype(np.int64)
        return (rec << np.arange(self.n)).sum(axis=1)

    def table(self) -> np.ndarray:
        self._expect("leaky")
        return self.bits

    def _expect(self, sid: str) -> None:
        if self.strategy_id != sid:
            raise StrategyMismatchError(f"expected a {sid} record, got {self.strategy_id}")


def _bits_of(values: np.ndarray, n: int) -> np.ndarray:
    return ((values[..., None] >> np.arange(n)) & 1).astype(np.uint8)


def _measure_pauli(state: qsim.StateVector, bases: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-copy product-basis measurement; returns outcome labels, one per copy."""
    n = state.n
    N = 1 << n
    copies = bases.shape[0]
    out = np.empty(copies, dtype=np.int64)
    step = max(1, _CHUNK // N)
    for lo in range(0, copies, step):
        b = bases[lo:lo + step]
        psi = np.broadcast_to(state.amps, (b.shape[0], N)).copy()
        for q in range(n):
            v = psi.reshape(b.shape[0], -1, 2, 1 << q)
            psi = np.einsum("cij,cajb->caib", _ROTATIONS[b[:, q]], v).reshape(b.shape[0], N)
        cdf = np.cumsum(np.abs(psi) ** 2, axis=1)
        cdf /= cdf[:, -1:]
        u = rng.random(b.shape[0])
        out[lo:lo + step] = np.minimum((cdf < u[:, None]).sum(axis=1), N - 1)
    return out


def measure_state(strategy: Strategy, state: qsim.StateVector, rng: np.random.Generator) -> ClassicalRep:
    """Apply the strategy to ``strategy.ell`` copies of ``state``."""
    n, ell = state.n, strategy.ell
    strategy.check_budget(n)
    kind = strategy.kind
    if kind is StrategyKind.SHADOW:
        bases = rng.integers(0, 3, size=(ell, n))
        outcomes = _bits_of(_measure_pauli(state, bases, rng), n)
        rec = np.stack([bases & 1, bases >> 1, outcomes], axis=-1).astype(np.uint8)
        bits = rec.reshape(-1)
    elif kind is StrategyKind.FOURIER:
        rotated = qsim.apply_all(state, [qsim.H(q) for q in range(n)])
        bits = _bits_of(qsim.sample_many(rotated, ell, rng), n).reshape(-1)
    else:
        # control arm: reads the sign pattern straight off the simulator
        bits = (state.amps.real < 0).astype(np.uint8)
    return ClassicalRep(strategy.strategy_id, n, ell, bits)


def measure(strategy: Strategy, f: BoolFunc, ell: int, rng: np.random.Generator) -> ClassicalRep:
    if ell != strategy.ell:
        raise ValueError(f"strategy is configured for ell={strategy.ell}, got {ell}")
    return measure_state(strategy, prepare_phase_state(f), rng)


def measure_training_data(
    strategy: Strategy, data: Sequence[TrainingExample], rng: np.random.Generator
) -> list[TrainingExample]:
    """Replace each example's quantum handle by its classical record."""
    out = []
    for ex, child in zip(data, rng.spawn(len(data))):
        rep = measure(strategy, ex.f, ex.ell, child)
        out.append(TrainingExample(n=ex.n, ell=ex.ell, label=ex.label, rep=rep))
    return out


# --- shadow estimator ----------------------------------------------------


def snapshot_parity_estimates(rep: ClassicalRep, ys, x: int) -> np.ndarray:
    """Single-snapshot estimates of ``<|y><y^x| + h.c.>``, shape ``(ell, len(ys))``.

    Each snapshot is the inverted local channel ``prod_j (3 |s_j><s_j| - I)``
    in the measured bases; the observable's matrix element factorizes over
    qubits, and qubits where x is set pick up off-diagonal elements.
    """
    bases, outcomes = rep.shadow_arrays()
    n = rep.n
    ys = np.atleast_1d(np.asarray(ys, dtype=np.int64))
    lam = 1.0 - 2.0 * outcomes.astype(np.float64)          # (ell, n)
    xbits = (x >> np.arange(n)) & 1                         # (n,)
    est = np.empty((rep.ell, ys.size))
    step = max(1, _CHUNK // max(1, rep.ell * n))
    for lo in range(0, ys.size, step):
        ybits = ((ys[lo:lo + step, None] >> np.arange(n)) & 1)  # (k, n)
        sgn = 1.0 - 2.0 * ybits
        B = bases[:, None, :]
        L = lam[:, None, :]
        diag = np.where(B == 2, 0.5 + 1.5 * L * sgn[None], 0.5)
        off = np.where(B == 0, 1.5 * L, np.where(B == 1, 1.5j * L * sgn[None], 0.0))
        factors = np.where(xbits[None, None, :] == 1, off, diag)
        est[:, lo:lo + step] = 2.0 * np.prod(factors, axis=-1).real
    return est


def _median_of_means(samples: np.ndarray, groups: int) -> np.ndarray:
    k = max(1, min(groups, samples.shape[0]))
    means = np.stack([g.mean(axis=0) for g in np.array_split(samples, k, axis=0)])
    return np.median(means, axis=0)


def shadow_estimate_parity(rep: ClassicalRep, y: int, x: int, groups: int | None = None) -> float:
    """Shadow estimate of ``<psi|(|y><y^x| + |y^x><y|)|psi>``.

    Plain mean over snapshots by default (unbiased); median of means over
    ``groups`` blocks when given.
    """
    if rep.strategy_id != "shadow":
        raise StrategyMismatchError(f"shadow estimates need a shadow record, got {rep.strategy_id}")
    snaps = snapshot_parity_estimates(rep, [y], x)
    if groups is None:
        return float(snaps.mean())
    return float(_median_of_means(snaps, groups)[0])


# --- learner and generator -----------------------------------------------


@dataclass(frozen=True)
class MfGenerator:
    """Inference rule of a measure-first learner; consumes classical records only."""

    n: int
    x: int
    strategy_id: str
    groups: int = 1

    def _check(self, rep: ClassicalRep) -> None:
        if rep.strategy_id != self.strategy_id:
            raise StrategyMismatchError(
                f"generator expects {self.strategy_id} records, got {rep.strategy_id}"
            )
        if rep.n != self.n:
            raise DimensionError(f"record is for n={rep.n}, generator for n={self.n}")

    def flip_probabilities(self, rep: ClassicalRep, ys=None) -> np.ndarray:
        """``P(b_hat = 1 | y)`` for each requested ``y`` (default: all)."""
        self._check(rep)
        ys = np.arange(1 << self.n) if ys is None else np.atleast_1d(np.asarray(ys, dtype=np.int64))
        if self.strategy_id == "leaky":
            t = rep.table()
            return (t[ys] ^ t[ys ^ self.x]).astype(np.float64)
        if self.strategy_id == "fourier":
            counts = np.bincount(rep.fourier_outcomes(), minlength=1 << self.n)
            s = int(np.argmax(counts))
            return np.full(ys.size, float(parity(s & self.x)))
        est = _median_of_means(snapshot_parity_estimates(rep, ys, self.x), self.groups)
        return np.where(est > 0, 0.0, np.where(est < 0, 1.0, 0.5))

    def generate(self, rep: ClassicalRep, rng: np.random.Generator) -> ConceptSample:
        y = int(rng.integers(0, 1 << self.n))
        p1 = float(self.flip_probabilities(rep, [y])[0])
        b = int(rng.random() < p1)
        return ConceptSample(self.n, self.x, y, b)

    def exact_distribution(self, rep: ClassicalRep) -> Distribution:
        """Output distribution conditioned on one record."""
        n = self.n
        p1 = self.flip_probabilities(rep)
        ys = np.arange(1 << n, dtype=np.int64)
        base = self.x | (ys << n)
        codes = np.concatenate([base, base | (1 << (2 * n))])
        probs = np.concatenate([1.0 - p1, p1]) / (1 << n)
        return Distribution.from_arrays(2 * n + 1, codes, probs)


def mf_generate(gen: MfGenerator, rep: ClassicalRep, rng: np.random.Generator) -> ConceptSample:
    return gen.generate(rep, rng)


def measure_first_learn(strategy: Strategy, data: Sequence) -> MfGenerator:
    """Train on measured examples: ``TrainingExample`` with ``rep`` or ``(rep, label)`` pairs."""
    pairs = [(ex.rep, ex.label) if isinstance(ex, TrainingExample) else tuple(ex) for ex in data]
    if not pairs:
        raise ValueError("empty training set")
    for rep, _ in pairs:
        if rep is None or rep.strategy_id != strategy.strategy_id:
            got = None if rep is None else rep.strategy_id
            raise StrategyMismatchError(f"training record from {got}, strategy is {strategy.strategy_id}")
    x = recover_x([lb for _, lb in pairs])
    return MfGenerator(x.len, x.value, strategy.strategy_id, strategy.groups)


@dataclass(frozen=True)
class MeasureFirstPipeline:
    """Strategy plus trained generator, run end to end on a function's phase state."""

    strategy: Strategy
    generator: MfGenerator

    @property
    def x(self) -> int:
        return self.generator.x

    def sample(self, f: BoolFunc, rng: np.random.Generator) -> ConceptSample:
        rep = measure(self.strategy, f, self.strategy.ell, rng)
        return self.generator.generate(rep, rng)

    def exact_distribution(self, f: BoolFunc, rng: np.random.Generator) -> Distribution:
        """Exact distribution given one freshly drawn record of ``f``."""
        rep = measure(self.strategy, f, self.strategy.ell, rng)
        return self.generator.exact_distribution(rep)
