"""Phase states, the hidden-matching relation, and labelled training data.

A concept is indexed by a hidden string ``x``. On a phase state of a Boolean
function ``f`` it emits ``(x, y, b)`` with ``y`` uniform and
``b = f(y) ^ f(y ^ x)``. Samples are packed little-endian as
``x | y << n | b << 2n``; parity labels ``(i.x, i)`` as ``bit | i << 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator, Union

import numpy as np

from . import qsim
from .errors import CapacityError, DegenerateMatchingError, DimensionError
from .gf2bits import BitVec, parity
from .prfcrypto import DEFAULT_SPEC, PrfSpec, prf_eval_many, prf_table, sample_key

__all__ = [
    "TABLE_MAX_N",
    "EXACT_MAX_N",
    "BoolFunc",
    "ConceptSample",
    "ParityLabel",
    "LabelMode",
    "FSource",
    "FULL_X",
    "PARITY",
    "F_SOURCE_UNIFORM",
    "F_SOURCE_PRF",
    "TrainingExample",
    "Distribution",
    "prepare_phase_state",
    "relation_bits",
    "relation_members",
    "in_relation",
    "concept_distribution",
    "concept_sample",
    "generate_training_data",
    "tv_distance",
    "dump_dataset",
    "load_dataset",
]

TABLE_MAX_N = 24
EXACT_MAX_N = 12


def as_int(v: Union[int, BitVec], n: int) -> int:
    """Accept an n-bit string as a BitVec or a non-negative int."""
    if isinstance(v, BitVec):
        if v.len != n:
            raise DimensionError(f"expected {n} bits, got {v.len}")
        return v.value
    v = int(v)
    if not 0 <= v < (1 << n):
        raise DimensionError(f"{v} is not an {n}-bit string")
    return v


class BoolFunc:
    """A function ``{0,1}^n -> {0,1}`` given by a truth table or a PRF key."""

    def __init__(self, n: int, table=None, prf_key: int | None = None,
                 spec: PrfSpec = DEFAULT_SPEC):
        if (table is None) == (prf_key is None):
            raise ValueError("give exactly one of table or prf_key")
        if n < 1:
            raise DimensionError(f"n must be >= 1, got {n}")
        self.n = n
        self.prf_key = prf_key
        self.spec = spec
        self._table = None
        if table is not None:
            if n > TABLE_MAX_N:
                raise CapacityError(f"truth tables are capped at n={TABLE_MAX_N}")
            arr = np.asarray(table, dtype=np.uint8)
            if arr.shape != (1 << n,):
                raise DimensionError(f"truth table needs {1 << n} entries, got {arr.shape}")
            if arr.size and arr.max() > 1:
                raise ValueError("truth table entries must be 0 or 1")
            arr.setflags(write=False)
            self._table = arr

    @classmethod
    def from_table(cls, table) -> "BoolFunc":
        table = np.asarray(table, dtype=np.uint8)
        n = int(table.size).bit_length() - 1
        if table.size < 2 or (1 << n) != table.size:
            raise DimensionError(f"table length {table.size} is not a power of two >= 2")
        return cls(n, table=table)

    @classmethod
    def from_str(cls, bits: str) -> "BoolFunc":
        """``"0110"`` lists f(0), f(1), f(2), f(3)."""
        return cls.from_table([int(c) for c in bits])

    @classmethod
    def from_bitvec(cls, v: BitVec) -> "BoolFunc":
        return cls.from_table(list(v))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BoolFunc":
        if n > TABLE_MAX_N:
            raise CapacityError(f"uniform truth tables are capped at n={TABLE_MAX_N}")
        return cls(n, table=rng.integers(0, 2, size=1 << n, dtype=np.uint8))

    @classmethod
    def from_prf(cls, n: int, key: int, spec: PrfSpec = DEFAULT_SPEC) -> "BoolFunc":
        return cls(n, prf_key=key, spec=spec)

    @property
    def is_prf(self) -> bool:
        return self.prf_key is not None

    def table(self) -> np.ndarray:
        if self._table is None:
            if self.n > TABLE_MAX_N:
                raise CapacityError(f"cannot tabulate a function of n={self.n}")
            t = prf_table(self.spec, self.prf_key, self.n)
            t.setflags(write=False)
            self._table = t
        return self._table

    def query(self, y) -> int:
        y = as_int(y, self.n)
        if self._table is not None:
            return int(self._table[y])
        return int(prf_eval_many(self.spec, self.prf_key, [y], self.n)[0])

    __call__ = query

    def to_bitvec(self) -> BitVec:
        return BitVec.from_bits(self.table())

    def hex(self) -> str:
        return self.to_bitvec().hex()

    def to_json(self):
        if self.is_prf:
            return {"prf_key": format(self.prf_key, "032x")}
        return self.hex()

    @classmethod
    def from_json(cls, n: int, obj) -> "BoolFunc":
        if isinstance(obj, dict):
            return cls.from_prf(n, int(obj["prf_key"], 16))
        return cls.from_bitvec(BitVec.from_hex(obj, 1 << n))

    def __repr__(self) -> str:
        if self.is_prf:
            return f"BoolFunc(n={self.n}, prf_key={self.prf_key:#034x})"
        if self.n <= 4:
            return f"BoolFunc({''.join(map(str, self._table))!r})"
        return f"BoolFunc(n={self.n}, table=...)"


@dataclass(frozen=True)
class ConceptSample:
    n: int
    x: int
    y: int
    b: int

    def __post_init__(self):
        # numpy scalars would overflow in ``code``
        for k in ("n", "x", "y", "b"):
            object.__setattr__(self, k, int(getattr(self, k)))

    @property
    def code(self) -> int:
        return self.x | (self.y << self.n) | (self.b << (2 * self.n))

    @classmethod
    def from_code(cls, n: int, code: int) -> "ConceptSample":
        mask = (1 << n) - 1
        return cls(n, code & mask, (code >> n) & mask, (code >> (2 * n)) & 1)

    def to_bitvec(self) -> BitVec:
        return BitVec(2 * self.n + 1, self.code)


@dataclass(frozen=True)
class ParityLabel:
    n: int
    bit: int
    i: int

    def __post_init__(self):
        for k in ("n", "bit", "i"):
            object.__setattr__(self, k, int(getattr(self, k)))

    @property
    def code(self) -> int:
        return self.bit | (self.i << 1)

    @classmethod
    def from_code(cls, n: int, code: int) -> "ParityLabel":
        return cls(n, code & 1, code >> 1)

    def to_bitvec(self) -> BitVec:
        return BitVec(self.n + 1, self.code)


class LabelMode(str, Enum):
    FULL_X = "full_x"
    PARITY = "parity"


class FSource(str, Enum):
    UNIFORM = "uniform"
    PRF = "prf"


FULL_X = LabelMode.FULL_X
PARITY = LabelMode.PARITY
F_SOURCE_UNIFORM = FSource.UNIFORM
F_SOURCE_PRF = FSource.PRF


@dataclass(frozen=True, eq=False)
class TrainingExample:
    """One labelled example: quantum handle ``(f, ell)`` or a measured ``rep``."""

    n: int
    ell: int
    label: Union[ConceptSample, ParityLabel]
    f: BoolFunc | None = None
    rep: object | None = None

    @property
    def label_mode(self) -> LabelMode:
        return FULL_X if isinstance(self.label, ConceptSample) else PARITY


# --- distributions -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Distribution:
    """Sparse probability vector over ``nbits``-bit outcome codes."""

    nbits: int
    outcomes: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_arrays(cls, nbits: int, codes, probs) -> "Distribution":
        codes = np.asarray(codes, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        uniq, inv = np.unique(codes, return_inverse=True)
        acc = np.zeros(uniq.size)
        np.add.at(acc, inv, probs)
        keep = acc != 0
        return cls(nbits, uniq[keep], acc[keep])

    @classmethod
    def point_mass(cls, nbits: int, code: int) -> "Distribution":
        return cls(nbits, np.array([code], dtype=np.int64), np.array([1.0]))

    def prob(self, code: int) -> float:
        k = np.searchsorted(self.outcomes, code)
        if k < self.outcomes.size and self.outcomes[k] == code:
            return float(self.probs[k])
        return 0.0

    def total(self) -> float:
        return float(self.probs.sum())

    def as_dict(self) -> dict[int, float]:
        return {int(c): float(p) for c, p in zip(self.outcomes, self.probs)}

    def dense(self) -> np.ndarray:
        if self.nbits > 26:
            raise CapacityError("outcome space too large for a dense vector")
        out = np.zeros(1 << self.nbits)
        out[self.outcomes] = self.probs
        return out


def tv_distance(p, q) -> float:
    """Total-variation distance ``0.5 * sum |p_i - q_i|``."""
    if isinstance(p, Distribution) and isinstance(q, Distribution):
        if p.nbits != q.nbits:
            raise DimensionError(f"outcome spaces differ: {p.nbits} vs {q.nbits} bits")
        codes = np.concatenate([p.outcomes, q.outcomes])
        vals = np.concatenate([p.probs, -q.probs])
        _, inv = np.unique(codes, return_inverse=True)
        diff = np.zeros(inv.max() + 1 if inv.size else 0)
        np.add.at(diff, inv, vals)
        return float(0.5 * np.abs(diff).sum())
    if isinstance(p, Distribution) or isinstance(q, Distribution):
        raise TypeError("compare two Distributions or two arrays")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError(f"outcome spaces differ: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


# --- the concept ---------------------------------------------------------


def prepare_phase_state(f: BoolFunc, max_qubits: int | None = None) -> qsim.StateVector:
    """``(1/sqrt N) sum_i (-1)^f(i) |i>`` via a phase oracle on the uniform state."""
    return qsim.apply(qsim.uniform_state(f.n, max_qubits), qsim.PhaseOracle(f))


def relation_bits(f: BoolFunc, x) -> np.ndarray:
    """``b[y] = f(y) ^ f(y ^ x)`` for every ``y``."""
    x = as_int(x, f.n)
    t = f.table()
    ys = np.arange(1 << f.n)
    return t ^ t[ys ^ x]


def relation_members(f: BoolFunc, x) -> set[tuple[int, int]]:
    b = relation_bits(f, x)
    return {(y, int(bit)) for y, bit in enumerate(b)}


def in_relation(f: BoolFunc, x, y, b) -> bool:
    x = as_int(x, f.n)
    y = as_int(y, f.n)
    return (f.query(y) ^ f.query(y ^ x)) == b


def concept_distribution(f: BoolFunc, x) -> Distribution:
    """Exact ``pi_x(f)``: mass ``2^-n`` on ``(x, y, b(y))`` for every ``y``."""
    n = f.n
    if n > EXACT_MAX_N:
        raise CapacityError(f"exact distributions are capped at n={EXACT_MAX_N}")
    x = as_int(x, n)
    b = relation_bits(f, x).astype(np.int64)
    ys = np.arange(1 << n, dtype=np.int64)
    codes = x | (ys << n) | (b << (2 * n))
    return Distribution.from_arrays(2 * n + 1, codes, np.full(1 << n, 1.0 / (1 << n)))


def concept_sample(f: BoolFunc, x, rng: np.random.Generator) -> ConceptSample:
    x = as_int(x, f.n)
    y = int(rng.integers(0, 1 << f.n))
    return ConceptSample(f.n, x, y, f.query(y) ^ f.query(y ^ x))


def parity_label(n: int, x: int, rng: np.random.Generator) -> ParityLabel:
    i = int(rng.integers(0, 1 << n))
    return ParityLabel(n, parity(i & x), i)


def generate_training_data(
    n: int,
    x,
    count: int,
    ell: int,
    label_mode: LabelMode,
    f_source: FSource,
    rng: np.random.Generator,
    *,
    spec: PrfSpec = DEFAULT_SPEC,
    allow_zero: bool = False,
) -> list[TrainingExample]:
    """Examples with independent ``f`` (uniform table or fresh PRF key).

    Each example draws from its own child generator, so the dataset does not
    depend on the order in which examples are built.
    """
    if count < 1 or ell < 1:
        raise ValueError("count and ell must be >= 1")
    x = as_int(x, n)
    if x == 0 and not allow_zero:
        raise DegenerateMatchingError("x = 0 is excluded unless allow_zero is set")
    label_mode = LabelMode(label_mode)
    f_source = FSource(f_source)
    if f_source is FSource.UNIFORM and n > TABLE_MAX_N:
        raise CapacityError(f"uniform truth tables are capped at n={TABLE_MAX_N}")
    out = []
    for child in rng.spawn(count):
        if f_source is FSource.UNIFORM:
            f = BoolFunc.random(n, child)
        else:
            f = BoolFunc.from_prf(n, sample_key(spec, child), spec)
        if label_mode is FULL_X:
            label = concept_sample(f, x, child)
        else:
            label = parity_label(n, x, child)
        out.append(TrainingExample(n=n, ell=ell, label=label, f=f))
    return out


# --- serialization -------------------------------------------------------


def _label_json(label) -> dict:
    if isinstance(label, ConceptSample):
        return {"mode": FULL_X.value, "bits": label.to_bitvec().hex()}
    return {"mode": PARITY.value, "bits": label.to_bitvec().hex()}


def _label_from_json(n: int, obj: dict):
    mode = LabelMode(obj["mode"])
    code = int(obj["bits"], 16)
    if mode is FULL_X:
        return ConceptSample.from_code(n, code)
    return ParityLabel.from_code(n, code)


def example_to_json(ex: TrainingExample) -> str:
    d = {"n": ex.n, "ell": ex.ell, "label": _label_json(ex.label)}
    if ex.f is not None:
        d["f"] = ex.f.to_json()
    if ex.rep is not None:
        d["rep"] = ex.rep.to_json_obj()
    return json.dumps(d, sort_keys=True)


def example_from_json(line: str) -> TrainingExample:
    from .mflearner import ClassicalRep

    d = json.loads(line)
    n = d["n"]
    f = BoolFunc.from_json(n, d["f"]) if "f" in d else None
    rep = ClassicalRep.from_json_obj(d["rep"]) if "rep" in d else None
    return TrainingExample(n=n, ell=d["ell"], label=_label_from_json(n, d["label"]), f=f, rep=rep)


def dump_dataset(examples: Iterable[TrainingExample], fp: IO[str]) -> None:
    """Write one JSON object per line."""
    for ex in examples:
        fp.write(example_to_json(ex) + "\n")


def load_dataset(fp: IO[str]) -> list[TrainingExample]:
    return list(_iter_lines(fp))


def _iter_lines(fp: IO[str]) -> Iterator[TrainingExample]:
    for line in fp:
        if line.strip():
            yield example_from_json(line)
