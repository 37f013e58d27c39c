"""Fully-quantum learner: recover x, then build the matching-basis measurement.

The measurement circuit for a nonzero ``x`` fans CNOTs out from a pivot
qubit ``p`` (the lowest set bit of ``x``) to every other set bit, then applies
a Hadamard on ``p``. The CNOT layer maps both endpoints of an edge
``{y, y ^ x}`` onto a pair of labels that differ only in bit ``p``, so the
Hadamard measures the relative sign ``(-1)^(f(y) ^ f(y ^ x))`` of the edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qsim
from .concepts import (
    EXACT_MAX_N,
    FULL_X,
    PARITY,
    BoolFunc,
    ConceptSample,
    Distribution,
    LabelMode,
    ParityLabel,
    TrainingExample,
    as_int,
    prepare_phase_state,
)
from .errors import (
    CapacityError,
    CorruptDataError,
    DegenerateMatchingError,
    DimensionError,
    InsufficientDataError,
)
from .gf2bits import BitVec, Gf2System, Inconsistent, Underdetermined, solve_system

__all__ = [
    "DECODE_VERSION",
    "MatchingCircuit",
    "LearnerOutput",
    "build_ux",
    "measure_concept",
    "recover_x",
    "fully_quantum_learn",
]

DECODE_VERSION = "v1"


@dataclass(frozen=True)
class MatchingCircuit:
    n: int
    x: int
    pivot: int
    cnots: tuple[tuple[int, int], ...]

    def linear_map(self, y: int) -> int:
        """``L(y)``: flip every set bit of x except the pivot when ``y_p = 1``."""
        if (y >> self.pivot) & 1:
            return y ^ self.x ^ (1 << self.pivot)
        return y

    def gates(self) -> list[qsim.GateOp]:
        ops: list[qsim.GateOp] = [qsim.CNOT(c, t) for c, t in self.cnots]
        ops.append(qsim.H(self.pivot))
        return ops

    @property
    def size(self) -> int:
        return len(self.cnots) + 1

    def decode(self, w: int) -> tuple[int, int]:
        """Measured label ``w`` -> (edge endpoint ``y0``, parity bit ``b``)."""
        b = (w >> self.pivot) & 1
        u = w & ~(1 << self.pivot)
        return self.linear_map(u), b

    def final_state(self, f: BoolFunc) -> qsim.StateVector:
        if f.n != self.n:
            raise DimensionError(f"circuit for n={self.n} applied to f with n={f.n}")
        return qsim.apply_all(prepare_phase_state(f), self.gates())

    def sample(self, f: BoolFunc, rng: np.random.Generator) -> ConceptSample:
        return measure_concept(self, f, rng)

    def sample_many(self, f: BoolFunc, shots: int, rng: np.random.Generator) -> np.ndarray:
        """Packed sample codes from ``shots`` independent copies of the phase state."""
        n = self.n
        w = qsim.sample_many(self.final_state(f), shots, rng).astype(np.int64)
        b = (w >> self.pivot) & 1
        u = w & ~(1 << self.pivot)
        y0 = np.where((u >> self.pivot) & 1, u ^ self.x ^ (1 << self.pivot), u)
        y = np.where(rng.random(shots) < 0.5, y0 ^ self.x, y0)
        return self.x | (y << n) | (b << (2 * n))

    def exact_distribution(self, f: BoolFunc) -> Distribution:
        """Output distribution of :func:`measure_concept`, computed from the Born rule."""
        n = self.n
        if n > EXACT_MAX_N:
            raise CapacityError(f"exact distributions are capped at n={EXACT_MAX_N}")
        probs = qsim.outcome_distribution(self.final_state(f))
        w = np.arange(1 << n, dtype=np.int64)
        b = (w >> self.pivot) & 1
        u = w & ~(1 << self.pivot)
        y0 = np.where((u >> self.pivot) & 1, u ^ self.x ^ (1 << self.pivot), u)
        codes_a = self.x | (y0 << n) | (b << (2 * n))
        codes_b = self.x | ((y0 ^ self.x) << n) | (b << (2 * n))
        return Distribution.from_arrays(
            2 * n + 1,
            np.concatenate([codes_a, codes_b]),
            np.concatenate([probs / 2, probs / 2]),
        )


def build_ux(x, n: int | None = None) -> MatchingCircuit:
    """Measurement circuit for the matching ``{y, y ^ x}``."""
    if isinstance(x, BitVec):
        n = x.len if n is None else n
    if n is None:
        raise ValueError("n is required when x is an int")
    x = as_int(x, n)
    if x == 0:
        raise DegenerateMatchingError("x = 0 does not define a perfect matching")
    pivot = (x & -x).bit_length() - 1
    cnots = tuple((pivot, j) for j in range(n) if j != pivot and (x >> j) & 1)
    return MatchingCircuit(n, x, pivot, cnots)


def measure_concept(circuit: MatchingCircuit, f: BoolFunc, rng: np.random.Generator) -> ConceptSample:
    """Run the circuit on a fresh phase state of ``f`` and decode one sample.

    The measurement fixes an edge and its parity; a fair coin picks which
    endpoint is reported so that ``y`` is uniform.
    """
    state = circuit.final_state(f)
    w = qsim.sample(state, rng)
    y0, b = circuit.decode(w)
    if rng.random() < 0.5:
        y0 ^= circuit.x
    return ConceptSample(circuit.n, circuit.x, y0, b)


def recover_x(labels: Sequence, mode: LabelMode | None = None) -> BitVec:
    """Hidden string from full labels (read off) or parity labels (linear solve)."""
    if not labels:
        raise InsufficientDataError("no labels")
    mode = LabelMode(mode) if mode is not None else (
        FULL_X if isinstance(labels[0], ConceptSample) else PARITY
    )
    n = labels[0].n
    if mode is FULL_X:
        if not all(isinstance(lb, ConceptSample) and lb.n == n for lb in labels):
            raise CorruptDataError("mixed label types in a full-x dataset")
        xs = {lb.x for lb in labels}
        if len(xs) != 1:
            raise CorruptDataError(f"labels disagree on x: {sorted(xs)}")
        return BitVec(n, xs.pop())
    if not all(isinstance(lb, ParityLabel) and lb.n == n for lb in labels):
        raise CorruptDataError("mixed label types in a parity dataset")
    system = Gf2System.from_rows(n, ((BitVec(n, lb.i), lb.bit) for lb in labels))
    result = solve_system(system)
    if isinstance(result, Inconsistent):
        raise CorruptDataError("parity labels are inconsistent")
    if isinstance(result, Underdetermined):
        raise InsufficientDataError(
            f"parity labels have rank {result.rank} < {n}; more examples needed"
        )
    return result


@dataclass(frozen=True)
class LearnerOutput:
    """Classical description of the trained sampler, plus provenance."""

    circuit: MatchingCircuit
    label_mode: LabelMode
    examples_used: int

    @property
    def x(self) -> int:
        return self.circuit.x

    def sample(self, f: BoolFunc, rng: np.random.Generator) -> ConceptSample:
        return measure_concept(self.circuit, f, rng)

    def sample_many(self, f: BoolFunc, shots: int, rng: np.random.Generator) -> np.ndarray:
        return self.circuit.sample_many(f, shots, rng)

    def exact_distribution(self, f: BoolFunc, rng=None) -> Distribution:
        return self.circuit.exact_distribution(f)

    def to_json(self) -> str:
        c = self.circuit
        return json.dumps({
            "n": c.n,
            "x": BitVec(c.n, c.x).hex(),
            "pivot": c.pivot,
            "cnots": [list(g) for g in c.cnots],
            "decode": DECODE_VERSION,
        })

    @classmethod
    def from_json(cls, text: str, label_mode: LabelMode = FULL_X, examples_used: int = 0):
        d = json.loads(text)
        if d.get("decode") != DECODE_VERSION:
            raise ValueError(f"unknown decode rule {d.get('decode')!r}")
        circuit = MatchingCircuit(
            d["n"], int(d["x"], 16), d["pivot"], tuple(tuple(g) for g in d["cnots"])
        )
        if build_ux(circuit.x, circuit.n) != circuit:
            raise CorruptDataError("serialized circuit does not match its x")
        return cls(circuit, label_mode, examples_used)


def fully_quantum_learn(data: Sequence[TrainingExample]) -> LearnerOutput:
    if not data:
        raise InsufficientDataError("empty training set")
    labels = [ex.label for ex in data]
    mode = data[0].label_mode
    x = recover_x(labels, mode)
    return LearnerOutput(build_ux(x), mode, len(data))
