"""Dense statevector simulation for small qubit counts.

Basis index ``i`` has qubit ``q`` in state ``(i >> q) & 1``, matching
:mod:`mfsep.gf2bits`. Gates return new states; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import CapacityError, DimensionError

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "H",
    "X",
    "Z",
    "CNOT",
    "PhaseOracle",
    "GateOp",
    "apply",
    "apply_all",
    "outcome_distribution",
    "sample",
    "sample_many",
    "uniform_state",
    "basis_state",
    "circuit_unitary",
    "random_state",
]

MAX_QUBITS = 14
NORM_TOL = 1e-10

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (1 << self.n,):
            raise DimensionError(
                f"expected {1 << self.n} amplitudes for n={self.n}, got {self.amps.shape}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm**2 - 1.0) <= tol


def _check_capacity(n: int, max_qubits: int | None) -> None:
    cap = MAX_QUBITS if max_qubits is None else max_qubits
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds the simulator cap of {cap}")
    if n < 1:
        raise DimensionError(f"need at least one qubit, got {n}")


def basis_state(n: int, index: int, max_qubits: int | None = None) -> StateVector:
    _check_capacity(n, max_qubits)
    if not 0 <= index < (1 << n):
        raise DimensionError(f"basis index {index} out of range for n={n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n, amps)


def uniform_state(n: int, max_qubits: int | None = None) -> StateVector:
    _check_capacity(n, max_qubits)
    N = 1 << n
    return StateVector(n, np.full(N, 1.0 / np.sqrt(N), dtype=np.complex128))


@dataclass(frozen=True)
class H:
    q: int


@dataclass(frozen=True)
class X:
    q: int


@dataclass(frozen=True)
class Z:
    q: int


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise DimensionError("CNOT control and target must differ")


@dataclass(frozen=True, eq=False)
class PhaseOracle:
    """Diagonal gate ``|y> -> (-1)^f(y) |y>``.

    ``f`` is anything exposing ``n`` and ``table()`` (a 0/1 array of length
    ``2**n``), such as :class:`mfsep.concepts.BoolFunc`, or a raw 0/1 array.
    """

    f: object

    def signs(self, n: int) -> np.ndarray:
        table = self.f.table() if hasattr(self.f, "table") else np.asarray(self.f)
        if table.shape != (1 << n,):
            raise DimensionError(
                f"phase oracle table has {table.shape[0]} entries, state needs {1 << n}"
            )
        return 1.0 - 2.0 * table.astype(np.float64)


GateOp = Union[H, X, Z, CNOT, PhaseOracle]


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise DimensionError(f"qubit {q} out of range for n={n}")


def _split(amps: np.ndarray, q: int) -> np.ndarray:
    # view with axis 1 indexing the value of qubit q
    return amps.reshape(-1, 2, 1 << q)


def apply(state: StateVector, op: GateOp) -> StateVector:
    """Apply one gate and return the resulting state."""
    n = state.n
    amps = state.amps
    if isinstance(op, H):
        _check_qubit(op.q, n)
        v = _split(amps, op.q)
        out = np.empty_like(v)
        out[:, 0] = (v[:, 0] + v[:, 1]) * _INV_SQRT2
        out[:, 1] = (v[:, 0] - v[:, 1]) * _INV_SQRT2
        return StateVector(n, out.reshape(-1))
    if isinstance(op, X):
        _check_qubit(op.q, n)
        v = _split(amps, op.q)
        return StateVector(n, v[:, ::-1].reshape(-1).copy())
    if isinstance(op, Z):
        _check_qubit(op.q, n)
        v = _split(amps, op.q).copy()
        v[:, 1] *= -1
        return StateVector(n, v.reshape(-1))
    if isinstance(op, CNOT):
        _check_qubit(op.control, n)
        _check_qubit(op.target, n)
        idx = np.arange(1 << n)
        src = np.where((idx >> op.control) & 1, idx ^ (1 << op.target), idx)
        return StateVector(n, amps[src])
    if isinstance(op, PhaseOracle):
        return StateVector(n, amps * op.signs(n))
    raise TypeError(f"unknown gate {op!r}")


def apply_all(state: StateVector, ops: Iterable[GateOp]) -> StateVector:
    for op in ops:
        state = apply(state, op)
    return state


def outcome_distribution(state: StateVector) -> np.ndarray:
    """Born-rule probabilities of a computational-basis measurement."""
    return np.abs(state.amps) ** 2


def sample(state: StateVector, rng: np.random.Generator) -> int:
    """Measure every qubit; the outcome is returned as a basis index."""
    return int(sample_many(state, 1, rng)[0])


def sample_many(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    probs = outcome_distribution(state)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    out = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.minimum(out, probs.size - 1)


def circuit_unitary(n: int, ops: Iterable[GateOp]) -> np.ndarray:
    """Dense unitary of a gate list, built column by column (testing aid)."""
    ops = list(ops)
    N = 1 << n
    cols = [apply_all(basis_state(n, i, max_qubits=n), ops).amps for i in range(N)]
    return np.stack(cols, axis=1)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))

