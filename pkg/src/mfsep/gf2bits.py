"""Bit vectors and linear systems over GF(2).

Bits are little-endian throughout the package: bit ``j`` of the integer ``i``
is ``(i >> j) & 1``. A :class:`BitVec` stores its bits in a single Python
integer, which acts as an arbitrary-length array of packed machine words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import DimensionError

__all__ = [
    "BitVec",
    "Gf2System",
    "Underdetermined",
    "Inconsistent",
    "dot",
    "rank",
    "solve_system",
    "parity",
]


def parity(value: int) -> int:
    """Parity of the set bits of a non-negative integer."""
    return value.bit_count() & 1


@dataclass(frozen=True)
class BitVec:
    """Fixed-length bit string backed by an integer."""

    len: int
    value: int = 0

    def __post_init__(self):
        if self.len < 0:
            raise DimensionError(f"negative length {self.len}")
        if self.value < 0 or self.value >> self.len:
            raise DimensionError(
                f"value {self.value:#x} does not fit in {self.len} bits"
            )

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVec":
        """Build from a sequence of 0/1 values, element ``j`` becoming bit ``j``."""
        value = 0
        count = 0
        for j, b in enumerate(bits):
            if b not in (0, 1, True, False):
                raise ValueError(f"bit {j} is {b!r}, expected 0 or 1")
            value |= int(b) << j
            count = j + 1
        return cls(count, value)

    @classmethod
    def from_str(cls, text: str) -> "BitVec":
        """Parse ket notation: ``"01"`` has bit 0 set (rightmost character is bit 0)."""
        return cls.from_bits(int(c) for c in reversed(text))

    @classmethod
    def from_hex(cls, text: str, length: int) -> "BitVec":
        return cls(length, int(text, 16) if text else 0)

    @classmethod
    def zeros(cls, length: int) -> "BitVec":
        return cls(length, 0)

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.len:
            raise IndexError(j)
        return (self.value >> j) & 1

    def __len__(self) -> int:
        return self.len

    def __iter__(self):
        return (self[j] for j in range(self.len))

    def __xor__(self, other: "BitVec") -> "BitVec":
        _check_same_length(self, other)
        return BitVec(self.len, self.value ^ other.value)

    def __and__(self, other: "BitVec") -> "BitVec":
        _check_same_length(self, other)
        return BitVec(self.len, self.value & other.value)

    def popcount(self) -> int:
        return self.value.bit_count()

    def flip(self, j: int) -> "BitVec":
        if not 0 <= j < self.len:
            raise IndexError(j)
        return BitVec(self.len, self.value ^ (1 << j))

    @property
    def words(self) -> list[int]:
        """The packed 64-bit words, least significant first."""
        nwords = (self.len + 63) // 64
        mask = (1 << 64) - 1
        return [(self.value >> (64 * w)) & mask for w in range(nwords)]

    def hex(self) -> str:
        """Hex digits of the packed integer, zero-padded to ``ceil(len / 4)``."""
        width = max(1, (self.len + 3) // 4)
        return format(self.value, f"0{width}x")

    def to_str(self) -> str:
        """Ket notation, most significant bit first."""
        return "".join(str(b) for b in reversed(list(self)))

    def __repr__(self) -> str:
        return f"BitVec({self.to_str()!r})"


def _check_same_length(a: BitVec, b: BitVec) -> None:
    if a.len != b.len:
        raise DimensionError(f"length mismatch: {a.len} vs {b.len}")


def dot(a: BitVec, b: BitVec) -> int:
    """Inner product over GF(2)."""
    _check_same_length(a, b)
    return parity(a.value & b.value)


RowLike = Union[BitVec, int]


def rank(rows: Sequence[BitVec], n: int | None = None) -> int:
    """Row rank over GF(2). Empty input has rank 0."""
    if not rows:
        return 0
    length = rows[0].len if n is None else n
    for r in rows:
        if r.len != length:
            raise DimensionError(f"row of length {r.len}, expected {length}")
    return len(_echelon_basis([r.value for r in rows]))


def _echelon_basis(values: Iterable[int]) -> dict[int, int]:
    # pivot bit -> reduced row; each stored row has its pivot as lowest set bit
    basis: dict[int, int] = {}
    for v in values:
        while v:
            low = (v & -v).bit_length() - 1
            if low not in basis:
                basis[low] = v
                break
            v ^= basis[low]
    return basis


@dataclass(frozen=True)
class Gf2System:
    """Linear equations ``coeff . x = rhs`` over GF(2)."""

    n: int
    rows: tuple[tuple[BitVec, int], ...]

    def __post_init__(self):
        for coeff, rhs in self.rows:
            if coeff.len != self.n:
                raise DimensionError(
                    f"coefficient of length {coeff.len} in a system with n={self.n}"
                )
            if rhs not in (0, 1):
                raise ValueError(f"right-hand side must be a bit, got {rhs!r}")

    @classmethod
    def from_rows(cls, n: int, rows: Iterable[tuple[BitVec, int]]) -> "Gf2System":
        return cls(n, tuple((c, int(r)) for c, r in rows))

    def satisfied_by(self, x: BitVec) -> bool:
        return all(dot(c, x) == r for c, r in self.rows)


@dataclass(frozen=True)
class Underdetermined:
    rank: int


@dataclass(frozen=True)
class Inconsistent:
    pass


def solve_system(system: Gf2System) -> BitVec | Underdetermined | Inconsistent:
    """Solve by Gaussian elimination with first-nonzero pivoting.

    Returns the unique solution when the coefficient rank equals ``n`` and the
    equations are consistent, otherwise an :class:`Underdetermined` or
    :class:`Inconsistent` marker. Inconsistency takes precedence.
    """
    if not system.rows:
        raise ValueError("system has no rows")
    n = system.n
    # augmented rows: coefficients in bits 0..n-1, rhs in bit n
    rows = [c.value | (r << n) for c, r in system.rows]
    pivots: list[int] = []
    top = 0
    for col in range(n):
        sel = next((i for i in range(top, len(rows)) if (rows[i] >> col) & 1), None)
        if sel is None:
            continue
        rows[top], rows[sel] = rows[sel], rows[top]
        pivot_row = rows[top]
        for i in range(len(rows)):
            if i != top and (rows[i] >> col) & 1:
                rows[i] ^= pivot_row
        pivots.append(col)
        top += 1
        if top == len(rows):
            break
    coeff_mask = (1 << n) - 1
    if any(not (r & coeff_mask) and (r >> n) & 1 for r in rows[top:]):
        return Inconsistent()
    if len(pivots) < n:
        return Underdetermined(rank=len(pivots))
    x = 0
    for i, col in enumerate(pivots):
        x |= ((rows[i] >> n) & 1) << col
    return BitVec(n, x)
