"""Goldilocks prime field, its quadratic extension, and the fixed-point codec."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

P = 2**64 - 2**32 + 1
# Extension is F_p[X] / (X^2 - NONRESIDUE); 7 is a quadratic non-residue mod P.
NONRESIDUE = 7

DEFAULT_QI = 16
DEFAULT_QD = 16


class FieldError(ValueError):
    """Arithmetic error in the field (for example inverting zero)."""


class RangeError(ValueError):
    """A real value does not fit the fixed-point range."""


class CorruptValueError(ValueError):
    """An encoding lies outside the legal signed range."""


class FieldElement:
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = int(value) % P

    def __add__(self, other):
        return FieldElement(self.value + _int(other))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - _int(other))

    def __rsub__(self, other):
        return FieldElement(_int(other) - self.value)

    def __mul__(self, other):
        if isinstance(other, ExtElement):
            return other * self
        return FieldElement(self.value * _int(other))

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value)

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, e, P))

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise FieldError("inverse of zero")
        return FieldElement(pow(self.value, P - 2, P))

    def __eq__(self, other):
        if isinstance(other, ExtElement):
            return other == self
        if isinstance(other, (int, FieldElement)):
            return self.value == _int(other) % P
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value})"

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(8, "little")


def _int(x) -> int:
    if isinstance(x, FieldElement):
        return x.value
    if isinstance(x, ExtElement):
        raise TypeError("extension element used where a base element is required")
    return int(x)


class ExtElement:
    """c0 + c1*X in F_p[X]/(X^2 - 7)."""

    __slots__ = ("c0", "c1")

    def __init__(self, c0: int = 0, c1: int = 0):
        self.c0 = int(c0) % P
        self.c1 = int(c1) % P

    @staticmethod
    def lift(x: "Scalar") -> "ExtElement":
        if isinstance(x, ExtElement):
            return x
        return ExtElement(_int(x), 0)

    def __add__(self, other):
        o = ExtElement.lift(other)
        return ExtElement(self.c0 + o.c0, self.c1 + o.c1)

    __radd__ = __add__

    def __sub__(self, other):
        o = ExtElement.lift(other)
        return ExtElement(self.c0 - o.c0, self.c1 - o.c1)

    def __rsub__(self, other):
        return ExtElement.lift(other) - self

    def __neg__(self):
        return ExtElement(-self.c0, -self.c1)

    def __mul__(self, other):
        if not isinstance(other, ExtElement):
            k = _int(other)
            return ExtElement(self.c0 * k, self.c1 * k)
        a0, a1, b0, b1 = self.c0, self.c1, other.c0, other.c1
        return ExtElement(a0 * b0 + NONRESIDUE * a1 * b1, a0 * b1 + a1 * b0)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        result, base = ExtElement(1), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "ExtElement":
        # (c0 + c1 X)^-1 = (c0 - c1 X) / (c0^2 - 7 c1^2)
        norm = (self.c0 * self.c0 - NONRESIDUE * self.c1 * self.c1) % P
        if norm == 0:
            raise FieldError("inverse of zero")
        inv = pow(norm, P - 2, P)
        return ExtElement(self.c0 * inv, -self.c1 * inv)

    def is_zero(self) -> bool:
        return self.c0 == 0 and self.c1 == 0

    def __eq__(self, other):
        if isinstance(other, (int, FieldElement, ExtElement)):
            o = ExtElement.lift(other)
            return self.c0 == o.c0 and self.c1 == o.c1
        return NotImplemented

    def __hash__(self):
        return hash((self.c0, self.c1))

    def __repr__(self):
        return f"ExtElement({self.c0}, {self.c1})"

    def to_bytes(self) -> bytes:
        return self.c0.to_bytes(8, "little") + self.c1.to_bytes(8, "little")

    @staticmethod
    def from_bytes(data: bytes) -> "ExtElement":
        if len(data) != 16:
            raise ValueError("extension element needs 16 bytes")
        c0 = int.from_bytes(data[:8], "little")
        c1 = int.from_bytes(data[8:], "little")
        if c0 >= P or c1 >= P:
            raise ValueError("non-canonical field element")
        return ExtElement(c0, c1)


Scalar = Union[int, FieldElement, ExtElement]


def to_signed(v: int) -> int:
    """Map a field representative to the symmetric range (-p/2, p/2]."""
    v %= P
    return v - P if v > P // 2 else v


# -- fixed-point codec ------------------------------------------------------


@dataclass(frozen=True)
class QuantizedValue:
    encoding: int
    sign: int
    q_i: int = DEFAULT_QI
    q_d: int = DEFAULT_QD

    @property
    def q(self) -> int:
        return self.q_i + self.q_d

    @property
    def magnitude(self) -> int:
        return self.sign * self.encoding % P


def quantize_int(r: float, q_i: int = DEFAULT_QI, q_d: int = DEFAULT_QD) -> int:
    """Signed integer round(|r| * 2^q_d) * sign(r) with a range check."""
    if not abs(r) < 2**q_i:
        raise RangeError(f"|{r}| does not fit {q_i} integer bits")
    mag = int(round(abs(Fraction(r)) * 2**q_d))
    if mag >= 2 ** (q_i + q_d):
        raise RangeError(f"|{r}| rounds outside {q_i + q_d} bits")
    return -mag if r < 0 else mag


def quantize(r: float, q_i: int = DEFAULT_QI, q_d: int = DEFAULT_QD) -> QuantizedValue:
    v = quantize_int(r, q_i, q_d)
    sign = P - 1 if r < 0 else 1
    return QuantizedValue(v % P, sign, q_i, q_d)


def dequantize(v: QuantizedValue) -> float:
    limit = 2**v.q - 1
    if v.sign not in (1, P - 1):
        raise CorruptValueError("sign must be 1 or p-1")
    if v.sign == 1:
        if v.encoding > limit:
            raise CorruptValueError("positive encoding outside [0, 2^q)")
        return v.encoding / 2**v.q_d
    if v.encoding != 0 and v.encoding < P - limit:
        raise CorruptValueError("negative encoding outside [p-(2^q-1), p-1]")
    return -((P - v.encoding) % P) / 2**v.q_d
