"""Fixed-point gadgets: validation, absolute value, truncation and maximum.

Gadgets are written against :class:`ConstraintSystem`, which pairs every
circuit wire with its exact integer value on the prover side. The same gadget
code runs in the verifier with values set to ``None``, so both parties build
an identical circuit and issue the same commitments and range checks.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import fvec
from .field import DEFAULT_QD, FieldElement, P, QuantizedValue, to_signed
from .gkr import CircuitBuilder, LayeredCircuit, Wires
from .session import ProverSession, RangeTerm, VerifierSession


@dataclass(frozen=True)
class RangeTables:
    """Public lookup tables, all derived from the quantization parameters.

    Only the limb table is materialized by the prover; the wider tables are
    realized as limb decompositions of a bounded width.
    """

    q_d: int = DEFAULT_QD
    q_err: int = 36

    @property
    def limb(self) -> np.ndarray:
        return np.arange(1 << 16, dtype=np.uint64)

    @property
    def trunc(self) -> np.ndarray:
        return np.arange(1 << self.q_d, dtype=np.uint64)

    @property
    def err(self) -> np.ndarray:
        return np.arange(1 << self.q_err, dtype=np.uint64)


def _obj(values) -> np.ndarray:
    return np.array([int(v) for v in values], dtype=object)


def encode(values) -> np.ndarray:
    return np.array([int(v) % P for v in values], dtype=np.uint64)


@dataclass
class Sig:
    """A wire vector plus its integer values (prover only)."""

    wires: Wires
    values: np.ndarray | None
    name: str | None = None  # set when the vector is committed
    public: np.ndarray | None = None

    def __len__(self):
        return len(self.wires)

    def __getitem__(self, key) -> "Sig":
        vals = None if self.values is None else np.atleast_1d(self.values[key])
        return Sig(self.wires[key], vals)


class ConstraintSystem:
    """Collects witnesses, arithmetic constraints and range checks."""

    def __init__(self, session: ProverSession | VerifierSession):
        self.session = session
        self.b = CircuitBuilder()
        self.prover = isinstance(session, ProverSession)
        self.failures: list[str] = []

    def _vals(self, vals):
        return vals if self.prover else None

    # inputs
    def witness(self, name: str, values, size: int | None = None) -> Sig:
        if self.prover:
            vals = _obj(values)
            self.session.commit(name, encode(vals))
            size = len(vals)
        else:
            vals = None
            self.session.commit(name, size)
        return Sig(self.b.input(name, size), vals, name=name)

    def public(self, name: str, values) -> Sig:
        vals = _obj(values)
        return Sig(self.b.public(name, encode(vals)), self._vals(vals), public=vals)

    def const(self, value: int, n: int = 1) -> Sig:
        return Sig(self.b.const(value, n), self._vals(np.full(n, int(value), dtype=object)))

    # arithmetic over the integers, mirrored in the circuit
    def _op(self, wires, a, b, fn) -> Sig:
        if not self.prover:
            return Sig(wires, None)
        av, bv = a.values, b.values
        if len(av) == 1 and len(bv) > 1:
            av = np.repeat(av, len(bv))
        if len(bv) == 1 and len(av) > 1:
            bv = np.repeat(bv, len(av))
        return Sig(wires, fn(av, bv))

    def add(self, a: Sig, b: Sig) -> Sig:
        return self._op(self.b.add(a.wires, b.wires), a, b, lambda x, y: x + y)

    def mul(self, a: Sig, b: Sig) -> Sig:
        return self._op(self.b.mul(a.wires, b.wires), a, b, lambda x, y: x * y)

    def sub(self, a: Sig, b: Sig) -> Sig:
        return self._op(self.b.sub(a.wires, b.wires), a, b, lambda x, y: x - y)

    def scale(self, a: Sig, c: int) -> Sig:
        return Sig(self.b.scale(a.wires, c), self._vals(None if a.values is None else a.values * c))

    def concat(self, parts: Sequence[Sig]) -> Sig:
        vals = np.concatenate([p.values for p in parts]) if self.prover else None
        return Sig(self.b.concat([p.wires for p in parts]), vals)

    def sum_groups(self, a: Sig, group: int) -> Sig:
        vals = a.values.reshape(-1, group).sum(axis=1) if self.prover else None
        return Sig(self.b.sum_groups(a.wires, group), vals)

    def sum(self, a: Sig) -> Sig:
        vals = np.array([a.values.sum()], dtype=object) if self.prover else None
        return Sig(self.b.sum(a.wires), vals)

    def product(self, a: Sig) -> Sig:
        """Product of all entries, padded with ones to a power of two."""
        n = 1 << max(0, (len(a) - 1).bit_length())
        if n != len(a):
            a = self.concat([a, self.const(1, n - len(a))])
        vals = None
        if self.prover:
            acc = 1
            for v in a.values:
                acc = acc * int(v) % P
            vals = np.array([acc], dtype=object)
        return Sig(self.b.product_groups(a.wires, n), vals)

    def product_groups(self, a: Sig, group: int) -> Sig:
        """Products of consecutive runs of ``group`` wires (a power of two)."""
        vals = None
        if self.prover:
            rows = a.values.reshape(-1, group)
            vals = np.empty(len(rows), dtype=object)
            for k, row in enumerate(rows):
                acc = 1
                for v in row:
                    acc = acc * int(v) % P
                vals[k] = acc
        return Sig(self.b.product_groups(a.wires, group), vals)

    # constraints
    def assert_zero(self, a: Sig, what: str = "constraint") -> None:
        if self.prover and any(int(v) % P for v in a.values):
            self.failures.append(f"{what} violated")
        self.b.assert_zero(a.wires)

    def output(self, a: Sig, expected) -> None:
        exp = encode(expected)
        if self.prover and not np.array_equal(encode(a.values), exp):
            self.failures.append("output differs from the claimed value")
        self.b.output(a.wires, exp)

    def range(self, label: str, terms: Sequence[tuple[int, Sig, tuple[str, int] | None]], offset: int, bits: int):
        """Require sum(c * sig) + offset in [0, 2^bits) over committed or public sigs."""
        rts = []
        for c, sig, sel in terms:
            if sig.name is not None:
                rts.append(RangeTerm(c, sig.name, sel))
            elif sig.public is not None:
                rts.append(RangeTerm(c, encode(sig.public), sel))
            else:
                raise ValueError("range terms must be committed or public vectors")
        before = len(self.session.unsatisfied) if self.prover else 0
        self.session.range_check(label, rts, offset, bits)
        if self.prover and len(self.session.unsatisfied) > before:
            self.failures.append(f"range check {label} failed")

    def compile(self) -> LayeredCircuit:
        return self.b.compile()

    def run(self) -> None:
        """Run the shared lookup, then prove or verify the circuit."""
        self.session.lookups()
        if self.b._outputs:
            self.session.gkr(self.compile())

    @property
    def satisfied(self) -> bool:
        return not self.failures


# -- plain helpers ------------------------------------------------------------


def absolute(v: QuantizedValue) -> FieldElement:
    """sign * encoding; lies in [0, 2^q) for a validated value."""
    return FieldElement(v.sign * v.encoding % P)


@dataclass(frozen=True)
class TruncatedProduct:
    product: int  # signed integer a * b at scale 2^(2 q_d)
    result: QuantizedValue  # the truncated product
    remainder: int  # |a * b| - |result| * 2^q_d


def trunc_mul(a: QuantizedValue, b: QuantizedValue) -> TruncatedProduct:
    """Multiply two quantized values and truncate the magnitude toward zero."""
    if a.q_d != b.q_d:
        raise ValueError("operands use different q_d")
    av, bv = to_signed(a.encoding), to_signed(b.encoding)
    c = av * bv
    mag, e = divmod(abs(c), 1 << a.q_d)
    sign = a.sign * b.sign % P
    enc = (mag if sign == 1 else -mag) % P
    return TruncatedProduct(c, QuantizedValue(enc, sign, a.q_i, a.q_d), e)


def max_relation_holds(values, claimed, bits: int) -> np.ndarray:
    """The max gadget's constraints evaluated in the field, one row per instance.

    ``values`` is (m, n) and ``claimed`` has length m. A row holds when every
    claimed - a_i lies in [0, 2^bits) and the product of the gaps vanishes.
    """
    if isinstance(values, np.ndarray) and values.dtype == np.uint64:
        vals = np.atleast_2d(values)
    else:
        vals = (np.atleast_2d(np.asarray(values, dtype=object)) % P).astype(np.uint64)
    top = fvec.asvec(np.asarray(claimed).reshape(-1))
    m, n = vals.shape
    gaps = fvec.sub(np.repeat(top, n), vals.reshape(-1)).reshape(m, n)
    in_range = (gaps < np.uint64(1 << bits)).all(axis=1)
    prod = gaps[:, 0].copy()
    for j in range(1, n):
        prod = fvec.mul(prod, gaps[:, j].copy())
    return in_range & (prod == 0)


# -- circuit gadgets ----------------------------------------------------------


@dataclass
class Validated:
    value: Sig
    sign: Sig
    magnitude: Sig


def _split_signed(values) -> tuple[list[int], list[int], list[int]]:
    ints = [to_signed(int(v) % P) for v in values]
    signs = [-1 if x < 0 else 1 for x in ints]
    return ints, signs, [abs(x) for x in ints]


def quantize_validate(
    cs: ConstraintSystem,
    name: str,
    values=None,
    size: int | None = None,
    q: int = 32,
    signs=None,
) -> Validated:
    """Commit a vector with its signs and magnitudes and constrain them.

    ``values`` are signed integers or field encodings. ``signs`` overrides
    the derived signs, which lets tests exercise invalid witnesses.
    """
    vals = sg = mags = None
    if cs.prover:
        vals, derived, mags = _split_signed(values)
        sg = derived if signs is None else [to_signed(int(s) % P) for s in signs]
        mags = [s * v for s, v in zip(sg, vals)]
        size = len(vals)
    v = cs.witness(name, vals, size)
    s = cs.witness(f"{name}.sign", sg, size)
    m = cs.witness(f"{name}.abs", mags, size)
    one = cs.const(1)
    cs.assert_zero(cs.sub(cs.mul(s, s), one), f"{name} sign")
    cs.assert_zero(cs.sub(m, cs.mul(s, v)), f"{name} magnitude")
    cs.range(f"{name}.abs.range", [(1, m, None)], 0, q)
    return Validated(v, s, m)


def truncate(cs: ConstraintSystem, label: str, magnitude: Sig, shift: int, bits: int) -> Sig:
    """floor(magnitude / 2^shift) for a non-negative wire, with its remainder."""
    quo = rem = None
    if cs.prover:
        pairs = [divmod(int(x), 1 << shift) for x in magnitude.values]
        quo, rem = [a for a, _ in pairs], [b for _, b in pairs]
    n = len(magnitude)
    qs = cs.witness(f"{label}.quo", quo, n)
    rs = cs.witness(f"{label}.rem", rem, n)
    cs.assert_zero(cs.sub(magnitude, cs.add(cs.scale(qs, 1 << shift), rs)), f"{label} truncation")
    cs.range(f"{label}.rem.range", [(1, rs, None)], 0, shift)
    cs.range(f"{label}.quo.range", [(1, qs, None)], 0, bits)
    return qs


def signed_truncate(cs: ConstraintSystem, label: str, value: Sig, shift: int, bits: int) -> tuple[Sig, Sig]:
    """Split a signed wire into (sign, floor(|value| / 2^shift))."""
    sg = None
    if cs.prover:
        sg = [-1 if int(x) < 0 else 1 for x in value.values]
    s = cs.witness(f"{label}.sign", sg, len(value))
    cs.assert_zero(cs.sub(cs.mul(s, s), cs.const(1)), f"{label} sign")
    mag = cs.mul(s, value)
    return s, truncate(cs, label, mag, shift, bits)


def trunc_mul_gadget(
    cs: ConstraintSystem, label: str, a: Validated, b: Validated, q_d: int, bits: int = 32
) -> tuple[Sig, Sig]:
    """Elementwise truncated product; returns (sign, magnitude)."""
    mag = truncate(cs, label, cs.mul(a.magnitude, b.magnitude), q_d, bits)
    return cs.mul(a.sign, b.sign), mag


def max_gadget(
    cs: ConstraintSystem, label: str, values: Sig, bits: int, claimed=None, public: bool = False
) -> Sig:
    """Prove a committed non-negative vector's maximum.

    Every difference max - a_i is range-checked and the product of the
    differences must vanish. ``claimed`` substitutes a prover value, used to
    exercise forged maxima. With ``public`` the maximum is a public input.
    """
    top = None
    if public:
        m = cs.public(f"{label}.max", [int(claimed)])
    else:
        if cs.prover:
            top = [int(max(values.values)) if claimed is None else int(claimed)]
        m = cs.witness(f"{label}.max", top, 1)
    cs.range(f"{label}.gap", [(1, m, ("low", 0)), (-1, values, None)], 0, bits)
    cs.assert_zero(cs.product(cs.sub(m, values)), f"{label} max attained")
    return m
