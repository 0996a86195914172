"""Vectorised Goldilocks arithmetic on numpy uint64 arrays.

Base vectors are uint64 arrays holding canonical residues. Extension vectors
are ``EVec`` pairs (c0, c1); ``c1 is None`` marks a vector known to lie in the
base field, which lets the first sumcheck rounds skip half the work.

The elementwise kernels are compiled with numba; numpy has no 128-bit product.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .field import NONRESIDUE, ExtElement, FieldError, P

U64 = np.uint64
PU = U64(P)


@njit(inline="always", cache=True)
def _mulmod(x, y):
    m = np.uint64(0xFFFFFFFF)
    s = np.uint64(32)
    p = np.uint64(18446744069414584321)
    a0 = x & m
    a1 = x >> s
    b0 = y & m
    b1 = y >> s
    ll = a0 * b0
    lh = a0 * b1
    hl = a1 * b0
    hh = a1 * b1
    t = (ll >> s) + (lh & m) + (hl & m)
    x0 = ll & m
    x1 = t & m
    t2 = (t >> s) + (lh >> s) + (hl >> s) + (hh & m)
    x2 = t2 & m
    x3 = (t2 >> s) + (hh >> s)
    # 2^64 = 2^32 - 1 and 2^96 = -1 (mod p)
    hi = x1 + x2
    pos = x0 + ((hi & m) << s)
    if pos >= p:
        pos -= p
    c = (hi >> s) * m
    r = pos + c
    if r < pos:
        r += m
    elif r >= p:
        r -= p
    n = x2 + x3
    if r >= n:
        return r - n
    return r + (p - n)


@njit(inline="always", cache=True)
def _addmod(x, y):
    p = np.uint64(18446744069414584321)
    s = x + y
    if s < x:
        return s + np.uint64(0xFFFFFFFF)
    if s >= p:
        return s - p
    return s


@njit(inline="always", cache=True)
def _submod(x, y):
    if x >= y:
        return x - y
    return x + (np.uint64(18446744069414584321) - y)


@njit(cache=True)
def _k_mul(a, b, out):
    for i in range(a.size):
        out[i] = _mulmod(a[i], b[i])


@njit(cache=True)
def _k_mul_s(a, s, out):
    for i in range(a.size):
        out[i] = _mulmod(a[i], s)


@njit(cache=True)
def _k_add(a, b, out):
    for i in range(a.size):
        out[i] = _addmod(a[i], b[i])


@njit(cache=True)
def _k_add_s(a, s, out):
    for i in range(a.size):
        out[i] = _addmod(a[i], s)


@njit(cache=True)
def _k_sub(a, b, out):
    for i in range(a.size):
        out[i] = _submod(a[i], b[i])


@njit(cache=True)
def _k_emul(a0, a1, b0, b1, c0, c1):
    w = np.uint64(7)
    for i in range(a0.size):
        v0 = _mulmod(a0[i], b0[i])
        v1 = _mulmod(a1[i], b1[i])
        c0[i] = _addmod(v0, _mulmod(v1, w))
        c1[i] = _addmod(_mulmod(a0[i], b1[i]), _mulmod(a1[i], b0[i]))


@njit(cache=True)
def _k_emul_s(a0, a1, s0, s1, c0, c1):
    w = np.uint64(7)
    for i in range(a0.size):
        v1 = _mulmod(a1[i], s1)
        c0[i] = _addmod(_mulmod(a0[i], s0), _mulmod(v1, w))
        c1[i] = _addmod(_mulmod(a0[i], s1), _mulmod(a1[i], s0))


@njit(cache=True)
def _k_total(a):
    lo = np.uint64(0)
    hi = np.uint64(0)
    m = np.uint64(0xFFFFFFFF)
    s = np.uint64(32)
    for i in range(a.size):
        lo += a[i] & m
        hi += a[i] >> s
    return lo, hi


@njit(cache=True)
def _k_total_rows(a, out):
    # a is 2-D; reduce along axis 1
    for r in range(a.shape[0]):
        acc = np.uint64(0)
        for c in range(a.shape[1]):
            acc = _addmod(acc, a[r, c])
        out[r] = acc


@njit(cache=True)
def _k_scatter(index, values, out):
    for i in range(index.size):
        j = index[i]
        out[j] = _addmod(out[j], values[i])


@njit(cache=True)
def _k_prefix(level_in, out):
    for i in range(out.size):
        out[i] = _mulmod(level_in[2 * i], level_in[2 * i + 1])


@njit(cache=True)
def _k_descend(inv, lv, out):
    for i in range(inv.size):
        out[2 * i] = _mulmod(inv[i], lv[2 * i + 1])
        out[2 * i + 1] = _mulmod(inv[i], lv[2 * i])


@njit(cache=True)
def _k_vecmat(v, m, out):
    # out[j] = sum_i v[i] * m[i, j]
    for i in range(m.shape[0]):
        vi = v[i]
        if vi == 0:
            continue
        for j in range(m.shape[1]):
            out[j] = _addmod(out[j], _mulmod(vi, m[i, j]))


@njit(cache=True)
def _k_matvec(m, v, out):
    for i in range(m.shape[0]):
        acc = np.uint64(0)
        for j in range(m.shape[1]):
            acc = _addmod(acc, _mulmod(m[i, j], v[j]))
        out[i] = acc


@njit(inline="always", cache=True)
def _emul(a0, a1, b0, b1):
    w = np.uint64(7)
    return (
        _addmod(_mulmod(a0, b0), _mulmod(_mulmod(a1, b1), w)),
        _addmod(_mulmod(a0, b1), _mulmod(a1, b0)),
    )


@njit(cache=True)
def _k_round(t0, t1, slots, nfac, deg, acc0, acc1):
    # acc[term, t] = sum_i prod_f table_f(i, t), table_f(i, t) = lo + t (hi - lo)
    k, n = t0.shape
    half = n // 2
    v0 = np.zeros((k, deg + 1), dtype=np.uint64)
    v1 = np.zeros((k, deg + 1), dtype=np.uint64)
    for i in range(half):
        for f in range(k):
            l0, l1 = t0[f, i], t1[f, i]
            d0 = _submod(t0[f, i + half], l0)
            d1 = _submod(t1[f, i + half], l1)
            v0[f, 0], v1[f, 0] = l0, l1
            for t in range(1, deg + 1):
                v0[f, t] = _addmod(v0[f, t - 1], d0)
                v1[f, t] = _addmod(v1[f, t - 1], d1)
        for term in range(slots.shape[0]):
            for t in range(deg + 1):
                a = slots[term, 0]
                p0, p1 = v0[a, t], v1[a, t]
                for j in range(1, nfac[term]):
                    b = slots[term, j]
                    p0, p1 = _emul(p0, p1, v0[b, t], v1[b, t])
                acc0[term, t] = _addmod(acc0[term, t], p0)
                acc1[term, t] = _addmod(acc1[term, t], p1)


@njit(cache=True)
def _k_fold(t0, t1, r0, r1, o0, o1):
    k, n = t0.shape
    half = n // 2
    for f in range(k):
        for i in range(half):
            l0, l1 = t0[f, i], t1[f, i]
            d0 = _submod(t0[f, i + half], l0)
            d1 = _submod(t1[f, i + half], l1)
            m0, m1 = _emul(d0, d1, r0, r1)
            o0[f, i] = _addmod(l0, m0)
            o1[f, i] = _addmod(l1, m1)


@njit(cache=True)
def _k_eq_step(p0, p1, r0, r1, o0, o1):
    for i in range(p0.size):
        m0, m1 = _emul(p0[i], p1[i], r0, r1)
        o0[2 * i] = _submod(p0[i], m0)
        o1[2 * i] = _submod(p1[i], m1)
        o0[2 * i + 1] = m0
        o1[2 * i + 1] = m1


def _arr(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.uint64)


def asvec(values) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype == np.uint64:
        return values
    return np.array([int(v) % P for v in values], dtype=np.uint64)


def from_signed(values) -> np.ndarray:
    """int64 array (possibly negative) to canonical residues."""
    v = np.asarray(values, dtype=np.int64)
    out = v.astype(np.uint64)
    negs = v < 0
    if negs.any():
        out[negs] = PU - (-v[negs]).astype(np.uint64)
    return out


def to_signed(values: np.ndarray) -> np.ndarray:
    """Canonical residues to int64 in (-p/2, p/2]; magnitudes must fit int64."""
    half = U64(P // 2)
    out = values.astype(np.int64)
    negs = values > half
    if negs.any():
        out[negs] = -((PU - values[negs]).astype(np.int64))
    return out


def _binary(kernel, skernel, a, b):
    a = _arr(a)
    out = np.empty_like(a)
    if np.ndim(b) == 0:
        skernel(a.reshape(-1), U64(int(b) % P), out.reshape(-1))
    else:
        b = _arr(np.broadcast_to(b, a.shape))
        kernel(a.reshape(-1), b.reshape(-1), out.reshape(-1))
    return out


def add(a, b):
    return _binary(_k_add, _k_add_s, a, b)


def sub(a, b):
    if np.ndim(b) == 0:
        return add(a, (P - int(b) % P) % P)
    a = _arr(a)
    b = _arr(np.broadcast_to(b, a.shape))
    out = np.empty_like(a)
    _k_sub(a.reshape(-1), b.reshape(-1), out.reshape(-1))
    return out


def neg(a):
    a = _arr(a)
    return np.where(a == 0, a, PU - a)


def mul(a, b):
    return _binary(_k_mul, _k_mul_s, a, b)


def small_mul(a, k: int):
    return mul(a, k)


def total(a) -> int:
    """Sum of a base vector mod p."""
    a = _arr(a).reshape(-1)
    if a.size == 0:
        return 0
    lo, hi = _k_total(a)
    return (int(lo) + (int(hi) << 32)) % P


def total_axis(a: np.ndarray, axis: int) -> np.ndarray:
    a = _arr(a if axis == 1 else a.T)
    out = np.empty(a.shape[0], dtype=np.uint64)
    _k_total_rows(a, out)
    return out


def scatter_total(index: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    """out[j] = sum of values[i] with index[i] == j, mod p."""
    out = np.zeros(size, dtype=np.uint64)
    _k_scatter(np.ascontiguousarray(index, dtype=np.int64), _arr(values), out)
    return out


def vecmat(v: "EVec", m: np.ndarray) -> "EVec":
    """Row combination v @ m for a base-field matrix."""
    m = np.ascontiguousarray(m, dtype=np.uint64)
    parts = []
    for c in (v.c0, v.c1):
        if c is None:
            parts.append(None)
            continue
        out = np.zeros(m.shape[1], dtype=np.uint64)
        _k_vecmat(_arr(c), m, out)
        parts.append(out)
    return EVec(parts[0], parts[1])


def matvec(m: np.ndarray, v: "EVec") -> "EVec":
    """Column combination m @ v for a base-field matrix."""
    m = np.ascontiguousarray(m, dtype=np.uint64)
    parts = []
    for c in (v.c0, v.c1):
        if c is None:
            parts.append(None)
            continue
        out = np.zeros(m.shape[0], dtype=np.uint64)
        _k_matvec(m, _arr(c), out)
        parts.append(out)
    return EVec(parts[0], parts[1])


def pow_vec(a, e: int):
    result = np.ones_like(a)
    base = a
    while e:
        if e & 1:
            result = mul(result, base)
        e >>= 1
        if e:
            base = mul(base, base)
    return result


def batch_inverse(a: np.ndarray) -> np.ndarray:
    """Montgomery batch inversion arranged as a product tree.

    Costs about three multiplications per element plus one scalar inversion.
    """
    a = _arr(a)
    n = a.size
    if n == 0:
        return a.copy()
    if np.any(a == 0):
        raise FieldError("inverse of zero in batch")
    size = 1 << (n - 1).bit_length()
    level = np.ones(size, dtype=np.uint64)
    level[:n] = a
    levels = [level]
    while level.size > 1:
        nxt = np.empty(level.size // 2, dtype=np.uint64)
        _k_prefix(level, nxt)
        level = nxt
        levels.append(level)
    inv = np.array([pow(int(level[0]), P - 2, P)], dtype=np.uint64)
    for lv in reversed(levels[:-1]):
        nxt = np.empty(lv.size, dtype=np.uint64)
        _k_descend(inv, lv, nxt)
        inv = nxt
    return inv[:n]


class EVec:
    """Vector over F_{p^2} stored as two uint64 component arrays."""

    __slots__ = ("c0", "c1")

    def __init__(self, c0: np.ndarray, c1: np.ndarray | None = None):
        self.c0 = c0
        self.c1 = c1

    @staticmethod
    def base(values) -> "EVec":
        return EVec(asvec(values))

    @staticmethod
    def zeros(n: int) -> "EVec":
        return EVec(np.zeros(n, dtype=np.uint64))

    @staticmethod
    def full(n: int, s) -> "EVec":
        s = ExtElement.lift(s)
        c1 = None if s.c1 == 0 else np.full(n, s.c1, dtype=np.uint64)
        return EVec(np.full(n, s.c0, dtype=np.uint64), c1)

    @staticmethod
    def from_elements(elems) -> "EVec":
        elems = [ExtElement.lift(e) for e in elems]
        return EVec(
            np.array([e.c0 for e in elems], dtype=np.uint64),
            np.array([e.c1 for e in elems], dtype=np.uint64),
        )

    def __len__(self):
        return self.c0.size

    @property
    def is_base(self) -> bool:
        return self.c1 is None

    def hi(self) -> np.ndarray:
        return np.zeros_like(self.c0) if self.c1 is None else self.c1

    def __getitem__(self, key) -> "EVec":
        return EVec(self.c0[key], None if self.c1 is None else self.c1[key])

    def element(self, i: int) -> ExtElement:
        return ExtElement(int(self.c0[i]), 0 if self.c1 is None else int(self.c1[i]))

    def to_list(self) -> list[ExtElement]:
        c1 = self.hi()
        return [ExtElement(int(a), int(b)) for a, b in zip(self.c0, c1)]

    def __add__(self, o: "EVec") -> "EVec":
        c1 = _opt(self.c1, o.c1, add)
        return EVec(add(self.c0, o.c0), c1)

    def __sub__(self, o: "EVec") -> "EVec":
        if self.c1 is None and o.c1 is None:
            c1 = None
        else:
            c1 = sub(self.hi(), o.hi())
        return EVec(sub(self.c0, o.c0), c1)

    def __mul__(self, o: "EVec") -> "EVec":
        if self.c1 is None and o.c1 is None:
            return EVec(mul(self.c0, o.c0))
        if self.c1 is None:
            return EVec(mul(self.c0, o.c0), mul(self.c0, o.c1))
        if o.c1 is None:
            return EVec(mul(self.c0, o.c0), mul(self.c1, o.c0))
        a0, a1, b0, b1 = _arr(self.c0), _arr(self.c1), _arr(o.c0), _arr(o.c1)
        c0 = np.empty_like(a0)
        c1 = np.empty_like(a0)
        _k_emul(a0, a1, b0, b1, c0, c1)
        return EVec(c0, c1)

    def scale(self, s) -> "EVec":
        """Multiply every entry by a scalar."""
        s = ExtElement.lift(s)
        s0 = U64(s.c0)
        if s.c1 == 0:
            return EVec(mul(self.c0, s0), None if self.c1 is None else mul(self.c1, s0))
        s1 = U64(s.c1)
        if self.c1 is None:
            return EVec(mul(self.c0, s0), mul(self.c0, s1))
        a0, a1 = _arr(self.c0), _arr(self.c1)
        c0 = np.empty_like(a0)
        c1 = np.empty_like(a0)
        _k_emul_s(a0, a1, s0, s1, c0, c1)
        return EVec(c0, c1)

    def shift(self, s) -> "EVec":
        """Add a scalar to every entry."""
        s = ExtElement.lift(s)
        c0 = add(self.c0, U64(s.c0))
        if s.c1 == 0:
            return EVec(c0, self.c1)
        return EVec(c0, add(self.hi(), U64(s.c1)))

    def sum(self) -> ExtElement:
        return ExtElement(total(self.c0), 0 if self.c1 is None else total(self.c1))

    def dot(self, o: "EVec") -> ExtElement:
        return (self * o).sum()

    def inverse(self) -> "EVec":
        if self.c1 is None:
            return EVec(batch_inverse(self.c0))
        norm = sub(mul(self.c0, self.c0), small_mul(mul(self.c1, self.c1), NONRESIDUE))
        inv = batch_inverse(norm)
        return EVec(mul(self.c0, inv), neg(mul(self.c1, inv)))

    def concat(self, o: "EVec") -> "EVec":
        if self.c1 is None and o.c1 is None:
            return EVec(np.concatenate([self.c0, o.c0]))
        return EVec(np.concatenate([self.c0, o.c0]), np.concatenate([self.hi(), o.hi()]))

    def to_bytes(self) -> bytes:
        """16 bytes per entry: c0 then c1, little-endian."""
        out = np.empty((len(self), 2), dtype="<u8")
        out[:, 0] = self.c0
        out[:, 1] = self.hi()
        return out.tobytes()

    def equals(self, o: "EVec") -> bool:
        return bool(np.array_equal(self.c0, o.c0) and np.array_equal(self.hi(), o.hi()))


def _opt(a, b, op):
    if a is None and b is None:
        return None
    if a is None:
        return b
    if b is None:
        return a
    return op(a, b)


def base_to_bytes(v: np.ndarray) -> bytes:
    return np.asarray(v, dtype="<u8").tobytes()


def base_from_bytes(data: bytes) -> np.ndarray:
    if len(data) % 8:
        raise ValueError("base vector bytes must be a multiple of 8")
    v = np.frombuffer(data, dtype="<u8").astype(np.uint64)
    if np.any(v >= PU):
        raise ValueError("non-canonical field element")
    return v


def ext_from_bytes(data: bytes) -> EVec:
    if len(data) % 16:
        raise ValueError("extension vector bytes must be a multiple of 16")
    v = np.frombuffer(data, dtype="<u8").astype(np.uint64).reshape(-1, 2)
    if np.any(v >= PU):
        raise ValueError("non-canonical field element")
    return EVec(v[:, 0].copy(), v[:, 1].copy())
