"""Prover and verifier sessions shared by the proof pipelines.

A session owns the Fiat-Shamir transcript and the proof byte stream, and keeps
track of committed vectors, pending evaluation claims, and range checks. The
prover and verifier run the same sequence of calls, so every message the
prover writes is read back and absorbed in the same position.

Range checks decompose a value into 16-bit limbs that are all looked up in one
shared table (0 .. 2^16 - 1). A top limb narrower than 16 bits is also looked
up after scaling by 2^(16 - r), which bounds it by 2^r. The recomposition is a
linear relation, checked at the lookup's random point.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import fvec
from .field import ExtElement, P
from .fvec import EVec
from .gkr import (
    GKRProof,
    LayeredCircuit,
    _segment_layout,
    circuit_evaluate,
    gkr_prove,
    gkr_verify,
    read_gkr,
    write_gkr,
)
from .logup import logup_prove_core, logup_verify_core, range_table_eval, read_core, write_core
from .multilinear import MultilinearPoly, eq_evaluate, eq_table, index_bits, mle_evaluate, next_pow2
from .pcs import PolyCommitment, pcs_commit, pcs_open, pcs_verify, read_opening, write_opening
from .serialize import Reader, Writer
from .sumcheck import SumcheckClaim, SumcheckProof, batch_claims, sumcheck_prove, sumcheck_verify
from .transcript import Transcript

LIMB_BITS = 16
LIMB_TABLE_VARS = 16


class ProofRejected(Exception):
    """Raised inside a verifier session; the message is the rejection reason."""


@dataclass
class RangeTerm:
    """coeff * vec, where vec is a committed name or a public array.

    ``sel`` broadcasts a smaller vector: ("low", k) evaluates it on the last k
    variables of the check's point, ("high", k) on the first k.
    """

    coeff: int
    source: str | np.ndarray
    sel: tuple[str, int] | None = None


@dataclass
class _RangeCheck:
    label: str
    terms: list[RangeTerm]
    offset: int
    bits: int
    num_vars: int

    @property
    def limbs(self) -> int:
        return max(1, -(-self.bits // LIMB_BITS))

    @property
    def top_bits(self) -> int:
        return self.bits - LIMB_BITS * (self.limbs - 1)

    def segments(self) -> list[tuple[str, int]]:
        """(limb name, scale) query segments."""
        out = [(f"{self.label}.limb{j}", 1) for j in range(self.limbs)]
        if self.top_bits < LIMB_BITS:
            out.append((f"{self.label}.limb{self.limbs - 1}", 1 << (LIMB_BITS - self.top_bits)))
        return out


def _sub_point(point, sel):
    if sel is None:
        return list(point)
    side, k = sel
    return list(point[len(point) - k :]) if side == "low" else list(point[:k])


def _broadcast(vec: np.ndarray, n: int, sel) -> np.ndarray:
    if sel is None:
        out = np.zeros(n, dtype=np.uint64)
        out[: len(vec)] = vec
        return out
    side, k = sel
    base = np.zeros(1 << k, dtype=np.uint64)
    base[: len(vec)] = vec
    reps = n >> k
    return np.tile(base, reps) if side == "low" else np.repeat(base, reps)


def _place_segments(sizes: Sequence[int]) -> tuple[list[int], int]:
    """Aligned offsets for power-of-two blocks, largest first."""
    order = sorted(range(len(sizes)), key=lambda i: -sizes[i])
    offsets = [0] * len(sizes)
    pos = 0
    for i in order:
        offsets[i] = pos
        pos += sizes[i]
    return offsets, next_pow2(pos)


class _Base:
    def __init__(self, transcript: Transcript):
        self.t = transcript
        self.coms: dict[str, PolyCommitment] = {}
        self.order: list[str] = []
        self.claims: dict[str, list[tuple[list[ExtElement], ExtElement]]] = {}
        self.ranges: list[_RangeCheck] = []
        self.lookup_count = 0

    def _lookup_name(self, key: str) -> str:
        return f"lookup{self.lookup_count}.{key}"

    def _register(self, name: str, com: PolyCommitment) -> None:
        if name in self.coms:
            raise ValueError(f"vector {name!r} is already committed")
        self.coms[name] = com
        self.order.append(name)

    def challenge(self, label: bytes = b"ch") -> ExtElement:
        return self.t.challenge_ext(label)

    def challenges(self, n: int, label: bytes = b"ch") -> list[ExtElement]:
        return self.t.challenge_vec(n, label)

    def claim(self, name: str, point, value: ExtElement) -> None:
        if name not in self.coms:
            raise KeyError(f"claim on uncommitted vector {name!r}")
        self.claims.setdefault(name, []).append((list(point), ExtElement.lift(value)))

    def num_vars(self, name: str) -> int:
        return self.coms[name].num_vars

    def _register_range(self, label, terms, offset, bits, size) -> _RangeCheck:
        if bits <= 0 or bits > 4 * LIMB_BITS:
            raise ValueError("range width must be 1..64 bits")
        rc = _RangeCheck(label, list(terms), offset % P, bits, size.bit_length() - 1)
        self.ranges.append(rc)
        return rc


class ProverSession(_Base):
    def __init__(self, transcript: Transcript, writer: Writer | None = None):
        super().__init__(transcript)
        self.w = writer or Writer()
        self.polys: dict[str, MultilinearPoly] = {}
        self.values: dict[str, np.ndarray] = {}
        self.unsatisfied: list[str] = []

    # messages
    def send_ext(self, elems, label: bytes = b"msg") -> None:
        self.w.ext(elems)
        self.t.absorb_ext(label, elems)

    def send_base(self, values, label: bytes = b"msg") -> None:
        v = fvec.asvec(values)
        self.w.base(v)
        self.t.absorb(label, fvec.base_to_bytes(v))

    def commit(self, name: str, values, size: int | None = None) -> MultilinearPoly:
        v = fvec.asvec(values) if not isinstance(values, np.ndarray) or values.dtype != np.int64 else fvec.from_signed(values)
        poly = MultilinearPoly.padded(v, size)
        com = pcs_commit(poly)
        self.w.raw(com.root)
        self.t.absorb(b"com:" + name.encode(), com.root)
        self._register(name, com)
        self.polys[name] = poly
        self.values[name] = v
        return poly

    def _adopt(self, name: str, poly: MultilinearPoly, com: PolyCommitment) -> None:
        self._register(name, com)
        self.polys[name] = poly

    def evaluate(self, name: str, point) -> ExtElement:
        return mle_evaluate(self.polys[name], point)

    def open_claim(self, name: str, point) -> ExtElement:
        """Send f(point) for a committed f and record the claim."""
        v = self.evaluate(name, point)
        self.send_ext([v], b"eval")
        self.claim(name, point, v)
        return v

    # sub-protocols
    def sumcheck(self, claim: SumcheckClaim) -> SumcheckProof:
        proof = sumcheck_prove(claim, self.t)
        for rnd in proof.rounds:
            self.w.ext(rnd)
        self.w.ext(proof.final_evals)
        return proof

    def gkr(self, circuit: LayeredCircuit) -> GKRProof:
        seg_vals = {s.name: self.values[s.name] for s in circuit.committed_segments()}
        proof = gkr_prove(circuit, seg_vals, self.t)
        write_gkr(self.w, proof)
        expected = circuit.expected_output
        out = circuit_evaluate(circuit, seg_vals)[0][: len(expected)]
        if not np.array_equal(out, expected):
            self.unsatisfied.append("circuit output differs from the expected vector")
        for pt, evals in zip(proof.input_points, proof.input_evals):
            it = iter(evals)
            for s, _prefix, low in _segment_layout(circuit, pt):
                if s.committed:
                    self.claim(s.name, low, next(it))
        return proof

    def range_check(self, label: str, terms: Sequence[RangeTerm], offset: int, bits: int) -> None:
        """Commit limbs showing sum(terms) + offset lies in [0, 2^bits)."""
        sizes = []
        for t in terms:
            if t.sel is None:
                sizes.append(len(self.polys[t.source]) if isinstance(t.source, str) else next_pow2(len(t.source)))
        if not sizes:
            raise ValueError("range check needs a full-size term")
        n = max(sizes)
        rc = self._register_range(label, terms, offset, bits, n)
        acc = np.full(n, rc.offset, dtype=np.uint64)
        for t in terms:
            src = self.values[t.source] if isinstance(t.source, str) else fvec.asvec(t.source)
            acc = fvec.add(acc, fvec.mul(_broadcast(src, n, t.sel), t.coeff % P))
        if np.any(acc >= np.uint64(1 << bits) if bits < 64 else False):
            self.unsatisfied.append(f"range check {label} out of range")
        for j in range(rc.limbs):
            limb = (acc >> np.uint64(LIMB_BITS * j)) & np.uint64(0xFFFF)
            if j == rc.limbs - 1:
                limb = acc >> np.uint64(LIMB_BITS * j)  # keep overflow visible to the lookup
            self.commit(f"{label}.limb{j}", limb, n)

    def lookups(self) -> None:
        """Run one LogUp over all limb segments registered so far."""
        if not self.ranges:
            return
        segs = [(name, scale, 1 << rc.num_vars) for rc in self.ranges for name, scale in rc.segments()]
        offsets, width = _place_segments([s[2] for s in segs])
        a = np.zeros(width, dtype=np.uint64)
        for (name, scale, size), off in zip(segs, offsets):
            a[off : off + size] = fvec.mul(self.polys[name].evals.c0, scale)
        table = np.arange(1 << LIMB_TABLE_VARS, dtype=np.uint64)
        in_table = a < np.uint64(len(table))
        if not in_table.all():
            self.unsatisfied.append("lookup query outside the table")
        mult = np.bincount(a[in_table].astype(np.int64), minlength=len(table)).astype(np.uint64)
        core = logup_prove_core(a, table, mult, self.t)
        write_core(self.w, core)
        for key in ("m", "h0", "h1"):
            poly, com = core.polys[key]
            self._adopt(self._lookup_name(key), poly, com)
        h0, ag = core.query_check.final_evals
        h1, m = core.table_check.final_evals
        self.claim(self._lookup_name("h0"), core.query_point, h0)
        self.claim(self._lookup_name("h1"), core.table_point, h1)
        self.claim(self._lookup_name("m"), core.table_point, m)
        self.lookup_count += 1
        qpt = core.query_point
        for rc in self.ranges:
            low = qpt[len(qpt) - rc.num_vars :]
            for j in range(rc.limbs):
                self.open_claim(f"{rc.label}.limb{j}", low)
            for t in rc.terms:
                if isinstance(t.source, str):
                    self.open_claim(t.source, _sub_point(low, t.sel))
        self.ranges = []

    def finalize(self) -> bytes:
        for name in self.order:
            claims = self.claims.get(name)
            if not claims:
                continue
            poly = self.polys[name]
            point = claims[0][0]
            if len(claims) > 1:
                rho = self.t.challenge_ext(b"open-rho")
                parts = [SumcheckClaim(v, [poly, MultilinearPoly(eq_table(pt))]) for pt, v in claims]
                combined = batch_claims(parts, rho)
                combined.reveal = [poly]
                proof = self.sumcheck(combined)
                point = proof.point
            write_opening(self.w, pcs_open(poly, point, self.coms[name]))
        return self.w.getvalue()


class VerifierSession(_Base):
    """Mirror of :class:`ProverSession`; ``expected`` pins named commitments up front."""

    def __init__(self, transcript: Transcript, reader: Reader, expected: dict[str, PolyCommitment] | None = None):
        super().__init__(transcript)
        self.r = reader
        self.expected = dict(expected or {})

    def recv_ext(self, n: int, label: bytes = b"msg") -> list[ExtElement]:
        elems = self.r.ext(n)
        self.t.absorb_ext(label, elems)
        return elems

    def recv_base(self, n: int, label: bytes = b"msg") -> np.ndarray:
        v = self.r.base(n)
        self.t.absorb(label, fvec.base_to_bytes(v))
        return v

    def commit(self, name: str, size: int, expected: PolyCommitment | None = None) -> PolyCommitment:
        k = next_pow2(size).bit_length() - 1
        com = PolyCommitment(self.r.raw(32), k)
        expected = expected if expected is not None else self.expected.get(name)
        if expected is not None and (expected.root != com.root or expected.num_vars != k):
            raise ProofRejected(f"commitment to {name} does not match")
        self.t.absorb(b"com:" + name.encode(), com.root)
        self._register(name, com)
        return com

    def open_claim(self, name: str, point) -> ExtElement:
        v = self.recv_ext(1, b"eval")[0]
        self.claim(name, point, v)
        return v

    def sumcheck(self, claimed, degree: int, num_vars: int, n_final: int, final_oracle=None):
        rounds = [self.r.ext(degree + 1) for _ in range(num_vars)]
        proof = SumcheckProof(rounds, self.r.ext(n_final))
        res = sumcheck_verify(claimed, proof, degree, num_vars, self.t, final_oracle)
        if not res:
            raise ProofRejected(res.reason)
        return res, proof.final_evals

    def gkr(self, circuit: LayeredCircuit, output=None):
        proof = read_gkr(self.r, circuit)
        res = gkr_verify(circuit, output, proof, self.t)
        if not res:
            raise ProofRejected(f"gkr: {res.reason}")
        for name, low, val in res.segment_claims:
            self.claim(name, low, val)
        return res

    def range_check(self, label: str, terms: Sequence[RangeTerm], offset: int, bits: int) -> None:
        n = 0
        for t in terms:
            if t.sel is None:
                k = self.coms[t.source].num_vars if isinstance(t.source, str) else next_pow2(len(t.source)).bit_length() - 1
                n = max(n, 1 << k)
        rc = self._register_range(label, terms, offset, bits, n)
        for j in range(rc.limbs):
            self.commit(f"{label}.limb{j}", n)

    def lookups(self) -> None:
        if not self.ranges:
            return
        segs = [(name, scale, 1 << rc.num_vars) for rc in self.ranges for name, scale in rc.segments()]
        offsets, width = _place_segments([s[2] for s in segs])
        qvars = width.bit_length() - 1
        core = read_core(self.r, qvars, LIMB_TABLE_VARS)
        ok, reason, lc = logup_verify_core(core, qvars, LIMB_TABLE_VARS, self.t, range_table_eval)
        if not ok:
            raise ProofRejected(reason)
        for key, com in (("m", core.com_m), ("h0", core.com_h0), ("h1", core.com_h1)):
            self._register(self._lookup_name(key), com)
        self.claim(self._lookup_name("h0"), lc.query_point, lc.h0)
        self.claim(self._lookup_name("h1"), lc.table_point, lc.h1)
        self.claim(self._lookup_name("m"), lc.table_point, lc.m)
        self.lookup_count += 1
        qpt = lc.query_point
        limb_vals: dict[str, ExtElement] = {}
        for rc in self.ranges:
            low = qpt[len(qpt) - rc.num_vars :]
            recomposed = ExtElement(0)
            for j in range(rc.limbs):
                v = self.open_claim(f"{rc.label}.limb{j}", low)
                limb_vals[f"{rc.label}.limb{j}"] = v
                recomposed = recomposed + v * (1 << (LIMB_BITS * j))
            expected = ExtElement(rc.offset)
            for t in rc.terms:
                sub = _sub_point(low, t.sel)
                if isinstance(t.source, str):
                    v = self.open_claim(t.source, sub)
                else:
                    k = len(sub)
                    data = np.zeros(1 << k, dtype=np.uint64)
                    data[: len(t.source)] = t.source
                    v = mle_evaluate(MultilinearPoly(EVec(data)), sub)
                expected = expected + v * t.coeff
            if recomposed != expected:
                raise ProofRejected(f"range check {rc.label}: recomposition mismatch")
        # the queried vector must be exactly the concatenation of limb segments
        a_val = ExtElement(0)
        for (name, scale, size), off in zip(segs, offsets):
            low_k = size.bit_length() - 1
            high = qvars - low_k
            prefix = eq_evaluate(qpt[:high], index_bits(off >> low_k, high)) if high else ExtElement(1)
            a_val = a_val + prefix * limb_vals[name] * scale
        if a_val != lc.query_value:
            raise ProofRejected("lookup queries do not match the limb commitments")
        self.ranges = []

    def finalize(self) -> None:
        for name in self.order:
            claims = self.claims.get(name)
            if not claims:
                continue
            com = self.coms[name]
            point, value = claims[0]
            if len(claims) > 1:
                rho = self.t.challenge_ext(b"open-rho")
                total, weight = ExtElement(0), ExtElement(1)
                weights = []
                for _pt, v in claims:
                    total = total + v * weight
                    weights.append(weight)
                    weight = weight * rho

                def oracle(z, fe, claims=claims, weights=weights):
                    g = ExtElement(0)
                    for (pt, _v), wgt in zip(claims, weights):
                        g = g + eq_evaluate(pt, z) * wgt
                    return fe[0] * g

                res, fe = self.sumcheck(total, 2, com.num_vars, 1, oracle)
                point, value = res.point, fe[0]
            opening = read_opening(self.r, com.num_vars)
            if not pcs_verify(com, point, value, opening):
                raise ProofRejected(f"opening of {name} failed")
        self.r.finish()
