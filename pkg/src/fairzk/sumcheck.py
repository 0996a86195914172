"""Sumcheck over sums of products of up to three multilinear polynomials."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import fvec
from .field import ExtElement, P, Scalar
from .fvec import EVec
from .multilinear import DimensionError, MultilinearPoly
from .transcript import Transcript

MAX_DEGREE = 3


@dataclass
class Term:
    coeff: ExtElement
    factors: list[MultilinearPoly]


class SumcheckClaim:
    """Claim that sum over the cube of sum_t coeff_t * prod(factors_t) equals claimed_sum.

    ``reveal`` lists the polynomials whose values at the final point are sent
    with the proof; by default every distinct factor in order of appearance.
    """

    def __init__(
        self,
        claimed_sum: Scalar,
        factors: Sequence[MultilinearPoly] | None = None,
        terms: Sequence[Term] | None = None,
        reveal: Sequence[MultilinearPoly] | None = None,
    ):
        if terms is None:
            terms = [Term(ExtElement(1), list(factors or []))]
        terms = [Term(ExtElement.lift(t.coeff), list(t.factors)) for t in terms]
        if not terms or any(not t.factors for t in terms):
            raise ValueError("sumcheck needs at least one factor per term")
        ks = {f.num_vars for t in terms for f in t.factors}
        if len(ks) != 1:
            raise DimensionError("factors have different numbers of variables")
        self.claimed_sum = ExtElement.lift(claimed_sum)
        self.terms = terms
        self.num_vars = ks.pop()
        self.degree = max(len(t.factors) for t in terms)
        if self.degree > MAX_DEGREE:
            raise ValueError(f"degree {self.degree} exceeds {MAX_DEGREE}")
        used = _distinct(f for t in terms for f in t.factors)
        if reveal is None:
            reveal = used
        if not {id(f) for f in reveal} <= {id(f) for f in used}:
            raise ValueError("revealed polynomials must appear in a term")
        self.reveal = list(reveal)


@dataclass
class SumcheckProof:
    rounds: list[list[ExtElement]]
    final_evals: list[ExtElement]
    point: list[ExtElement] = field(default_factory=list, compare=False)


@dataclass
class SumcheckResult:
    ok: bool
    point: list[ExtElement]
    final_value: ExtElement
    reason: str = ""

    def __bool__(self):
        return self.ok


def _distinct(polys) -> list[MultilinearPoly]:
    seen, out = set(), []
    for f in polys:
        if id(f) not in seen:
            seen.add(id(f))
            out.append(f)
    return out


@lru_cache(maxsize=None)
def _interp_matrix(d: int) -> tuple[tuple[int, ...], ...]:
    """Rows map evaluations at 0..d to monomial coefficients (mod p)."""
    n = d + 1
    # invert the Vandermonde matrix V[i][j] = i^j by Gauss-Jordan mod p
    aug = [[pow(i, j, P) for j in range(n)] + [int(i == r) for r in range(n)] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = pow(aug[col][col], P - 2, P)
        aug[col] = [v * inv % P for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(a - f * b) % P for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def evals_to_coeffs(evals: Sequence[ExtElement]) -> list[ExtElement]:
    m = _interp_matrix(len(evals) - 1)
    out = []
    for row in m:
        acc = ExtElement(0)
        for c, e in zip(row, evals):
            if c:
                acc = acc + e * c
        out.append(acc)
    return out


def poly_eval(coeffs: Sequence[ExtElement], x: Scalar) -> ExtElement:
    acc = ExtElement(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _absorb_header(transcript: Transcript, claimed_sum, num_vars: int, degree: int) -> None:
    transcript.absorb(b"sc-claim", ExtElement.lift(claimed_sum).to_bytes() + bytes([num_vars, degree]))


def sumcheck_prove(claim: SumcheckClaim, transcript: Transcript) -> SumcheckProof:
    polys = _distinct(f for t in claim.terms for f in t.factors)
    slot = {id(f): i for i, f in enumerate(polys)}
    n = len(polys[0].evals)
    t0 = np.empty((len(polys), n), dtype=np.uint64)
    t1 = np.zeros((len(polys), n), dtype=np.uint64)
    for i, f in enumerate(polys):
        t0[i] = f.evals.c0
        if f.evals.c1 is not None:
            t1[i] = f.evals.c1
    slots = np.zeros((len(claim.terms), MAX_DEGREE), dtype=np.int64)
    nfac = np.zeros(len(claim.terms), dtype=np.int64)
    for k, t in enumerate(claim.terms):
        nfac[k] = len(t.factors)
        slots[k, : len(t.factors)] = [slot[id(f)] for f in t.factors]
    reveal_slots = [slot[id(f)] for f in claim.reveal]
    deg = claim.degree
    _absorb_header(transcript, claim.claimed_sum, claim.num_vars, deg)

    rounds, point = [], []
    for _ in range(claim.num_vars):
        acc0 = np.zeros((len(claim.terms), deg + 1), dtype=np.uint64)
        acc1 = np.zeros_like(acc0)
        fvec._k_round(t0, t1, slots, nfac, deg, acc0, acc1)
        evals = []
        for t in range(deg + 1):
            acc = ExtElement(0)
            for k, term in enumerate(claim.terms):
                acc = acc + ExtElement(int(acc0[k, t]), int(acc1[k, t])) * term.coeff
            evals.append(acc)
        coeffs = evals_to_coeffs(evals)
        transcript.absorb_ext(b"sc-round", coeffs)
        r = transcript.challenge_ext(b"sc-r")
        rounds.append(coeffs)
        point.append(r)
        half = t0.shape[1] // 2
        o0 = np.empty((len(polys), half), dtype=np.uint64)
        o1 = np.empty_like(o0)
        fvec._k_fold(t0, t1, np.uint64(r.c0), np.uint64(r.c1), o0, o1)
        t0, t1 = o0, o1

    final = [ExtElement(int(t0[s, 0]), int(t1[s, 0])) for s in reveal_slots]
    transcript.absorb_ext(b"sc-final", final)
    return SumcheckProof(rounds, final, point)


def sumcheck_verify(
    claimed_sum: Scalar,
    proof: SumcheckProof,
    degree: int,
    num_vars: int,
    transcript: Transcript,
    final_oracle: Callable[[list[ExtElement], list[ExtElement]], ExtElement] | None = None,
) -> SumcheckResult:
    """Replay the rounds; ``final_oracle(point, final_evals)`` must return f(point)."""
    point: list[ExtElement] = []
    current = ExtElement.lift(claimed_sum)
    if degree > MAX_DEGREE:
        return SumcheckResult(False, point, current, "degree overflow")
    if len(proof.rounds) != num_vars:
        return SumcheckResult(False, point, current, "wrong round count")
    _absorb_header(transcript, current, num_vars, degree)
    for i, coeffs in enumerate(proof.rounds):
        if len(coeffs) != degree + 1:
            return SumcheckResult(False, point, current, f"round {i + 1}: wrong degree")
        if coeffs[0] + poly_eval(coeffs, 1) != current:
            return SumcheckResult(False, point, current, f"round {i + 1}: sum mismatch")
        transcript.absorb_ext(b"sc-round", coeffs)
        r = transcript.challenge_ext(b"sc-r")
        point.append(r)
        current = poly_eval(coeffs, r)
    transcript.absorb_ext(b"sc-final", proof.final_evals)
    if final_oracle is not None and final_oracle(point, proof.final_evals) != current:
        return SumcheckResult(False, point, current, "final evaluation mismatch")
    return SumcheckResult(True, point, current)


def batch_claims(claims: Sequence[SumcheckClaim], rho: Scalar) -> SumcheckClaim:
    """Random linear combination sum_i rho^i * claim_i."""
    if not claims:
        raise ValueError("no claims to batch")
    if len({c.num_vars for c in claims}) != 1:
        raise DimensionError("claims have different numbers of variables")
    rho = ExtElement.lift(rho)
    weight = ExtElement(1)
    total = ExtElement(0)
    terms: list[Term] = []
    for c in claims:
        total = total + c.claimed_sum * weight
        terms.extend(Term(t.coeff * weight, t.factors) for t in c.terms)
        weight = weight * rho
    reveal = _distinct(f for c in claims for f in c.reveal)
    return SumcheckClaim(total, terms=terms, reveal=reveal)


def product_sum(factors: Sequence[MultilinearPoly]) -> ExtElement:
    """Direct sum over the cube of the product of the factors."""
    acc: EVec = factors[0].evals
    for f in factors[1:]:
        acc = acc * f.evals
    return acc.sum()
