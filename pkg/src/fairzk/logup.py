"""LogUp lookup argument.

Shows that every query a_i appears in a public table T using the identity
    sum_i 1/(gamma + a_i) = sum_j m_j/(gamma + t_j)
with helper columns h0 = 1/(gamma + A) and h1 = m/(gamma + T). Three sum
relations are proved; the plain-sum relation is folded into the two zero-check
sumchecks with a random weight, so the argument runs two sumchecks in total.
"""

from __future__ import annotations

import hashlib
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .field import ExtElement, FieldError, P
from .fvec import EVec, asvec
from .multilinear import MultilinearPoly, eq_evaluate, eq_table, mle_evaluate, next_pow2
from .pcs import OpeningProof, PolyCommitment, pcs_commit, pcs_open, pcs_verify, read_opening, write_opening
from .serialize import Reader, Writer
from .sumcheck import (
    SumcheckClaim,
    SumcheckProof,
    Term,
    batch_claims,
    sumcheck_prove,
    sumcheck_verify,
)
from .transcript import Transcript


class NotInTableError(ValueError):
    pass


@dataclass
class LookupInstance:
    table: np.ndarray
    queries: np.ndarray
    multiplicities: np.ndarray

    @staticmethod
    def honest(table, queries) -> "LookupInstance":
        t, a = asvec(table), asvec(queries)
        return LookupInstance(t, a, build_multiplicities(t, a))


def build_multiplicities(table, queries) -> np.ndarray:
    t = asvec(table)
    a = asvec(queries)
    pos: dict[int, int] = {}
    for j, v in enumerate(t.tolist()):
        pos.setdefault(v, j)
    m = np.zeros(len(t), dtype=np.uint64)
    if len(a) == 0:
        return m
    if _is_range(t):
        if np.any(a >= np.uint64(len(t))):
            bad = int(a[a >= np.uint64(len(t))][0])
            raise NotInTableError(f"query value {bad} is not in the table")
        return np.bincount(a.astype(np.int64), minlength=len(t)).astype(np.uint64)
    for v in a.tolist():
        j = pos.get(v)
        if j is None:
            raise NotInTableError(f"query value {v} is not in the table")
        m[j] += np.uint64(1)
    return m


def _is_range(t: np.ndarray) -> bool:
    return len(t) > 0 and bool(np.array_equal(t, np.arange(len(t), dtype=np.uint64)))


def pad_instance(inst: LookupInstance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pad queries and table to powers of two with copies of t_0.

    Padded table rows get multiplicity 0; padded queries are charged to t_0.
    """
    t = asvec(inst.table)
    a = asvec(inst.queries)
    m = np.asarray(inst.multiplicities, dtype=np.uint64)
    n_pad = next_pow2(len(a)) - len(a) if len(a) else 1
    a = np.concatenate([a, np.full(n_pad, t[0], dtype=np.uint64)])
    t_size = next_pow2(len(t))
    t_full = np.concatenate([t, np.full(t_size - len(t), t[0], dtype=np.uint64)])
    m_full = np.zeros(t_size, dtype=np.uint64)
    m_full[: len(m)] = m
    m_full[0] = (int(m_full[0]) + n_pad) % P
    return t_full, a, m_full


def range_table_eval(point: Sequence[ExtElement]) -> ExtElement:
    """MLE of the table (0, 1, ..., 2^k - 1) at a point: sum_i x_i 2^(k-1-i)."""
    k = len(point)
    acc = ExtElement(0)
    for i, x in enumerate(point):
        acc = acc + ExtElement.lift(x) * (1 << (k - 1 - i))
    return acc


@dataclass
class LogupCore:
    gamma_retries: int
    com_m: PolyCommitment
    com_h0: PolyCommitment
    com_h1: PolyCommitment
    helper_sum: ExtElement
    query_check: SumcheckProof
    table_check: SumcheckProof
    # prover-side handles for opening
    polys: dict = field(default_factory=dict, compare=False)

    @property
    def query_point(self) -> list[ExtElement]:
        return self.query_check.point

    @property
    def table_point(self) -> list[ExtElement]:
        return self.table_check.point


def _draw_gamma(transcript: Transcript, retry: int) -> ExtElement:
    gamma = transcript.challenge_ext(b"logup-gamma")
    for _ in range(retry):
        transcript.absorb(b"logup-retry", b"")
        gamma = transcript.challenge_ext(b"logup-gamma")
    return gamma


def logup_prove_core(
    queries: np.ndarray,
    table: np.ndarray,
    mult: np.ndarray,
    transcript: Transcript,
    tamper: Callable[[str, EVec], EVec] | None = None,
) -> LogupCore:
    """Queries, table and multiplicities must already be padded to powers of two.

    The caller is responsible for having bound the queries to the transcript.
    """
    a = EVec(asvec(queries))
    t = EVec(asvec(table))
    m_poly = MultilinearPoly(EVec(asvec(mult)))
    com_m = pcs_commit(m_poly)
    transcript.absorb(b"logup-m", com_m.root)

    retry = 0
    while True:
        state = Transcript.__new__(Transcript)
        state.__dict__.update(transcript.__dict__)
        gamma = _draw_gamma(state, retry)
        try:
            a_g = a.shift(gamma)
            t_g = t.shift(gamma)
            h0 = a_g.inverse()
            h1 = t_g.inverse() * m_poly.evals
            break
        except FieldError:
            retry += 1
    transcript.__dict__.update(state.__dict__)
    if tamper is not None:
        h0 = tamper("h0", h0)
        h1 = tamper("h1", h1)
    h0_poly, h1_poly = MultilinearPoly(h0), MultilinearPoly(h1)
    com_h0, com_h1 = pcs_commit(h0_poly), pcs_commit(h1_poly)
    transcript.absorb(b"logup-h", com_h0.root + com_h1.root)
    s = h0.sum()
    transcript.absorb_ext(b"logup-sum", [s])

    ag_poly, tg_poly = MultilinearPoly(a_g), MultilinearPoly(t_g)
    r = transcript.challenge_vec(ag_poly.num_vars, b"logup-r")
    eq_r = MultilinearPoly(eq_table(r))
    rho = transcript.challenge_ext(b"logup-rho")
    zero_q = SumcheckClaim(0, terms=[Term(1, [eq_r, h0_poly, ag_poly]), Term(-1, [eq_r])])
    sum_q = SumcheckClaim(s, [h0_poly])
    claim_q = batch_claims([zero_q, sum_q], rho)
    claim_q.reveal = [h0_poly, ag_poly]
    query_check = sumcheck_prove(claim_q, transcript)

    r2 = transcript.challenge_vec(tg_poly.num_vars, b"logup-r")
    eq_r2 = MultilinearPoly(eq_table(r2))
    rho2 = transcript.challenge_ext(b"logup-rho")
    zero_t = SumcheckClaim(0, terms=[Term(1, [eq_r2, h1_poly, tg_poly]), Term(-1, [eq_r2, m_poly])])
    sum_t = SumcheckClaim(s, [h1_poly])
    claim_t = batch_claims([zero_t, sum_t], rho2)
    claim_t.reveal = [h1_poly, m_poly]
    table_check = sumcheck_prove(claim_t, transcript)

    polys = {"m": (m_poly, com_m), "h0": (h0_poly, com_h0), "h1": (h1_poly, com_h1)}
    return LogupCore(retry, com_m, com_h0, com_h1, s, query_check, table_check, polys)


@dataclass
class LogupClaims:
    """Evaluation claims left for the caller to discharge with PCS openings."""

    query_point: list[ExtElement]
    query_value: ExtElement
    h0: ExtElement
    table_point: list[ExtElement]
    h1: ExtElement
    m: ExtElement


def logup_verify_core(
    core: LogupCore,
    query_vars: int,
    table_vars: int,
    transcript: Transcript,
    table_eval: Callable[[list[ExtElement]], ExtElement] = range_table_eval,
) -> tuple[bool, str, LogupClaims | None]:
    transcript.absorb(b"logup-m", core.com_m.root)
    gamma = _draw_gamma(transcript, core.gamma_retries)
    transcript.absorb(b"logup-h", core.com_h0.root + core.com_h1.root)
    transcript.absorb_ext(b"logup-sum", [core.helper_sum])

    r = transcript.challenge_vec(query_vars, b"logup-r")
    rho = transcript.challenge_ext(b"logup-rho")
    if len(core.query_check.final_evals) != 2 or len(core.table_check.final_evals) != 2:
        return False, "malformed lookup proof", None

    def query_oracle(pt, fe):
        h0, ag = fe
        return eq_evaluate(r, pt) * (h0 * ag - 1) + rho * h0

    res = sumcheck_verify(rho * core.helper_sum, core.query_check, 3, query_vars, transcript, query_oracle)
    if not res:
        return False, f"lookup query sumcheck: {res.reason}", None
    qpt = res.point

    r2 = transcript.challenge_vec(table_vars, b"logup-r")
    rho2 = transcript.challenge_ext(b"logup-rho")
    t_val_holder = {}

    def table_oracle(pt, fe):
        h1, m = fe
        tg = table_eval(pt) + gamma
        t_val_holder["t"] = tg
        return eq_evaluate(r2, pt) * (h1 * tg - m) + rho2 * h1

    res2 = sumcheck_verify(rho2 * core.helper_sum, core.table_check, 3, table_vars, transcript, table_oracle)
    if not res2:
        return False, f"lookup table sumcheck: {res2.reason}", None
    h0, ag = core.query_check.final_evals
    h1, m = core.table_check.final_evals
    return True, "", LogupClaims(qpt, ag - gamma, h0, res2.point, h1, m)


def write_core(w: Writer, core: LogupCore) -> None:
    w.raw(bytes([core.gamma_retries]) + core.com_m.root + core.com_h0.root + core.com_h1.root)
    w.ext([core.helper_sum])
    for sc in (core.query_check, core.table_check):
        for rnd in sc.rounds:
            w.ext(rnd)
        w.ext(sc.final_evals)


def read_core(r: Reader, query_vars: int, table_vars: int) -> LogupCore:
    head = r.raw(1 + 96)
    s = r.ext(1)[0]
    checks = []
    for k in (query_vars, table_vars):
        rounds = [r.ext(4) for _ in range(k)]
        checks.append(SumcheckProof(rounds, r.ext(2)))
    return LogupCore(
        head[0],
        PolyCommitment(head[1:33], table_vars),
        PolyCommitment(head[33:65], query_vars),
        PolyCommitment(head[65:97], table_vars),
        s,
        checks[0],
        checks[1],
    )


# -- standalone argument with its own query commitment -----------------------


@dataclass
class LookupProof:
    com_a: PolyCommitment
    core: LogupCore
    openings: dict[str, OpeningProof]
    query_vars: int
    table_vars: int


def lookup_prove(
    inst: LookupInstance,
    transcript: Transcript,
    tamper: Callable[[str, EVec], EVec] | None = None,
) -> LookupProof:
    table, queries, mult = pad_instance(inst)
    a_poly = MultilinearPoly(EVec(queries))
    com_a = pcs_commit(a_poly)
    transcript.absorb(b"logup-table", _table_digest(table))
    transcript.absorb(b"logup-a", com_a.root)
    core = logup_prove_core(queries, table, mult, transcript, tamper)
    qpt, tpt = core.query_point, core.table_point
    openings = {
        "a": pcs_open(a_poly, qpt, com_a),
        "h0": pcs_open(core.polys["h0"][0], qpt, core.com_h0),
        "m": pcs_open(core.polys["m"][0], tpt, core.com_m),
        "h1": pcs_open(core.polys["h1"][0], tpt, core.com_h1),
    }
    return LookupProof(com_a, core, openings, a_poly.num_vars, core.com_m.num_vars)


def lookup_verify(
    table, proof: LookupProof, transcript: Transcript
) -> tuple[bool, LogupClaims | None]:
    """Verify against the public table; returns the discharged evaluation claims."""
    t = asvec(table)
    t_full = np.concatenate([t, np.full(next_pow2(len(t)) - len(t), t[0], dtype=np.uint64)])
    if t_full.size != 1 << proof.table_vars:
        return False, None
    transcript.absorb(b"logup-table", _table_digest(t_full))
    transcript.absorb(b"logup-a", proof.com_a.root)
    if _is_range(t_full):
        table_eval = range_table_eval
    else:
        t_poly = MultilinearPoly(EVec(t_full))
        table_eval = lambda pt: mle_evaluate(t_poly, pt)  # noqa: E731
    ok, _reason, claims = logup_verify_core(proof.core, proof.query_vars, proof.table_vars, transcript, table_eval)
    if not ok:
        return False, None
    op = proof.openings
    checks = [
        (proof.com_a, claims.query_point, claims.query_value, op["a"]),
        (proof.core.com_h0, claims.query_point, claims.h0, op["h0"]),
        (proof.core.com_m, claims.table_point, claims.m, op["m"]),
        (proof.core.com_h1, claims.table_point, claims.h1, op["h1"]),
    ]
    for com, pt, val, opening in checks:
        if not pcs_verify(com, pt, val, opening):
            return False, None
    return True, claims


def _table_digest(table: np.ndarray) -> bytes:
    return hashlib.sha256(np.asarray(table, dtype="<u8").tobytes()).digest()


def write_lookup_proof(w: Writer, proof: LookupProof) -> None:
    w.raw(proof.com_a.root)
    write_core(w, proof.core)
    for key in ("a", "h0", "m", "h1"):
        write_opening(w, proof.openings[key])


def read_lookup_proof(r: Reader, query_vars: int, table_vars: int) -> LookupProof:
    com_a = PolyCommitment(r.raw(32), query_vars)
    core = read_core(r, query_vars, table_vars)
    openings = {}
    for key, k in (("a", query_vars), ("h0", query_vars), ("m", table_vars), ("h1", table_vars)):
        openings[key] = read_opening(r, k)
    return LookupProof(com_a, core, openings, query_vars, table_vars)
