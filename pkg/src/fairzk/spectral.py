"""Spectral-norm proofs from a committed eigendecomposition.

For a quantized matrix W the prover works with the Gram matrix on the smaller
side, G = M^T M where M = W when W has at least as many rows as columns and
M = W^T otherwise. Its integer witness is an eigenvector matrix V (columns are
eigenvectors), eigenvalues lam, and error matrices that absorb quantization:

    2^qd * G - V diag(lam) V^T = E * 2^qd + t,   0 <= t < 2^qd
    V V^T = 2^(2 qd) I + E'
    s^2 = lam_max * 2^qd + e,                    0 <= e < 2 s + 2^qd

with |E|, |E'| < 2^q_err. All scales are powers of 2^qd: W, V, lam and s
carry one factor, G, E and E' carry two. The sumchecks in this module touch
each committed matrix a constant number of times, so the prover is quadratic
in the dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import fvec
from .field import DEFAULT_QD, RangeError
from .fvec import EVec
from .gadgets import ConstraintSystem, max_gadget
from .multilinear import MultilinearPoly, eq_evaluate, eq_table, fix_leading, fix_trailing, next_pow2
from .pcs import PolyCommitment
from .serialize import Reader
from .session import ProofRejected, ProverSession, VerifierSession
from .sumcheck import SumcheckClaim
from .transcript import Transcript

VALUE_BITS = 32
SQRT_BITS = 34


# -- numerical oracle ---------------------------------------------------------


@njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = math.sqrt(scale)
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= tol * scale:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k, p], v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return max_sweeps


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues descending, V) with eigenvectors in the columns of V.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.ndim != 2 or a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0))):
        raise ValueError("matrix must be symmetric")
    a = (a + a.T) / 2
    v = np.eye(n)
    _jacobi_sweeps(a, v, tol, max_sweeps)
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], v[:, order]


def gram_side(rows: int, cols: int) -> bool:
    """True when the Gram matrix is W W^T (W has fewer rows than columns)."""
    return rows < cols


def eigen_oracle(w) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors of W W^T over the reals."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("expected a matrix")
    return jacobi_eigh(w @ w.T)


def spectral_norm_real(w) -> float:
    """||W||_2 from the smaller Gram matrix."""
    w = np.asarray(w, dtype=np.float64)
    g = w @ w.T if gram_side(*w.shape) else w.T @ w
    lam, _ = jacobi_eigh(g)
    return math.sqrt(max(lam[0], 0.0))


# -- witness ------------------------------------------------------------------


def quantize_matrix(w, q_i: int = 16, q_d: int = DEFAULT_QD) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)) or np.any(np.abs(w) >= 2.0**q_i):
        raise RangeError(f"matrix entries must be finite with magnitude below 2^{q_i}")
    return np.round(w * 2.0**q_d).astype(np.int64)


def pad_matrix(m: np.ndarray) -> np.ndarray:
    r, c = m.shape
    out = np.zeros((next_pow2(r), next_pow2(c)), dtype=m.dtype)
    out[:r, :c] = m
    return out


def default_qerr(gram_dim: int, q_d: int = DEFAULT_QD) -> int:
    """Error bits: 2^(q_d + 4) * F, with F the padded Gram dimension."""
    return q_d + 4 + (next_pow2(gram_dim).bit_length() - 1)


def _int_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact integer product; falls back to Python ints near int64 limits."""
    bound = float(np.abs(a).max(initial=0)) * float(np.abs(b).max(initial=0)) * a.shape[1]
    if bound < 2.0**62:
        return a @ b
    return (a.astype(object) @ b.astype(object)).astype(object)


@dataclass
class EigenWitness:
    """Integer witness for one spectral-norm proof (padded to powers of two)."""

    m: np.ndarray  # rows x gram, at 2^qd
    v: np.ndarray  # gram x gram
    lam: np.ndarray  # gram
    lam_max: int
    err: np.ndarray  # E, truncated
    rem: np.ndarray  # t
    orth: np.ndarray  # E'
    norms: np.ndarray  # squared column norms minus 2^(2 qd)
    s: int
    e: int
    transposed: bool
    q_d: int
    q_err: int

    @property
    def gram_dim(self) -> int:
        return self.v.shape[0]

    @property
    def norm(self) -> float:
        return self.s / 2.0**self.q_d

    def error_real(self) -> np.ndarray:
        raw = self.err.astype(object) * (1 << self.q_d) + self.rem.astype(object)
        return np.array(raw, dtype=np.float64) / 2.0 ** (3 * self.q_d)

    def orth_real(self) -> np.ndarray:
        return np.array(self.orth, dtype=np.float64) / 2.0 ** (2 * self.q_d)

    def lam_real(self) -> np.ndarray:
        return self.lam.astype(np.float64) / 2.0**self.q_d


def ceil_sqrt(x: int) -> int:
    r = math.isqrt(x)
    return r if r * r == x else r + 1


def complete_witness(
    m: np.ndarray, v: np.ndarray, lam: np.ndarray, q_d: int, q_err: int, transposed: bool, lam_max=None
) -> EigenWitness:
    """Derive the error terms and the square root from (M, V, lam)."""
    one = 1 << q_d
    g = _int_matmul(m.T, m)
    vl = v * lam[None, :]
    raw = g * one - _int_matmul(vl, v.T)
    err = raw // one
    rem = raw - err * one
    orth = _int_matmul(v, v.T) - np.eye(v.shape[0], dtype=np.int64) * one * one
    norms = (v.astype(object) ** 2).sum(axis=0) - one * one
    top = int(lam.max()) if lam_max is None else int(lam_max)
    s = ceil_sqrt(max(top, 0) * one)
    conv = lambda x: np.array(x, dtype=np.int64) if np.abs(np.array(x, dtype=object)).max() < 2**62 else x  # noqa: E731
    return EigenWitness(
        m, v, lam, top, conv(err), conv(rem), conv(orth), conv(norms), s, s * s - top * one, transposed, q_d, q_err
    )


def build_witness(w, q_d: int = DEFAULT_QD, q_i: int = 16, q_err: int | None = None, quantized: bool = False) -> EigenWitness:
    """Quantize W, run the eigen oracle on its Gram matrix, and derive errors."""
    wq = np.asarray(w, dtype=np.int64) if quantized else quantize_matrix(w, q_i, q_d)
    transposed = gram_side(*wq.shape)
    m = pad_matrix(wq.T if transposed else wq)
    real = m.astype(np.float64) / 2.0**q_d
    lam_r, v_r = jacobi_eigh(real.T @ real)
    one = 1 << q_d
    v = np.round(v_r * one).astype(np.int64)
    lam = np.maximum(np.round(lam_r * one), 0).astype(np.int64)
    # nudge columns so every squared norm reaches 2^(2 qd)
    for i in range(v.shape[1]):
        while int((v[:, i].astype(object) ** 2).sum()) < one * one:
            j = int(np.argmax(np.abs(v[:, i])))
            v[j, i] += 1 if v[j, i] >= 0 else -1
    if q_err is None:
        q_err = default_qerr(m.shape[1], q_d)
    return complete_witness(m, v, lam, q_d, q_err, transposed)


def perturbation_check(true_lam, lam, err, orth) -> bool:
    """Whether every claimed eigenvalue lies in its perturbation window.

    lam_i (1 - ||E'||_2) - ||E||_F <= true_i <= lam_i (1 + ||E'||_2) + ||E||_F,
    with both eigenvalue lists sorted the same way.
    """
    true_lam = np.asarray(true_lam, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if true_lam.shape != lam.shape:
        raise ValueError("eigenvalue lists differ in length")
    e_f = float(np.linalg.norm(np.asarray(err, dtype=np.float64)))
    e_2 = float(np.linalg.norm(np.asarray(orth, dtype=np.float64), 2)) if np.size(orth) else 0.0
    lo = lam * (1 - e_2) - e_f
    hi = lam * (1 + e_2) + e_f
    return bool(np.all((lo <= true_lam) & (true_lam <= hi)))


# -- attacks used by the soundness tests ----------------------------------------


def forge_duplicate_pair(wit: EigenWitness) -> EigenWitness:
    """Reuse the top eigenpair in the second slot."""
    v, lam = wit.v.copy(), wit.lam.copy()
    v[:, 1], lam[1] = v[:, 0], lam[0]
    return complete_witness(wit.m, v, lam, wit.q_d, wit.q_err, wit.transposed)


def forge_skewed_vector(wit: EigenWitness, j: int = 0, k: int = 1, amount: float = 0.25) -> EigenWitness:
    """Tilt eigenvector j toward eigenvector k so the basis is not orthogonal."""
    v = wit.v.copy()
    v[:, j] = v[:, j] + np.round(amount * v[:, k]).astype(np.int64)
    return complete_witness(wit.m, v, wit.lam.copy(), wit.q_d, wit.q_err, wit.transposed)


def forge_low_max(wit: EigenWitness) -> EigenWitness:
    """Claim the second-largest eigenvalue as the maximum."""
    second = int(np.sort(wit.lam)[-2]) if len(wit.lam) > 1 else int(wit.lam[0]) - 1
    return complete_witness(wit.m, wit.v, wit.lam.copy(), wit.q_d, wit.q_err, wit.transposed, lam_max=second)


def forge_inflated_eigenvalue(wit: EigenWitness) -> EigenWitness:
    """Grow the top eigenvalue until the error matrix just leaves its range.

    The witness stays internally consistent, so only the error range check
    can catch it.
    """
    bound = 1 << wit.q_err

    def build(delta):
        lam = wit.lam.copy()
        lam[int(np.argmax(lam))] += delta
        return complete_witness(wit.m, wit.v, lam, wit.q_d, wit.q_err, wit.transposed)

    def too_big(x):
        return int(np.abs(np.array(x.err, dtype=object)).max()) >= bound

    hi = 1
    while not too_big(build(hi)):
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if too_big(build(mid)) else (mid, hi)
    return build(hi)


# -- protocol -----------------------------------------------------------------


@dataclass(frozen=True)
class SpectralShape:
    rows: int
    cols: int
    q_d: int = DEFAULT_QD
    q_err: int | None = None

    @property
    def transposed(self) -> bool:
        return gram_side(self.rows, self.cols)

    @property
    def gram(self) -> int:
        return next_pow2(self.rows if self.transposed else self.cols)

    @property
    def outer(self) -> int:
        return next_pow2(self.cols if self.transposed else self.rows)

    @property
    def err_bits(self) -> int:
        return self.q_err if self.q_err is not None else default_qerr(self.gram, self.q_d)


def _vars(n: int) -> int:
    return n.bit_length() - 1


def _w_point(shape: SpectralShape, x, r):
    """Point of W matching M(x, r)."""
    return list(r) + list(x) if shape.transposed else list(x) + list(r)


def _flat(mat: np.ndarray) -> np.ndarray:
    return fvec.from_signed(np.asarray(mat, dtype=np.int64).reshape(-1)) if mat.dtype != object else fvec.asvec(mat.reshape(-1))


def _commit_witness(cs: ConstraintSystem, label: str, wit: EigenWitness | None, shape: SpectralShape):
    g = shape.gram
    ps = cs.session
    names = {}
    for key, size in (("v", g * g), ("err", g * g), ("rem", g * g), ("orth", g * g), ("norms", g)):
        name = f"{label}.{key}"
        if cs.prover:
            ps.commit(name, _flat(getattr(wit, key)))
        else:
            ps.commit(name, size)
        names[key] = name
    lam = cs.witness(f"{label}.lam", None if wit is None else list(wit.lam), g)
    return names, lam


def _spectral_body(cs: ConstraintSystem, label: str, w_name: str, shape: SpectralShape, wit: EigenWitness | None):
    """Shared prover/verifier flow; returns s (the norm at 2^qd)."""
    sess = cs.session
    prover = cs.prover
    qd, b, g = shape.q_d, shape.err_bits, shape.gram
    one = 1 << qd
    kg, ko = _vars(g), _vars(shape.outer)

    # the claimed norm goes first
    if prover:
        sess.send_base([wit.s], b"spectral-norm")
        s_val = wit.s
    else:
        s_val = int(sess.recv_base(1, b"spectral-norm")[0])
    names, lam = _commit_witness(cs, label, wit, shape)
    top = max_gadget(cs, f"{label}.lam", lam, VALUE_BITS, claimed=None if wit is None else wit.lam_max)
    e_sig = cs.witness(f"{label}.sqrt_err", None if wit is None else [wit.e], 1)

    # range checks on every committed witness
    from .session import RangeTerm

    sess.range_check(f"{label}.v.range", [RangeTerm(1, names["v"])], 1 << (VALUE_BITS - 1), VALUE_BITS)
    sess.range_check(f"{label}.err.range", [RangeTerm(1, names["err"])], 1 << b, b + 1)
    sess.range_check(f"{label}.rem.range", [RangeTerm(1, names["rem"])], 0, qd)
    sess.range_check(f"{label}.orth.range", [RangeTerm(1, names["orth"])], 1 << b, b + 1)
    sess.range_check(f"{label}.norms.range", [RangeTerm(1, names["norms"])], 0, VALUE_BITS)
    cs.range(f"{label}.lam.range", [(1, lam, None)], 0, VALUE_BITS)
    s_pub = cs.public(f"{label}.s", [s_val])
    cs.range(f"{label}.sqrt_err.lo", [(1, e_sig, None)], 0, SQRT_BITS)
    cs.range(f"{label}.sqrt_err.hi", [(2, s_pub, None), (-1, e_sig, None)], one - 1, SQRT_BITS)
    sess.lookups()

    # squared column norms: n(r) + 2^(2qd) = sum_{y,i} eq(r, i) V(y, i)^2
    r5 = sess.challenges(kg, b"spectral-r5")
    if prover:
        nval = sess.open_claim(names["norms"], r5)
        vpoly = sess.polys[names["v"]]
        eqb = MultilinearPoly(_tile(eq_table(r5), g))
        proof = sess.sumcheck(SumcheckClaim(nval + one * one, [eqb, vpoly, vpoly], reveal=[vpoly]))
        sess.claim(names["v"], proof.point, proof.final_evals[0])
    else:
        nval = sess.open_claim(names["norms"], r5)
        res, fe = sess.sumcheck(
            nval + one * one, 3, 2 * kg, 1, lambda z, fe: eq_evaluate(r5, z[kg:]) * fe[0] * fe[0]
        )
        sess.claim(names["v"], res.point, fe[0])

    # orthogonality: E'(r1, r2) + 2^(2qd) eq(r1, r2) = sum_x V(r1, x) V(r2, x)
    r1 = sess.challenges(kg, b"spectral-r1")
    r2 = sess.challenges(kg, b"spectral-r2")
    ov = sess.open_claim(names["orth"], r1 + r2)
    target = ov + eq_evaluate(r1, r2) * (one * one)
    if prover:
        vm = _as_matrix(sess, names["v"], g, g)
        a, c = MultilinearPoly(fix_leading(vm, r1)), MultilinearPoly(fix_leading(vm, r2))
        proof = sess.sumcheck(SumcheckClaim(target, [a, c]))
        pt, fe = proof.point, proof.final_evals
    else:
        res, fe = sess.sumcheck(target, 2, kg, 2, lambda z, fe: fe[0] * fe[1])
        pt = res.point
    sess.claim(names["v"], r1 + pt, fe[0])
    sess.claim(names["v"], r2 + pt, fe[1])

    # decomposition: 2^qd E(r3,r4) + t(r3,r4) = 2^qd sum_x M(x,r3) M(x,r4) - sum_x V(r3,x) lam(x) V(r4,x)
    r3 = sess.challenges(kg, b"spectral-r3")
    r4 = sess.challenges(kg, b"spectral-r4")
    ev = sess.open_claim(names["err"], r3 + r4)
    tv = sess.open_claim(names["rem"], r3 + r4)
    if prover:
        mm = _m_matrix(sess, w_name, shape)
        m3, m4 = MultilinearPoly(fix_trailing(mm, r3)), MultilinearPoly(fix_trailing(mm, r4))
        gw = m3.evals.dot(m4.evals)
        sess.send_ext([gw], b"spectral-gram")
        proof = sess.sumcheck(SumcheckClaim(gw, [m3, m4]))
        pt, fe = proof.point, proof.final_evals
    else:
        gw = sess.recv_ext(1, b"spectral-gram")[0]
        res, fe = sess.sumcheck(gw, 2, ko, 2, lambda z, fe: fe[0] * fe[1])
        pt = res.point
    sess.claim(w_name, _w_point(shape, pt, r3), fe[0])
    sess.claim(w_name, _w_point(shape, pt, r4), fe[1])
    vlv = gw * one - ev * one - tv
    if prover:
        vm = _as_matrix(sess, names["v"], g, g)
        a, c = MultilinearPoly(fix_leading(vm, r3)), MultilinearPoly(fix_leading(vm, r4))
        lp = sess.polys[lam.name]
        proof = sess.sumcheck(SumcheckClaim(vlv, [a, lp, c]))
        pt, fe = proof.point, proof.final_evals
    else:
        res, fe = sess.sumcheck(vlv, 3, kg, 3, lambda z, fe: fe[0] * fe[1] * fe[2])
        pt = res.point
    sess.claim(names["v"], r3 + pt, fe[0])
    sess.claim(lam.name, pt, fe[1])
    sess.claim(names["v"], r4 + pt, fe[2])

    # square root: s^2 = lam_max 2^qd + e
    cs.assert_zero(cs.sub(cs.mul(s_pub, s_pub), cs.add(cs.scale(top, one), e_sig)), f"{label} square root")
    return s_val


def _tile(t: EVec, reps: int) -> EVec:
    return EVec(np.tile(t.c0, reps), None if t.c1 is None else np.tile(t.c1, reps))


def _as_matrix(sess: ProverSession, name: str, rows: int, cols: int) -> np.ndarray:
    return sess.polys[name].evals.c0.reshape(rows, cols)


def _m_matrix(sess: ProverSession, w_name: str, shape: SpectralShape) -> np.ndarray:
    r, c = next_pow2(shape.rows), next_pow2(shape.cols)
    w = _as_matrix(sess, w_name, r, c)
    return np.ascontiguousarray(w.T) if shape.transposed else w


def prove_spectral_in(
    sess: ProverSession, w_name: str, shape: SpectralShape, wit: EigenWitness, label: str = "spectral"
) -> int:
    """Append a spectral-norm proof for a W already committed in ``sess``."""
    cs = ConstraintSystem(sess)
    s = _spectral_body(cs, label, w_name, shape, wit)
    cs.run()
    if cs.failures:
        sess.unsatisfied.extend(cs.failures)
    return s


def verify_spectral_in(sess: VerifierSession, w_name: str, shape: SpectralShape, label: str = "spectral") -> int:
    cs = ConstraintSystem(sess)
    s = _spectral_body(cs, label, w_name, shape, None)
    cs.run()
    return s


# -- standalone API -------------------------------------------------------------


@dataclass
class SpectralProof:
    data: bytes
    norm_encoding: int
    q_d: int

    @property
    def norm(self) -> float:
        return self.norm_encoding / 2.0**self.q_d


@dataclass
class SpectralResult:
    ok: bool
    norm: float | None
    reason: str = ""

    def __bool__(self):
        return self.ok


def commit_matrix(sess: ProverSession, name: str, wq: np.ndarray):
    """Commit an integer matrix padded to power-of-two rows and columns."""
    return sess.commit(name, fvec.from_signed(pad_matrix(np.asarray(wq, dtype=np.int64)).reshape(-1)))


def spectral_prove(
    wq: np.ndarray, wit: EigenWitness | None = None, transcript: Transcript | None = None, q_d: int = DEFAULT_QD
) -> tuple[PolyCommitment, SpectralProof, ProverSession]:
    """Commit a quantized matrix and prove its spectral norm."""
    wq = np.asarray(wq, dtype=np.int64)
    if wit is None:
        wit = build_witness(wq, q_d=q_d, quantized=True)
    shape = SpectralShape(wq.shape[0], wq.shape[1], wit.q_d, wit.q_err)
    sess = ProverSession(transcript or Transcript(b"fairzk-spectral"))
    commit_matrix(sess, "W", wq)
    s = prove_spectral_in(sess, "W", shape, wit)
    data = sess.finalize()
    return sess.coms["W"], SpectralProof(data, s, wit.q_d), sess


def spectral_verify(
    com_w: PolyCommitment,
    proof: SpectralProof | bytes,
    rows: int,
    cols: int,
    transcript: Transcript | None = None,
    q_d: int = DEFAULT_QD,
    q_err: int | None = None,
) -> SpectralResult:
    data = proof.data if isinstance(proof, SpectralProof) else proof
    shape = SpectralShape(rows, cols, q_d, q_err)
    sess = VerifierSession(transcript or Transcript(b"fairzk-spectral"), Reader(data))
    try:
        sess.commit("W", next_pow2(rows) * next_pow2(cols), expected=com_w)
        s = verify_spectral_in(sess, "W", shape)
        sess.finalize()
    except ProofRejected as exc:
        return SpectralResult(False, None, str(exc))
    except Exception as exc:  # malformed bytes surface as format errors
        return SpectralResult(False, None, f"malformed proof: {exc}")
    return SpectralResult(True, s / 2.0**q_d)


# -- naive in-circuit reference ---------------------------------------------------


def _naive_body(cs: ConstraintSystem, label: str, shape: SpectralShape, wq: np.ndarray | None, wit: EigenWitness | None):
    """Check the decomposition by materializing every matrix product in the circuit."""
    sess = cs.session
    qd, b, g, o = shape.q_d, shape.err_bits, shape.gram, shape.outer
    one = 1 << qd
    rows, cols = next_pow2(shape.rows), next_pow2(shape.cols)

    def vals(x):
        return None if x is None else np.asarray(x, dtype=object).reshape(-1)

    w = cs.witness("W", vals(None if wq is None else pad_matrix(wq)), rows * cols)
    if cs.prover:
        sess.send_base([wit.s], b"spectral-norm")
        s_val = wit.s
    else:
        s_val = int(sess.recv_base(1, b"spectral-norm")[0])
    get = (lambda k: vals(getattr(wit, k))) if wit is not None else (lambda k: None)
    v = cs.witness(f"{label}.v", get("v"), g * g)
    err = cs.witness(f"{label}.err", get("err"), g * g)
    rem = cs.witness(f"{label}.rem", get("rem"), g * g)
    orth = cs.witness(f"{label}.orth", get("orth"), g * g)
    norms = cs.witness(f"{label}.norms", get("norms"), g)
    lam = cs.witness(f"{label}.lam", get("lam"), g)
    top = max_gadget(cs, f"{label}.lam", lam, VALUE_BITS, claimed=None if wit is None else wit.lam_max)
    e_sig = cs.witness(f"{label}.sqrt_err", None if wit is None else [wit.e], 1)
    cs.range(f"{label}.v.range", [(1, v, None)], 1 << (VALUE_BITS - 1), VALUE_BITS)
    cs.range(f"{label}.err.range", [(1, err, None)], 1 << b, b + 1)
    cs.range(f"{label}.rem.range", [(1, rem, None)], 0, qd)
    cs.range(f"{label}.orth.range", [(1, orth, None)], 1 << b, b + 1)
    cs.range(f"{label}.norms.range", [(1, norms, None)], 0, VALUE_BITS)
    cs.range(f"{label}.lam.range", [(1, lam, None)], 0, VALUE_BITS)
    s_pub = cs.public(f"{label}.s", [s_val])
    cs.range(f"{label}.sqrt_err.lo", [(1, e_sig, None)], 0, SQRT_BITS)
    cs.range(f"{label}.sqrt_err.hi", [(2, s_pub, None), (-1, e_sig, None)], one - 1, SQRT_BITS)

    i, j, x = (a.reshape(-1) for a in np.meshgrid(np.arange(g), np.arange(g), np.arange(o), indexing="ij"))
    m_idx = (lambda xx, rr: rr * cols + xx) if shape.transposed else (lambda xx, rr: xx * cols + rr)
    gram = cs.sum_groups(cs.mul(w[m_idx(x, i)], w[m_idx(x, j)]), o)
    i, j, x = (a.reshape(-1) for a in np.meshgrid(np.arange(g), np.arange(g), np.arange(g), indexing="ij"))
    vl = cs.mul(v, lam[np.tile(np.arange(g), g)])
    vlv = cs.sum_groups(cs.mul(vl[i * g + x], v[j * g + x]), g)
    vv = cs.sum_groups(cs.mul(v[i * g + x], v[j * g + x]), g)
    cs.assert_zero(cs.sub(cs.sub(cs.scale(gram, one), vlv), cs.add(cs.scale(err, one), rem)), "decomposition")
    ident = cs.public(f"{label}.identity", (np.eye(g, dtype=np.int64) * one * one).reshape(-1))
    cs.assert_zero(cs.sub(vv, cs.add(orth, ident)), "orthogonality")
    cols_v = v[np.arange(g * g).reshape(g, g).T.reshape(-1)]
    sq = cs.sum_groups(cs.mul(cols_v, cols_v), g)
    cs.assert_zero(cs.sub(sq, cs.add(norms, cs.const(one * one))), "column norms")
    cs.assert_zero(cs.sub(cs.mul(s_pub, s_pub), cs.add(cs.scale(top, one), e_sig)), "square root")
    return s_val


def naive_spectral_prove(wq: np.ndarray, wit: EigenWitness, transcript: Transcript | None = None) -> SpectralProof:
    """Reference prover whose circuit has cubic size; used for benchmarking."""
    wq = np.asarray(wq, dtype=np.int64)
    shape = SpectralShape(wq.shape[0], wq.shape[1], wit.q_d, wit.q_err)
    sess = ProverSession(transcript or Transcript(b"fairzk-spectral-naive"))
    cs = ConstraintSystem(sess)
    s = _naive_body(cs, "spectral", shape, wq, wit)
    cs.run()
    sess.unsatisfied.extend(cs.failures)
    return SpectralProof(sess.finalize(), s, wit.q_d)


def naive_spectral_verify(
    proof: SpectralProof, rows: int, cols: int, q_d: int = DEFAULT_QD, q_err: int | None = None, transcript=None
) -> SpectralResult:
    shape = SpectralShape(rows, cols, q_d, q_err)
    sess = VerifierSession(transcript or Transcript(b"fairzk-spectral-naive"), Reader(proof.data))
    try:
        cs = ConstraintSystem(sess)
        s = _naive_body(cs, "spectral", shape, None, None)
        cs.run()
        sess.finalize()
    except ProofRejected as exc:
        return SpectralResult(False, None, str(exc))
    return SpectralResult(True, s / 2.0**q_d)
