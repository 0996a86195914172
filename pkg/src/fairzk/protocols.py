"""End-to-end proofs: model fairness bounds and aggregated dataset statistics.

Every proof is an envelope::

    b"FZKP" | u16 version | u8 protocol | u8 q_i | u8 q_d | u8 q_err (0 = auto)
    | u8 hash id | u8 PCS id | u8 non-residue | u8 flags | u8 n_dims | u32 dims...
    | sections (u8 kind, u32 length, payload) in transcript order

The header bytes and the public inputs are absorbed before the first message,
so the verifier's challenges depend on them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .fairness import AggregatedStats, Dataset, DimensionMismatch, EmptyGroupError, Model
from .field import DEFAULT_QD, DEFAULT_QI, NONRESIDUE, RangeError, quantize_int, to_signed
from .fvec import base_to_bytes
from .gadgets import ConstraintSystem, Sig, encode, quantize_validate, signed_truncate, truncate
from .multilinear import MultilinearPoly, next_pow2
from .pcs import BACKEND_ID, PolyCommitment, pcs_commit
from .serialize import ProofFormatError, Reader
from .session import ProofRejected, ProverSession, VerifierSession
from .spectral import SpectralShape, build_witness, ceil_sqrt, pad_matrix, prove_spectral_in, verify_spectral_in
from .transcript import HASH_ID, Transcript

MAGIC = b"FZKP"
VERSION = 1
VALUE_BITS = 32  # magnitude bound of every validated input
TRUNC_BITS = 40  # bound on truncated quotients
COUNT_BITS = 32
SQRT_ERR_BITS = 42
MAX_DIM = 1 << 20
MAX_ENTRIES = 1 << 22
SAFE_BOUND = 1 << 62  # honest intermediates must stay far below p

ACTIVATIONS = ("sigmoid", "relu")


class Protocol(IntEnum):
    LR = 1
    DNN = 2
    STATS = 3


class ProofError(ValueError):
    """The prover's inputs do not satisfy the relation being proven."""


@dataclass(frozen=True)
class Params:
    q_i: int = DEFAULT_QI
    q_d: int = DEFAULT_QD
    q_err: int | None = None  # None derives it from each Gram dimension

    def __post_init__(self):
        if not (1 <= self.q_i <= 24 and 1 <= self.q_d <= 24):
            raise ValueError("q_i and q_d must lie in [1, 24]")
        if self.q_err is not None and not (self.q_d < self.q_err <= 60):
            raise ValueError("q_err must lie in (q_d, 60]")

    def quantize(self, values) -> list[int]:
        return [quantize_int(float(v), self.q_i, self.q_d) for v in np.asarray(values, dtype=np.float64).reshape(-1)]


@dataclass(frozen=True)
class Header:
    protocol: Protocol
    params: Params
    dims: tuple[int, ...]
    flags: int = 0  # bit 0: relu activation, bit 1: equal-opportunity mode

    def to_bytes(self) -> bytes:
        head = struct.pack(
            "<4sHBBBBBBBBB",
            MAGIC,
            VERSION,
            int(self.protocol),
            self.params.q_i,
            self.params.q_d,
            self.params.q_err or 0,
            HASH_ID,
            BACKEND_ID,
            NONRESIDUE,
            self.flags,
            len(self.dims),
        )
        return head + struct.pack(f"<{len(self.dims)}I", *self.dims)

    @classmethod
    def parse(cls, data: bytes) -> tuple["Header", int]:
        fixed = struct.calcsize("<4sHBBBBBBBBB")
        if len(data) < fixed:
            raise ProofFormatError("unexpected end of proof")
        magic, version, proto, qi, qd, qerr, hid, pid, nr, flags, nd = struct.unpack_from("<4sHBBBBBBBBB", data)
        if magic != MAGIC:
            raise ProofFormatError("bad magic")
        if version != VERSION:
            raise ProofFormatError(f"unsupported version {version}")
        if flags > 3:
            raise ProofFormatError("unknown flag bits")
        if hid != HASH_ID or pid != BACKEND_ID or nr != NONRESIDUE:
            raise ProofFormatError("unsupported hash, PCS or field parameters")
        try:
            protocol = Protocol(proto)
            params = Params(qi, qd, qerr or None)
        except ValueError as exc:
            raise ProofFormatError(str(exc)) from None
        end = fixed + 4 * nd
        if len(data) < end:
            raise ProofFormatError("unexpected end of proof")
        dims = struct.unpack_from(f"<{nd}I", data, fixed)
        if any(d < 1 or d > MAX_DIM for d in dims):
            raise ProofFormatError("dimension out of bounds")
        return cls(protocol, params, tuple(dims), flags), end

    @property
    def activation(self) -> str:
        return "relu" if self.flags & 1 else "sigmoid"

    @property
    def mode(self) -> str:
        return "eo" if self.flags & 2 else "sp"


def _flags(activation: str = "sigmoid", mode: str = "sp") -> int:
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    if mode not in ("sp", "eo"):
        raise ValueError(f"unknown mode {mode!r}")
    return (activation == "relu") | ((mode == "eo") << 1)


@dataclass
class FairnessProof:
    header: Header
    claim: int  # quantized bound on the output disparity
    data: bytes  # full envelope

    @property
    def out_qd(self) -> int:
        return _out_qd(self.header)

    @property
    def bound(self) -> float:
        return self.claim / 2.0**self.out_qd

    def to_bytes(self) -> bytes:
        return self.data


@dataclass
class StatsProof:
    header: Header
    delta: list[int]  # quantized group-mean differences
    spread: list[int]  # quantized largest deviations
    data: bytes

    def stats(self) -> AggregatedStats:
        qd = self.header.params.q_d
        return AggregatedStats(np.array(self.delta) / 2.0**qd, np.array(self.spread) / 2.0**qd, self.header.mode)

    def to_bytes(self) -> bytes:
        return self.data


@dataclass
class Verdict:
    ok: bool
    value: object = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def _out_qd(header: Header) -> int:
    # the LR bound folds L = 1/4 into the output scale
    if header.protocol == Protocol.LR and header.activation == "sigmoid":
        return header.params.q_d + 2
    return header.params.q_d


def _transcript(header: Header, publics: list[list[int]]) -> Transcript:
    t = Transcript(b"fairzk-proof")
    t.absorb(b"header", header.to_bytes())
    for k, vec in enumerate(publics):
        t.absorb(b"public%d" % k, base_to_bytes(encode(vec)))
    return t


def _guard(*values) -> None:
    for v in values:
        if abs(int(v)) >= SAFE_BOUND:
            raise RangeError("an intermediate value overflows the field; reduce q_i or q_d")


def _pad(vec, n: int) -> list[int]:
    return list(vec) + [0] * (n - len(vec))


def _public_stats(stats: AggregatedStats, params: Params, width: int) -> tuple[list[int], list[int]]:
    delta = _pad(params.quantize(stats.delta_x), width)
    spread = _pad(params.quantize(stats.Delta_x), width)
    return delta, spread


def _finish(cs: ConstraintSystem, sess: ProverSession, allow_invalid: bool) -> bytes:
    cs.run()
    failures = cs.failures + sess.unsatisfied
    if failures and not allow_invalid:
        raise ProofError("; ".join(dict.fromkeys(failures)))
    return sess.finalize()


def _reject(fn):
    """Run a verifier body; any exception becomes a rejection with its reason."""
    try:
        return fn()
    except ProofRejected as exc:
        return Verdict(False, None, str(exc))
    except ProofFormatError as exc:
        return Verdict(False, None, f"malformed proof: {exc}")
    except (ValueError, KeyError, IndexError, OverflowError, MemoryError) as exc:
        return Verdict(False, None, f"malformed proof: {exc}")


def _check_params(header: Header, params: Params | None) -> None:
    if params is not None and header.params != params:
        raise ProofRejected("header parameters differ from the expected ones")


# -- logistic regression --------------------------------------------------------


def _lr_circuit(cs: ConstraintSystem, width: int, delta: list[int], spread: list[int], wq, params: Params):
    qd = params.q_d
    w = quantize_validate(cs, "w", wq, width, params.q_i + qd)
    dpub = cs.public("delta", delta)
    spub = cs.public("spread", spread)
    # |<w, delta>| and <|w|, spread>, each truncated back to 2^qd
    _, mean_term = signed_truncate(cs, "lr.mean", cs.sum(cs.mul(w.value, dpub)), qd, TRUNC_BITS)
    spread_term = truncate(cs, "lr.spread", cs.sum(cs.mul(w.magnitude, spub)), qd, TRUNC_BITS)
    # L |t1| + 2 L t2 = (t1 + 2 t2) / 4 for sigmoid, carried by the output scale
    return cs.add(mean_term, cs.scale(spread_term, 2))


def prove_lr_fairness(
    weights,
    stats: AggregatedStats,
    activation: str = "sigmoid",
    params: Params = Params(),
    allow_invalid: bool = False,
) -> tuple[list[PolyCommitment], FairnessProof]:
    """Commit logistic-regression weights and prove their fairness bound."""
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    f = len(weights)
    if f != stats.num_features:
        raise DimensionMismatch(f"dimension mismatch: model has {f} features, stats have {stats.num_features}")
    width = next_pow2(f)
    wq = _pad(params.quantize(weights), width)
    delta, spread = _public_stats(stats, params, width)
    _guard(sum(abs(a) * abs(b) for a, b in zip(wq, delta)), sum(abs(a) * b for a, b in zip(wq, spread)))
    header = Header(Protocol.LR, params, (f,), _flags(activation))
    sess = ProverSession(_transcript(header, [delta, spread]))
    cs = ConstraintSystem(sess)
    out = _lr_circuit(cs, width, delta, spread, wq, params)
    claim = int(out.values[0])
    sess.send_base([claim], b"claim")
    cs.output(out, [claim])
    data = header.to_bytes() + _finish(cs, sess, allow_invalid)
    return [sess.coms["w"]], FairnessProof(header, claim, data)


# -- multilayer networks ----------------------------------------------------------


def _layer_shapes(dims: tuple[int, ...]) -> list[tuple[int, int]]:
    """(rows, cols) of each layer from (F0, F1, ..., Fm)."""
    return [(dims[k + 1], dims[k]) for k in range(len(dims) - 1)]


def _matvec(cs: ConstraintSystem, mat: Sig, vec: Sig, rows: int, cols: int) -> Sig:
    """Row-major (rows x cols) matrix times a length-cols vector."""
    return cs.sum_groups(cs.mul(mat, vec[np.tile(np.arange(cols), rows)]), cols)


def _sqrt_gadget(cs: ConstraintSystem, label: str, square: Sig, one: int) -> Sig:
    """r = ceil(sqrt(square)) with r^2 - square = e in [0, 2r + 2^qd)."""
    root = err = None
    if cs.prover:
        x = int(square.values[0])
        r = ceil_sqrt(x)
        root, err = [r], [r * r - x]
    r_sig = cs.witness(f"{label}.root", root, 1)
    e_sig = cs.witness(f"{label}.err", err, 1)
    cs.assert_zero(cs.sub(cs.mul(r_sig, r_sig), cs.add(square, e_sig)), f"{label} square root")
    cs.range(f"{label}.root.range", [(1, r_sig, None)], 0, VALUE_BITS)
    cs.range(f"{label}.err.lo", [(1, e_sig, None)], 0, SQRT_ERR_BITS)
    cs.range(f"{label}.err.hi", [(2, r_sig, None), (-1, e_sig, None)], one - 1, SQRT_ERR_BITS)
    return r_sig


def _dnn_circuit(cs, dims, delta, spread, layers_q, params: Params, relu: bool, spectral_args):
    """Validates every layer, proves each spectral norm, then the bound recursion."""
    qd = params.q_d
    one = 1 << qd
    shift = qd if relu else qd + 2
    validated, norms = [], []
    for k, (rows, cols) in enumerate(_layer_shapes(dims)):
        r, c = next_pow2(rows), next_pow2(cols)
        flat = None if layers_q is None else [int(x) for x in pad_matrix(layers_q[k]).reshape(-1)]
        validated.append(quantize_validate(cs, f"W{k}", flat, r * c, params.q_i + qd))
        shape = SpectralShape(rows, cols, qd, params.q_err)
        norms.append(spectral_args(k, shape))
    spread_vec = cs.public("spread", spread)
    gap = ceil_sqrt(sum(d * d for d in delta))
    gap_sig = cs.const(gap)
    for k, (rows, cols) in enumerate(_layer_shapes(dims)):
        r, c = next_pow2(rows), next_pow2(cols)
        step = qd if k == 0 else shift
        spread_vec = truncate(cs, f"dz{k}", _matvec(cs, validated[k].magnitude, spread_vec, r, c), step, TRUNC_BITS)
        sq = cs.sum(cs.mul(spread_vec, spread_vec))
        if cs.prover:
            _guard(sq.values[0])
        spread_norm = _sqrt_gadget(cs, f"nz{k}", sq, one)
        s_pub = cs.public(f"s{k}", [norms[k]])
        acc = cs.add(cs.mul(s_pub, gap_sig), cs.scale(spread_norm, 2 * one))
        if cs.prover:
            _guard(acc.values[0])
        gap_sig = truncate(cs, f"gap{k}", acc, shift, TRUNC_BITS)
    return gap_sig


def prove_dnn_fairness(
    model: Model,
    stats: AggregatedStats,
    params: Params = Params(),
    allow_invalid: bool = False,
    witnesses=None,
) -> tuple[list[PolyCommitment], FairnessProof]:
    """Commit an MLP's layers and prove its fairness bound.

    ``witnesses`` substitutes spectral witnesses per layer (for soundness tests).
    """
    if model.kind != "mlp":
        raise ValueError("expected an MLP")
    f0 = model.input_dim
    if f0 != stats.num_features:
        raise DimensionMismatch(f"dimension mismatch: model has {f0} features, stats have {stats.num_features}")
    dims = (f0,) + tuple(w.shape[0] for w in model.layers)
    layers_q = [np.array([params.quantize(row) for row in w], dtype=np.int64) for w in model.layers]
    delta, spread = _public_stats(stats, params, next_pow2(f0))
    header = Header(Protocol.DNN, params, dims, _flags(model.activation))
    sess = ProverSession(_transcript(header, [delta, spread]))
    cs = ConstraintSystem(sess)

    def spectral(k, shape):
        wit = None if witnesses is None else witnesses[k]
        if wit is None:
            wit = build_witness(layers_q[k], q_d=params.q_d, q_err=params.q_err, quantized=True)
        return prove_spectral_in(sess, f"W{k}", shape, wit, label=f"spectral{k}")

    out = _dnn_circuit(cs, dims, delta, spread, layers_q, params, model.activation == "relu", spectral)
    claim = int(out.values[0])
    sess.send_base([claim], b"claim")
    cs.output(out, [claim])
    data = header.to_bytes() + _finish(cs, sess, allow_invalid)
    coms = [sess.coms[f"W{k}"] for k in range(len(model.layers))]
    return coms, FairnessProof(header, claim, data)


def prove_fairness(model: Model, stats: AggregatedStats, params: Params = Params(), **kw):
    if model.kind == "lr":
        return prove_lr_fairness(model.weights, stats, model.activation, params, **kw)
    return prove_dnn_fairness(model, stats, params, **kw)


def _commit_vector(values) -> PolyCommitment:
    return pcs_commit(MultilinearPoly(encode(values)))


def commit_model(model: Model, params: Params = Params()) -> list[PolyCommitment]:
    """Commitments to the weights exactly as the fairness proof commits them."""
    if model.kind == "lr":
        return [_commit_vector(_pad(params.quantize(model.weights), next_pow2(len(model.weights))))]
    mats = [pad_matrix(np.array([params.quantize(r) for r in w], dtype=np.int64)) for w in model.layers]
    return [_commit_vector(m.reshape(-1)) for m in mats]


def verify_fairness(
    coms: list[PolyCommitment],
    stats: AggregatedStats,
    proof: FairnessProof | bytes,
    params: Params | None = None,
    claimed: float | None = None,
) -> Verdict:
    """Check a fairness proof against committed weights and public stats.

    With ``claimed`` the proven bound must also equal it after quantization
    at the proof's output scale. On success the verdict's value is the
    certified bound.
    """
    data = proof.to_bytes() if isinstance(proof, FairnessProof) else bytes(proof)

    def body():
        header, off = Header.parse(data)
        _check_params(header, params)
        hp = header.params
        dims = header.dims
        if dims[0] != stats.num_features:
            raise DimensionMismatch(f"dimension mismatch: proof has {dims[0]} features, stats have {stats.num_features}")
        width = next_pow2(dims[0])
        delta, spread = _public_stats(stats, hp, width)
        sess_expected = {}
        if header.protocol == Protocol.LR:
            if len(dims) != 1 or len(coms) != 1:
                raise ProofRejected("commitment count does not match the model")
            sess_expected["w"] = coms[0]
        elif header.protocol == Protocol.DNN:
            if len(dims) < 2 or dims[-1] != 1 or len(coms) != len(dims) - 1:
                raise ProofRejected("commitment count does not match the model")
            total = sum(next_pow2(a) * next_pow2(b) for a, b in _layer_shapes(dims))
            if total > MAX_ENTRIES:
                raise ProofFormatError("model too large")
            sess_expected.update({f"W{k}": c for k, c in enumerate(coms)})
        else:
            raise ProofRejected("not a fairness proof")
        for name, com in sess_expected.items():
            if not isinstance(com, PolyCommitment):
                raise ProofRejected(f"bad commitment for {name}")
        sess = VerifierSession(_transcript(header, [delta, spread]), Reader(data, off), sess_expected)
        cs = ConstraintSystem(sess)
        relu = header.activation == "relu"
        if header.protocol == Protocol.LR:
            out = _lr_circuit(cs, width, delta, spread, None, hp)
        else:
            out = _dnn_circuit(
                cs, dims, delta, spread, None, hp, relu,
                lambda k, shape: verify_spectral_in(sess, f"W{k}", shape, label=f"spectral{k}"),
            )
        claim = int(sess.recv_base(1, b"claim")[0])
        if claimed is not None and round(claimed * 2 ** _out_qd(header)) != claim:
            raise ProofRejected("proven bound differs from the claimed one")
        cs.output(out, [claim])
        cs.run()
        sess.finalize()
        return Verdict(True, claim / 2.0 ** _out_qd(header))

    return _reject(body)


# -- aggregated statistics ----------------------------------------------------------


def _stats_circuit(cs: ConstraintSystem, n: int, f: int, xq, sq, params: Params):
    """Returns (mean difference, largest deviation) wires, both length f padded."""
    rows, width = next_pow2(n), next_pow2(f)
    size = rows * width
    prover = cs.prover
    x = cs.witness("X", None if xq is None else [int(v) for v in xq.reshape(-1)], size)
    s = cs.witness("s", None if sq is None else [int(v) for v in sq], rows)
    mask = cs.public("mask", [1] * n + [0] * (rows - n))
    one = cs.const(1)
    cs.assert_zero(cs.sub(cs.mul(s, s), s), "s binary")
    cs.assert_zero(cs.sub(s, cs.mul(s, mask)), "s padding")
    cs.range("X.range", [(1, x, None)], 1 << (VALUE_BITS - 1), VALUE_BITS)

    member = [cs.sub(mask, s), s]  # group 0, group 1
    by_row = np.repeat(np.arange(rows), width)
    by_col = np.tile(np.arange(width), rows)
    transpose = np.arange(size).reshape(rows, width).T.reshape(-1)

    means = []
    for g in (0, 1):
        count = cs.sum(member[g])
        sums = cs.sum_groups(cs.mul(x, member[g][by_row])[transpose], rows)
        cnt = mu = rem = None
        if prover:
            c = int(count.values[0])
            if c < 1:
                raise EmptyGroupError("both sensitive groups must be nonempty")
            pairs = [divmod(int(v), c) for v in sums.values]
            cnt, mu, rem = [c], [a for a, _ in pairs], [b for _, b in pairs]
        n_sig = cs.witness(f"n{g}", cnt, 1)
        mu_sig = cs.witness(f"mu{g}", mu, width)
        rem_sig = cs.witness(f"mu{g}.rem", rem, width)
        cs.assert_zero(cs.sub(count, n_sig), f"group {g} count")
        cs.assert_zero(cs.sub(sums, cs.add(cs.mul(mu_sig, n_sig), rem_sig)), f"group {g} mean")
        cs.range(f"n{g}.range", [(1, n_sig, None)], -1, COUNT_BITS)
        cs.range(f"mu{g}.rem.lo", [(1, rem_sig, None)], 0, COUNT_BITS)
        cs.range(f"mu{g}.rem.hi", [(1, n_sig, ("low", 0)), (-1, rem_sig, None)], -1, COUNT_BITS)
        cs.range(f"mu{g}.range", [(1, mu_sig, None)], 1 << (VALUE_BITS - 1), VALUE_BITS)
        means.append(mu_sig)

    # deviation of each real entry from its own group's mean
    own_mean = cs.add(means[0][by_col], cs.mul(s[by_row], cs.sub(means[1], means[0])[by_col]))
    dev = cs.mul(mask[by_row], cs.sub(x, own_mean))
    sgn = mag = None
    if prover:
        sgn = [-1 if int(v) < 0 else 1 for v in dev.values]
        mag = [abs(int(v)) for v in dev.values]
    dev_sign = cs.witness("dev.sign", sgn, size)
    dev_abs = cs.witness("dev.abs", mag, size)
    cs.assert_zero(cs.sub(cs.mul(dev_sign, dev_sign), one), "deviation sign")
    cs.assert_zero(cs.sub(dev_abs, cs.mul(dev_sign, dev)), "deviation magnitude")
    cs.range("dev.abs.range", [(1, dev_abs, None)], 0, VALUE_BITS)
    return cs.sub(means[0], means[1]), dev_abs


def _check_spread(cs: ConstraintSystem, dev_abs: Sig, spread: list[int], rows: int, width: int) -> None:
    """Every deviation is at most the public spread, and each spread is attained."""
    spub = cs.public("spread", spread)
    cs.range("spread.gap", [(1, spub, ("low", width.bit_length() - 1)), (-1, dev_abs, None)], 0, VALUE_BITS)
    transpose = np.arange(rows * width).reshape(rows, width).T.reshape(-1)
    gaps = cs.sub(spub[np.tile(np.arange(width), rows)], dev_abs)[transpose]
    cs.assert_zero(cs.product_groups(gaps, rows), "spread attained")


def quantize_dataset(data: Dataset, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Padded integer matrix (rows x width) and padded sensitive attributes."""
    n, f = data.x.shape
    xq = np.zeros((next_pow2(n), next_pow2(f)), dtype=np.int64)
    for j in range(n):
        xq[j, :f] = params.quantize(data.x[j])
    sq = np.zeros(next_pow2(n), dtype=np.int64)
    sq[:n] = data.s
    return xq, sq


def _stats_rows(data: Dataset, mode: str) -> Dataset:
    return data.positives() if mode == "eo" else data


def commit_dataset(data: Dataset, mode: str = "sp", params: Params = Params()) -> list[PolyCommitment]:
    """Commitments to (X, s) exactly as the stats proof commits them."""
    xq, sq = quantize_dataset(_stats_rows(data, mode), params)
    return [_commit_vector(xq.reshape(-1)), _commit_vector(sq)]


def prove_aggregate_stats(
    data: Dataset,
    mode: str = "sp",
    params: Params = Params(),
    claims: AggregatedStats | None = None,
    allow_invalid: bool = False,
) -> tuple[list[PolyCommitment], StatsProof]:
    """Commit a dataset and prove its aggregated statistics.

    ``claims`` forces the published statistics (for soundness tests); by
    default they are computed from the quantized data.
    """
    rows_data = _stats_rows(data, mode)
    n, f = rows_data.x.shape
    if n * next_pow2(f) > MAX_ENTRIES:
        raise ValueError("dataset too large")
    if not (rows_data.s == 0).any() or not (rows_data.s == 1).any():
        raise EmptyGroupError("both sensitive groups must be nonempty")
    xq, sq = quantize_dataset(rows_data, params)
    rows, width = xq.shape
    delta, spread = _quantized_stats(xq[:n, :f], sq[:n])
    if claims is not None:
        delta, spread = params.quantize(claims.delta_x), params.quantize(claims.Delta_x)
        if len(delta) != f:
            raise DimensionMismatch("dimension mismatch: claims and dataset differ in features")
    header = Header(Protocol.STATS, params, (n, f), _flags(mode=mode))
    sess = ProverSession(_transcript(header, []))
    sess.send_base(encode(delta + spread), b"claims")
    cs = ConstraintSystem(sess)
    diff, dev_abs = _stats_circuit(cs, n, f, xq, sq, params)
    cs.output(diff, _pad(delta, width))
    _check_spread(cs, dev_abs, _pad(spread, width), rows, width)
    data_bytes = header.to_bytes() + _finish(cs, sess, allow_invalid)
    return [sess.coms["X"], sess.coms["s"]], StatsProof(header, delta, spread, data_bytes)


def _quantized_stats(xq: np.ndarray, sq: np.ndarray) -> tuple[list[int], list[int]]:
    """Floor means and largest deviations on the integer grid."""
    xo = xq.astype(object)
    means = []
    for g in (0, 1):
        sel = xo[sq == g]
        means.append([int(v) // len(sel) for v in sel.sum(axis=0)])
    delta = [a - b for a, b in zip(*means)]
    spread = []
    for i in range(xq.shape[1]):
        spread.append(max(abs(int(xo[j, i]) - means[int(sq[j])][i]) for j in range(len(sq))))
    return delta, spread


def verify_stats(
    coms: list[PolyCommitment],
    proof: StatsProof | bytes,
    claims: AggregatedStats | None = None,
    params: Params | None = None,
) -> Verdict:
    """Check a stats proof against dataset commitments.

    With ``claims`` the proven statistics must also equal the given ones
    after quantization. On success the verdict's value is the proven
    :class:`AggregatedStats`.
    """
    data = proof.to_bytes() if isinstance(proof, StatsProof) else bytes(proof)

    def body():
        header, off = Header.parse(data)
        _check_params(header, params)
        if header.protocol != Protocol.STATS or len(header.dims) != 2:
            raise ProofRejected("not a stats proof")
        if len(coms) != 2:
            raise ProofRejected("expected commitments to X and s")
        n, f = header.dims
        rows, width = next_pow2(n), next_pow2(f)
        if rows * width > 2 * MAX_ENTRIES:
            raise ProofFormatError("dataset too large")
        if coms[0].num_vars != (rows * width).bit_length() - 1 or coms[1].num_vars != rows.bit_length() - 1:
            raise ProofRejected("commitment does not match the dataset shape")
        hp = header.params
        sess = VerifierSession(_transcript(header, []), Reader(data, off), {"X": coms[0], "s": coms[1]})
        raw = [to_signed(int(v)) for v in sess.recv_base(2 * f, b"claims")]
        delta, spread = raw[:f], raw[f:]
        if claims is not None:
            if claims.num_features != f:
                raise DimensionMismatch(f"dimension mismatch: proof has {f} features, claims have {claims.num_features}")
            if (hp.quantize(claims.delta_x), hp.quantize(claims.Delta_x)) != (delta, spread):
                raise ProofRejected("proven statistics differ from the claimed ones")
            if claims.mode != header.mode:
                raise ProofRejected("fairness mode differs from the claim")
        if any(v < 0 for v in spread):
            raise ProofRejected("negative spread")
        cs = ConstraintSystem(sess)
        diff, dev_abs = _stats_circuit(cs, n, f, None, None, hp)
        cs.output(diff, _pad(delta, width))
        _check_spread(cs, dev_abs, _pad(spread, width), rows, width)
        cs.run()
        sess.finalize()
        proven = StatsProof(header, delta, spread, data).stats()
        return Verdict(True, proven)

    return _reject(body)
