"""Transparent Merkle commitment to multilinear evaluation vectors.

Leaves are salted hashes of fixed-size chunks of the evaluation vector. An
opening reveals every chunk plus the salt; the verifier rebuilds the root and
recomputes f(u) as <evals, eq(u, .)>. Openings are linear in size, which keeps
the backend simple and obviously binding; a succinct scheme can replace this
module without touching the protocols.
"""

from __future__ import annotations

import hashlib
import os
import struct
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .field import ExtElement, Scalar
from .fvec import EVec
from .multilinear import DimensionError, MultilinearPoly, mle_evaluate
from .serialize import ProofFormatError, Reader, Writer

BACKEND_ID = 1
CHUNK = 256  # field elements per Merkle leaf
SALT_BYTES = 16
COMMIT_MAGIC = b"FZKC"
COMMIT_VERSION = 1


def worker_count() -> int:
    env = os.environ.get("FAIRZK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


@dataclass
class PolyCommitment:
    root: bytes
    num_vars: int
    # prover-side only; never serialized with the commitment
    salt: bytes | None = None

    def __eq__(self, other):
        return (
            isinstance(other, PolyCommitment)
            and self.root == other.root
            and self.num_vars == other.num_vars
        )


@dataclass
class OpeningProof:
    value: ExtElement
    salt: bytes
    evals: EVec


def derive_salt(data: bytes, seed: bytes = b"") -> bytes:
    """Deterministic salt; pass a secret seed for hiding commitments."""
    return hashlib.sha256(b"fairzk-salt" + seed + data).digest()[:SALT_BYTES]


def _payload(evals: EVec) -> tuple[int, bytes, int]:
    if evals.is_base:
        return 0, evals.c0.astype("<u8").tobytes(), 8
    return 1, evals.to_bytes(), 16


def merkle_root(evals: EVec, salt: bytes) -> bytes:
    kind, data, width = _payload(evals)
    step = CHUNK * width
    chunks = [data[i : i + step] for i in range(0, len(data), step)]
    prefix = b"leaf" + salt + bytes([kind])

    def leaf(i: int) -> bytes:
        return hashlib.sha256(prefix + struct.pack("<Q", i) + chunks[i]).digest()

    if len(chunks) > 64 and worker_count() > 1:
        with ThreadPoolExecutor(worker_count()) as pool:
            level = list(pool.map(leaf, range(len(chunks))))
    else:
        level = [leaf(i) for i in range(len(chunks))]
    while len(level) > 1:
        if len(level) % 2:
            level.append(b"\x00" * 32)
        level = [
            hashlib.sha256(b"node" + level[i] + level[i + 1]).digest()
            for i in range(0, len(level), 2)
        ]
    return level[0]


def pcs_commit(poly: MultilinearPoly, salt: bytes | None = None, seed: bytes = b"") -> PolyCommitment:
    if salt is None:
        salt = derive_salt(_payload(poly.evals)[1], seed)
    return PolyCommitment(merkle_root(poly.evals, salt), poly.num_vars, salt)


def pcs_open(
    poly: MultilinearPoly, point: Sequence[Scalar], com: PolyCommitment | None = None
) -> OpeningProof:
    if len(point) != poly.num_vars:
        raise DimensionError("opening point has the wrong dimension")
    salt = com.salt if com is not None and com.salt is not None else derive_salt(_payload(poly.evals)[1])
    return OpeningProof(mle_evaluate(poly, point), salt, poly.evals)


def pcs_verify(
    com: PolyCommitment, point: Sequence[Scalar], value: Scalar, proof: OpeningProof
) -> bool:
    return pcs_verify_many(com, [(point, value)], proof)


def pcs_verify_many(com: PolyCommitment, claims, proof: OpeningProof) -> bool:
    """Check several (point, value) claims against one revealed vector."""
    if len(proof.evals) != 1 << com.num_vars:
        return False
    if merkle_root(proof.evals, proof.salt) != com.root:
        return False
    poly = MultilinearPoly(proof.evals)
    for point, value in claims:
        if len(point) != com.num_vars:
            return False
        if mle_evaluate(poly, point) != ExtElement.lift(value):
            return False
    return True


def write_opening(w: Writer, proof: OpeningProof) -> None:
    w.raw(proof.salt + bytes([0 if proof.evals.is_base else 1]))
    if proof.evals.is_base:
        w.base(proof.evals.c0)
    else:
        w.ext(proof.evals)


def read_opening(r: Reader, num_vars: int) -> OpeningProof:
    head = r.raw(SALT_BYTES + 1)
    n = 1 << num_vars
    if head[-1] == 0:
        evals = EVec(r.base(n))
    elif head[-1] == 1:
        evals = r.ext_vec(n)
    else:
        raise ProofFormatError("unknown opening kind")
    return OpeningProof(ExtElement(0), head[:SALT_BYTES], evals)


def encode_commitments(coms: Sequence[PolyCommitment]) -> bytes:
    """Commitment file: magic, u16 version, u16 count, then (u8 k, root) entries."""
    out = [COMMIT_MAGIC, struct.pack("<HH", COMMIT_VERSION, len(coms))]
    for c in coms:
        out.append(struct.pack("<B", c.num_vars) + c.root)
    return b"".join(out)


def decode_commitments(data: bytes) -> list[PolyCommitment]:
    if len(data) < 8 or data[:4] != COMMIT_MAGIC:
        raise ProofFormatError("not a commitment file")
    version, count = struct.unpack("<HH", data[4:8])
    if version != COMMIT_VERSION:
        raise ProofFormatError(f"unsupported commitment version {version}")
    if len(data) != 8 + 33 * count:
        raise ProofFormatError("commitment file has the wrong length")
    coms = []
    for i in range(count):
        off = 8 + 33 * i
        coms.append(PolyCommitment(data[off + 1 : off + 33], data[off]))
    return coms
