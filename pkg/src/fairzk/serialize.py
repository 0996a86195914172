"""Section framing shared by proof files.

Each message is a section: u8 kind, u32 byte length, payload. Field elements
are 8-byte little-endian words; extension elements are c0 then c1.
"""

from __future__ import annotations

import struct

import numpy as np

from .field import ExtElement
from .fvec import EVec, base_from_bytes, base_to_bytes, ext_from_bytes

EXT, BASE, RAW = 1, 2, 3


class ProofFormatError(ValueError):
    pass


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def _section(self, kind: int, payload: bytes) -> None:
        self._parts.append(struct.pack("<BI", kind, len(payload)))
        self._parts.append(payload)

    def ext(self, elems) -> None:
        if isinstance(elems, EVec):
            self._section(EXT, elems.to_bytes())
        else:
            self._section(EXT, b"".join(ExtElement.lift(e).to_bytes() for e in elems))

    def base(self, values: np.ndarray) -> None:
        self._section(BASE, base_to_bytes(values))

    def raw(self, data: bytes) -> None:
        self._section(RAW, data)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self._data = memoryview(data)
        self._pos = offset

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ProofFormatError("unexpected end of proof")
        out = bytes(self._data[self._pos : self._pos + n])
        self._pos += n
        return out

    def _section(self, kind: int, length: int | None) -> bytes:
        k, n = struct.unpack("<BI", self._take(5))
        if k != kind:
            raise ProofFormatError(f"expected section kind {kind}, found {k}")
        if length is not None and n != length:
            raise ProofFormatError(f"section length {n}, expected {length}")
        return self._take(n)

    def ext(self, count: int) -> list[ExtElement]:
        return self.ext_vec(count).to_list()

    def ext_vec(self, count: int) -> EVec:
        try:
            return ext_from_bytes(self._section(EXT, 16 * count))
        except ValueError as e:
            if isinstance(e, ProofFormatError):
                raise
            raise ProofFormatError(str(e)) from None

    def base(self, count: int) -> np.ndarray:
        try:
            return base_from_bytes(self._section(BASE, 8 * count))
        except ValueError as e:
            if isinstance(e, ProofFormatError):
                raise
            raise ProofFormatError(str(e)) from None

    def raw(self, length: int | None = None) -> bytes:
        return self._section(RAW, length)

    def at_end(self) -> bool:
        return self._pos == len(self._data)

    def finish(self) -> None:
        if not self.at_end():
            raise ProofFormatError("trailing bytes after proof")
