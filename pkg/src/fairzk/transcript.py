"""Fiat-Shamir transcript: a SHA-256 hash chain with labelled absorbs."""

from __future__ import annotations

import hashlib

from .field import ExtElement, P

HASH_ID = 1  # SHA-256


class Transcript:
    def __init__(self, label: bytes = b"fairzk"):
        self._state = hashlib.sha256(b"fairzk-transcript-v1" + _frame(label)).digest()
        self._counter = 0

    def absorb(self, label: bytes, data: bytes) -> None:
        self._state = hashlib.sha256(self._state + _frame(label) + _frame(data)).digest()

    def absorb_ext(self, label: bytes, elems) -> None:
        self.absorb(label, b"".join(ExtElement.lift(e).to_bytes() for e in elems))

    def challenge_ext(self, label: bytes = b"challenge") -> ExtElement:
        coords = []
        while len(coords) < 2:
            self._counter += 1
            block = hashlib.sha256(
                self._state + _frame(label) + self._counter.to_bytes(8, "little")
            ).digest()
            for off in (0, 8, 16, 24):
                v = int.from_bytes(block[off : off + 8], "little")
                if v < P and len(coords) < 2:
                    coords.append(v)
        out = ExtElement(coords[0], coords[1])
        self.absorb(b"squeezed", out.to_bytes())
        return out

    def challenge_vec(self, n: int, label: bytes = b"challenge") -> list[ExtElement]:
        return [self.challenge_ext(label) for _ in range(n)]

    def fork_state(self) -> bytes:
        """Current chaining value; two transcripts agree iff their histories do."""
        return self._state


def _frame(data: bytes) -> bytes:
    return len(data).to_bytes(8, "little") + data
