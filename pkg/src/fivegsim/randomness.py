"""Deterministic randomness for the simulator.

Every source of randomness in a run is a RandomStream derived from the
64-bit world seed plus a purpose label.  Streams are independent of each
other and of event interleaving, so a run is reproducible byte for byte
from (seed, label) alone.
"""

from __future__ import annotations

import hashlib


class RandomStream:
    """Counter-mode SHA-256 byte stream, seeded by (seed, label)."""

    def __init__(self, seed: int, label: str = ""):
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._prefix = seed.to_bytes(8, "big") + label.encode("utf-8")
        self._counter = 0
        self._buffer = b""

    def take(self, n: int) -> bytes:
        """Return the next n bytes of the stream."""
        while len(self._buffer) < n:
            block = hashlib.sha256(
                self._prefix + b"|" + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        nbytes = (bound.bit_length() + 7) // 8
        limit = (256**nbytes // bound) * bound
        while True:
            v = int.from_bytes(self.take(nbytes), "big")
            if v < limit:
                return v % bound

    def digits(self, n: int) -> str:
        return "".join(str(self.below(10)) for _ in range(n))


class StreamFactory:
    """Hands out labeled RandomStreams for one world seed.

    Repeated requests for the same label continue the same stream.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, RandomStream] = {}

    def stream(self, label: str) -> RandomStream:
        if label not in self._streams:
            self._streams[label] = RandomStream(self.seed, label)
        return self._streams[label]
