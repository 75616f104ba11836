"""Splittable, counter-based randomness.

An :class:`RngKey` is a 128-bit value used as the key of the Philox
counter-based generator.  Child keys are derived by running Philox as a pure
function of ``(key, counter)`` with reserved counter tags, so derivation is
O(1), deterministic, and independent of draw order or thread scheduling.
A key is used either to derive children (:meth:`split`, :meth:`fold`) or to
produce a draw stream (:meth:`generator`); the reserved tags keep the two
uses from ever touching the same counter block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

_MASK64 = (1 << 64) - 1

# Counter tags (highest counter word). Each tag owns a disjoint 2**192 block.
_TAG_DRAW = 1
_TAG_SPLIT = 2
_TAG_FOLD = 3
_SEED_CONST = 0x9E3779B97F4A7C15  # 64-bit golden ratio, seeds the root key


def _raw(key_hi: int, key_lo: int, counter: tuple[int, int, int, int]) -> np.ndarray:
    bg = Philox(
        counter=np.array(counter, dtype=np.uint64),
        key=np.array([key_hi, key_lo], dtype=np.uint64),
    )
    return bg.random_raw(4)


@dataclass(frozen=True)
class RngKey:
    """Immutable 128-bit key; equal keys yield equal streams and children."""

    hi: int
    lo: int

    @staticmethod
    def from_seed(seed: int) -> "RngKey":
        words = _raw(_SEED_CONST, seed & _MASK64, (seed >> 64 & _MASK64, 0, 0, 0))
        return RngKey(int(words[0]), int(words[1]))

    def split(self) -> tuple["RngKey", "RngKey"]:
        """Derive two fresh keys; both differ from ``self`` and each other."""
        words = _raw(self.hi, self.lo, (0, 0, 0, _TAG_SPLIT))
        return (
            RngKey(int(words[0]), int(words[1])),
            RngKey(int(words[2]), int(words[3])),
        )

    def fold(self, index: int) -> "RngKey":
        """Derive the ``index``-th child key (index >= 0)."""
        if index < 0:
            raise ValueError("fold index must be non-negative")
        words = _raw(self.hi, self.lo, (index & _MASK64, index >> 64 & _MASK64, 0, _TAG_FOLD))
        return RngKey(int(words[0]), int(words[1]))

    def generator(self) -> Generator:
        """The draw stream of this key.

        Pure: every call returns a generator positioned at the start of the
        same stream, so request it once and draw sequentially.
        """
        bg = Philox(
            counter=np.array([0, 0, 0, _TAG_DRAW], dtype=np.uint64),
            key=np.array([self.hi, self.lo], dtype=np.uint64),
        )
        return Generator(bg)
