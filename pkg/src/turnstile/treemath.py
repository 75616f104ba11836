"""Integer scheduling for the iterative tree builder.

Leaves of a depth-d doubling are numbered 0 .. 2**d - 1.  The bit pattern of
a leaf index encodes its position in the implicit balanced binary tree, which
is what lets the builder decide, from the index alone, where a freshly
generated leaf must be stored and which stored leaves it must be compared
against for the U-turn test.  Everything here is pure unsigned-integer
arithmetic; no tree is ever materialized.
"""

from __future__ import annotations

MAX_TREE_DEPTH_LIMIT = 30  # keeps every index comfortably inside 64 bits


def bit_count(n: int) -> int:
    """Number of 1-bits in the binary representation of ``n``."""
    if n < 0:
        raise ValueError("leaf index must be non-negative")
    return n.bit_count()


def trailing_ones(n: int) -> int:
    """Number of contiguous 1-bits at the least-significant end of ``n``.

    Computed as ``bit_count(((n + 1) & ~n) - 1)``: ``(n + 1) & ~n`` isolates
    the lowest 0-bit of ``n``, and subtracting one turns it into a mask of
    the trailing ones below it.
    """
    if n < 0:
        raise ValueError("leaf index must be non-negative")
    return (((n + 1) & ~n) - 1).bit_count()


def subtree_leftmost(n: int, k: int) -> int:
    """Leftmost leaf of the depth-``k`` subtree whose rightmost leaf is ``n``.

    Equivalently: ``n`` with its ``k`` low bits cleared.
    """
    if n < 0 or k < 0:
        raise ValueError("arguments must be non-negative")
    return n & ~((1 << k) - 1)


def candidate_set(n: int) -> list[tuple[int, int]]:
    """Stored leaves that leaf ``n`` must be U-turn-checked against.

    Returns ``(leaf_index, storage_slot)`` pairs in decreasing leaf order,
    i.e. smallest enclosing subtree first.  The k-th entry is ``n`` with its
    ``k`` trailing 1-bits cleared -- the leftmost leaf of the depth-``k``
    subtree that has ``n`` as its rightmost leaf -- and its slot is the
    leaf's bit count.  Even ``n`` closes no subtree, so the list is empty.
    """
    out = []
    for k in range(1, trailing_ones(n) + 1):
        m = n & ~((1 << k) - 1)
        out.append((m, m.bit_count()))
    return out
