"""Label transformation and its separation property.

Bits of a transformed label are addressed 1-based throughout the package.
"""

from __future__ import annotations

from .errors import InvalidParameter


def transform(label: int) -> str:
    """Return ``10 dup(b) 01 10 dup(b) 01`` where dup doubles every bit of ``label``."""
    if label < 1:
        raise InvalidParameter("labels are positive integers")
    doubled = "".join(bit * 2 for bit in format(label, "b"))
    half = "10" + doubled + "01"
    return half + half


def bit(transformed: str, i: int) -> int:
    """1-based bit access."""
    if not 1 <= i <= len(transformed):
        raise IndexError(i)
    return int(transformed[i - 1])


def check_separation(a: int, b: int) -> tuple[int, int]:
    """Witness (i, j) with i <= 2c+4 < j <= 4c+8 where the transforms of a < b differ.

    c is the bit length of ``a``. Raises ``LookupError`` if no witness exists,
    which would falsify the separation property.
    """
    if a < 1 or b < 1 or a >= b:
        raise InvalidParameter("check_separation needs 1 <= a < b")
    ta, tb = transform(a), transform(b)
    c = a.bit_length()
    half = 2 * c + 4

    def first_diff(lo: int, hi: int) -> int | None:
        for k in range(lo, hi + 1):
            if ta[k - 1] != tb[k - 1]:
                return k
        return None

    i = first_diff(1, half)
    j = first_diff(half + 1, 4 * c + 8)
    if i is None or j is None:
        raise LookupError(f"no separating witness for {a} < {b}")
    return i, j
