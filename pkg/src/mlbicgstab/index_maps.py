"""Cycle bookkeeping: which cycle an iteration belongs to, and where in it.

For a shadow count ``n`` every integer ``k`` is written uniquely as
``k = j*n + i`` with ``1 <= i <= n``; ``g_index`` returns ``j`` and
``r_index`` returns ``i``.
"""

from .errors import InvalidArgumentError

__all__ = ["g_index", "r_index", "split_index"]


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"shadow count n must be a positive integer, got {n!r}")


def g_index(n: int, k: int) -> int:
    """Cycle number ``floor((k - 1) / n)``, rounded toward minus infinity."""
    _check_n(n)
    # Python's // already floors toward -inf; keep it that way for k <= 0.
    return (k - 1) // n


def r_index(n: int, k: int) -> int:
    """Position of ``k`` inside its cycle, always in ``[1, n]``."""
    return k - n * g_index(n, k)


def split_index(n: int, k: int) -> tuple[int, int]:
    """Return ``(g_index(n, k), r_index(n, k))``."""
    j = g_index(n, k)
    return j, k - n * j
