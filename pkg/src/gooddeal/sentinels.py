"""Tagged infinity sentinels.

Superhedging costs and conjugate penalties can be infinite.  Using float
infinities invites silent arithmetic bugs (``inf - inf``), so infinite results
are reported as dedicated singletons: any arithmetic on them raises TypeError,
and callers test identity with ``is MINUS_INF`` / ``is PLUS_INF``.
"""

from __future__ import annotations


class _TaggedInfinity:
    __slots__ = ("_label",)

    def __init__(self, label: str):
        self._label = label

    def __repr__(self) -> str:
        return self._label

    def __bool__(self) -> bool:
        raise TypeError(f"{self._label} sentinel has no truth value")

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


MINUS_INF = _TaggedInfinity("MINUS_INF")
PLUS_INF = _TaggedInfinity("PLUS_INF")


def is_finite(value) -> bool:
    """True when ``value`` is an ordinary (non-sentinel) number."""
    return value is not MINUS_INF and value is not PLUS_INF
