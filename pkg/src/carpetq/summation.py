"""Compensated accumulation for long streams of small float terms."""

from __future__ import annotations

__all__ = ["KahanSum"]


class KahanSum:
    """Neumaier-variant compensated sum.

    Streaming counterpart of math.fsum for places where terms arrive
    one at a time and holding them all would defeat the point.
    """

    __slots__ = ("_sum", "_comp")

    def __init__(self, value: float = 0.0):
        self._sum = float(value)
        self._comp = 0.0

    def add(self, value: float) -> None:
        t = self._sum + value
        if abs(self._sum) >= abs(value):
            self._comp += (self._sum - t) + value
        else:
            self._comp += (value - t) + self._sum
        self._sum = t

    def merge(self, other: "KahanSum") -> None:
        self.add(other._sum)
        self.add(other._comp)

    @property
    def total(self) -> float:
        return self._sum + self._comp
