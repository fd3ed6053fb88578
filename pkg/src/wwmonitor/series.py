"""Regularly spaced daily time series with an explicit start date.

NaN marks missing days (e.g. days outside a plant's own sampling span
after panel alignment). Values are frozen after construction so series
can be shared across threads.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

ONE_DAY = dt.timedelta(days=1)


@dataclass(frozen=True, eq=False)
class DailySeries:
    """One value per consecutive calendar day, starting at ``start_date``."""

    start_date: dt.date
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("DailySeries requires a non-empty 1-d value array")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=self.values.size - 1)

    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(self.values.size)]

    def index_of(self, day: dt.date) -> int:
        """Index of a calendar day; raises if outside the series span."""
        i = (day - self.start_date).days
        if not 0 <= i < self.values.size:
            raise ValueError(f"{day} outside series span {self.start_date}..{self.end_date}")
        return i

    def value_on(self, day: dt.date) -> float:
        return float(self.values[self.index_of(day)])

    def window(self, start: dt.date, end: dt.date) -> "DailySeries":
        """Sub-series covering [start, end], both inclusive."""
        i, j = self.index_of(start), self.index_of(end)
        if j < i:
            raise ValueError("window end precedes start")
        return DailySeries(start, self.values[i : j + 1], self.label)

    def approx_equal(self, other: "DailySeries", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        return (
            self.start_date == other.start_date
            and self.values.size == other.values.size
            and bool(np.allclose(self.values, other.values, rtol=rtol, atol=atol, equal_nan=True))
        )


def common_span(a: DailySeries, b: DailySeries) -> tuple[dt.date, dt.date]:
    """Intersection of two series' date spans; raises when disjoint."""
    start = max(a.start_date, b.start_date)
    end = min(a.end_date, b.end_date)
    if end < start:
        raise ValueError("series spans do not overlap")
    return start, end


def date_range(start: dt.date, end: dt.date) -> list[dt.date]:
    """All calendar days from start to end, inclusive."""
    if end < start:
        raise ValueError("end precedes start")
    return [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]
