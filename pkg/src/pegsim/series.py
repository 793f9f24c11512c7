"""Day-indexed value series loaded from `day,value` CSV files.

CPI and portfolio-index series are step-hold: between provided rows the
last value applies. Opportunity-capacity series are sparse: a day with no
row has capacity zero.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .errors import NonAscendingDays, ParseError, SeriesUndefined
from .fixedpoint import parse_scaled

SERIES_SCALE = 10**8


@dataclass(frozen=True)
class Series:
    days: tuple[int, ...]
    values: tuple[int, ...]  # 8-decimal fixed point

    def value_at(self, day: int) -> int:
        """Step-hold lookup: the last provided value at or before `day`."""
        idx = bisect_right(self.days, day) - 1
        if idx < 0:
            raise SeriesUndefined(f"series has no value at or before day {day}")
        return self.values[idx]

    def capacity_at(self, day: int) -> int:
        """Sparse lookup: the value on exactly `day`, else 0."""
        idx = bisect_right(self.days, day) - 1
        if idx >= 0 and self.days[idx] == day:
            return self.values[idx]
        return 0

    @property
    def first_day(self) -> int:
        return self.days[0]


def from_pairs(pairs) -> Series:
    days: list[int] = []
    values: list[int] = []
    for day, value in pairs:
        if days and day <= days[-1]:
            raise NonAscendingDays(f"day {day} not strictly ascending")
        days.append(int(day))
        values.append(int(value))
    return Series(tuple(days), tuple(values))


def load_series(path, min_value: int = 0) -> Series:
    """Parse a `day,value` CSV with strictly ascending integer days.

    Values are fixed-point with up to 8 decimals; anything finer (or any
    malformed row) is a ParseError carrying the offending line number.
    """
    days: list[int] = []
    values: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip().lower() != "day,value":
        raise ParseError(1, "expected header 'day,value'")
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(line_no, f"expected 2 fields, got {len(parts)}")
        try:
            day = int(parts[0])
            value = parse_scaled(parts[1], SERIES_SCALE)
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from exc
        if day < 0:
            raise ParseError(line_no, "day must be >= 0")
        if value < min_value:
            raise ParseError(line_no, f"value below minimum {min_value}")
        if days and day <= days[-1]:
            raise NonAscendingDays(f"line {line_no}: day {day} repeats or decreases")
        days.append(day)
        values.append(value)
    if not days:
        raise ParseError(len(lines), "series has no rows")
    return Series(tuple(days), tuple(values))
