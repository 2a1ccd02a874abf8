"""Loading, transforming and aligning raw series into a monthly panel.

Periods are stored as integer ordinals so that gap detection and span
intersection are plain integer arithmetic:

* a month ordinal is ``12 * year + (month - 1)``
* a quarter ordinal is ``4 * year + (quarter - 1)``

Quarterly observations align with the last month of their quarter.
"""

from __future__ import annotations

import csv
import datetime as dt
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DomainError,
    DuplicateError,
    FrequencyError,
    GapError,
    InsufficientDataError,
    OrderingError,
    SchemaError,
)

MONTHLY = "monthly"
QUARTERLY = "quarterly"
FREQUENCIES = (MONTHLY, QUARTERLY)
UNITS = ("percent", "percentage-points", "index-level", "rate")

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER_RE = re.compile(r"^(\d{4})-Q([1-4])$")

DEFAULT_SCHEMA = {"date": "date", "series_id": "series_id", "value": "value"}


def parse_period(text: str) -> tuple[str, int]:
    """Parse ``YYYY-MM`` or ``YYYY-Qn`` into ``(frequency, ordinal)``."""
    text = text.strip()
    m = _MONTH_RE.match(text)
    if m:
        month = int(m.group(2))
        if not 1 <= month <= 12:
            raise SchemaError(f"invalid month in date {text!r}")
        return MONTHLY, 12 * int(m.group(1)) + month - 1
    q = _QUARTER_RE.match(text)
    if q:
        return QUARTERLY, 4 * int(q.group(1)) + int(q.group(2)) - 1
    raise SchemaError(f"unparseable date {text!r}; expected YYYY-MM or YYYY-Qn")


def format_period(frequency: str, ordinal: int) -> str:
    if frequency == MONTHLY:
        return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"
    return f"{ordinal // 4:04d}-Q{ordinal % 4 + 1}"


def quarter_last_month(q_ordinal: int) -> int:
    return 3 * q_ordinal + 2


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A gap-free series of observations at a single frequency.

    ``start`` is the period ordinal of the first observation; the series
    covers ``start, start + 1, ..., start + len(values) - 1``.
    """

    id: str
    frequency: str
    start: int
    values: np.ndarray
    unit: str = "percent"

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise SchemaError(f"unknown frequency {self.frequency!r}")
        if self.unit not in UNITS:
            raise SchemaError(f"unknown unit {self.unit!r}")
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DomainError(f"series {self.id!r} contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def end(self) -> int:
        return self.start + len(self) - 1

    @property
    def ordinals(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self))

    @property
    def months(self) -> np.ndarray:
        """Month ordinal of each observation (quarter -> its last month)."""
        if self.frequency == MONTHLY:
            return self.ordinals
        return 3 * self.ordinals + 2

    @property
    def dates(self) -> list[str]:
        return [format_period(self.frequency, int(o)) for o in self.ordinals]

    def calendar_dates(self) -> list[dt.date]:
        """Observation dates canonicalized to the first day of the month."""
        return [dt.date(int(mo) // 12, int(mo) % 12 + 1, 1) for mo in self.months]

    def with_values(self, values, id: str | None = None, start: int | None = None) -> TimeSeries:
        return TimeSeries(
            id=self.id if id is None else id,
            frequency=self.frequency,
            start=self.start if start is None else start,
            values=values,
            unit=self.unit,
        )

    def window(self, first: int, last: int) -> TimeSeries:
        """Restrict to ordinals ``first..last`` (inclusive)."""
        if first < self.start or last > self.end or first > last:
            raise InsufficientDataError(
                f"series {self.id!r} does not cover {format_period(self.frequency, first)}"
                f"..{format_period(self.frequency, last)}"
            )
        lo = first - self.start
        return self.with_values(self.values[lo : lo + last - first + 1], start=first)

    def same_as(self, other: TimeSeries) -> bool:
        return (
            self.id == other.id
            and self.frequency == other.frequency
            and self.start == other.start
            and self.unit == other.unit
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class Panel:
    """Aligned monthly series in identification order."""

    series: tuple[TimeSeries, ...]
    span: tuple[int, int] = field(init=False)
    t: int = field(init=False)

    def __post_init__(self):
        series = tuple(self.series)
        if not series:
            raise InsufficientDataError("panel needs at least one series")
        first = series[0]
        for s in series:
            if s.frequency != MONTHLY:
                raise FrequencyError(f"panel member {s.id!r} is not monthly")
            if s.start != first.start or len(s) != len(first):
                raise OrderingError(f"panel member {s.id!r} does not share the panel span")
        ids = [s.id for s in series]
        if len(set(ids)) != len(ids):
            raise DuplicateError("panel contains duplicate series ids")
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "span", (first.start, first.end))
        object.__setattr__(self, "t", len(first))

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.series]

    @property
    def m(self) -> int:
        return len(self.series)

    @property
    def values(self) -> np.ndarray:
        """``t x m`` observation matrix."""
        return np.column_stack([s.values for s in self.series])

    @property
    def dates(self) -> list[str]:
        return self.series[0].dates

    def index(self, series_id: str) -> int:
        try:
            return self.ids.index(series_id)
        except ValueError:
            raise OrderingError(f"series {series_id!r} not in panel") from None

    def to_csv(self, path: str | Path) -> None:
        """Write in the long ``date,series_id,value`` ingest format."""
        write_long_csv(path, self.series)


def write_long_csv(path: str | Path, series: Iterable[TimeSeries]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "series_id", "value"])
        for s in series:
            for date, value in zip(s.dates, s.values):
                writer.writerow([date, s.id, repr(float(value))])


def load_csv(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    units: Mapping[str, str] | None = None,
) -> list[TimeSeries]:
    """Read a long-format CSV into one :class:`TimeSeries` per series id.

    ``schema`` maps the logical columns ``date``, ``series_id`` and
    ``value`` to header names in the file. Rows may appear in any order.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    units = units or {}
    rows: dict[str, dict[int, float]] = {}
    freqs: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in ("date", "series_id", "value"):
            if schema[key] not in header:
                raise SchemaError(f"column {schema[key]!r} (for {key}) missing from {path}")
        for lineno, row in enumerate(reader, start=2):
            sid = row[schema["series_id"]].strip()
            freq, ordinal = parse_period(row[schema["date"]])
            try:
                value = float(row[schema["value"]])
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: bad value {row[schema['value']]!r}") from None
            if not np.isfinite(value):
                raise DomainError(f"{path}:{lineno}: non-finite value for {sid!r}")
            if freqs.setdefault(sid, freq) != freq:
                raise FrequencyError(f"series {sid!r} mixes monthly and quarterly dates")
            obs = rows.setdefault(sid, {})
            if ordinal in obs:
                raise DuplicateError(
                    f"duplicate observation for {sid!r} at {format_period(freq, ordinal)}"
                )
            obs[ordinal] = value

    out = []
    for sid in sorted(rows):
        obs = rows[sid]
        freq = freqs[sid]
        ordinals = sorted(obs)
        for prev, cur in zip(ordinals, ordinals[1:]):
            if cur != prev + 1:
                raise GapError(sid, format_period(freq, prev + 1))
        out.append(
            TimeSeries(
                id=sid,
                frequency=freq,
                start=ordinals[0],
                values=[obs[o] for o in ordinals],
                unit=units.get(sid, "percent"),
            )
        )
    return out


def invert_series(s: TimeSeries) -> TimeSeries:
    """Negate every value, e.g. so that tightening standards read as less supply."""
    return s.with_values(-s.values, id=f"{s.id}_inv")


GROWTH_KINDS = ("period-on-period", "log-return")


def growth_rate(s: TimeSeries, kind: str = "period-on-period") -> TimeSeries:
    """Percent growth between consecutive observations (length shrinks by one)."""
    if len(s) < 2:
        raise InsufficientDataError(f"growth rate of {s.id!r} needs at least 2 observations")
    x = s.values
    if kind == "period-on-period":
        if np.any(x[:-1] == 0):
            raise DomainError(f"series {s.id!r} has zero values; period growth undefined")
        g = 100.0 * (x[1:] / x[:-1] - 1.0)
    elif kind == "log-return":
        if np.any(x <= 0):
            raise DomainError(f"log-return of {s.id!r} requires strictly positive values")
        g = 100.0 * np.log(x[1:] / x[:-1])
    else:
        raise ValueError(f"unknown growth kind {kind!r}")
    return TimeSeries(id=s.id, frequency=s.frequency, start=s.start + 1, values=g, unit="percent")


def assemble_panel(series: Sequence[TimeSeries], ordering: Sequence[str]) -> Panel:
    """Trim the named series to their common monthly span, in ``ordering``."""
    by_id: dict[str, TimeSeries] = {}
    for s in series:
        if s.id in by_id:
            raise DuplicateError(f"series {s.id!r} supplied more than once")
        by_id[s.id] = s
    if len(set(ordering)) != len(ordering):
        raise OrderingError("ordering lists a series id more than once")
    missing = [sid for sid in ordering if sid not in by_id]
    if missing:
        raise OrderingError(f"ordering references unknown series: {', '.join(missing)}")
    chosen = [by_id[sid] for sid in ordering]
    quarterly = [s.id for s in chosen if s.frequency != MONTHLY]
    if quarterly:
        raise FrequencyError(
            f"quarterly series {', '.join(quarterly)} must be disaggregated to monthly first"
        )
    first = max(s.start for s in chosen)
    last = min(s.end for s in chosen)
    if first > last:
        raise InsufficientDataError("series have no overlapping span")
    return Panel(tuple(s.window(first, last) for s in chosen))
