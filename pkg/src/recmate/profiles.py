"""Hourly consumption ingestion and load-profile featurization.

Consumers arrive as CSV streams of hourly meter readings and leave as
fixed-length feature vectors ready for clustering. All functions here are
pure; datasets and vectors are immutable once built.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

CSV_HEADER = "year,month,day,hour,kwh"


class Layout(enum.Enum):
    """Shape of the feature vector derived from a consumption history."""

    HOURLY_24 = 24
    WEEKPART_48 = 48
    MONTH_HOUR_288 = 288

    @property
    def length(self) -> int:
        return self.value


class Normalization(enum.Enum):
    NONE = "NONE"
    UNIT_TOTAL = "UNIT_TOTAL"
    ZSCORE = "ZSCORE"


class ProfileError(Exception):
    """Base class for ingestion and featurization failures."""


class MalformedRow(ProfileError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed row at line {line_no}" + (f": {detail}" if detail else ""))


class InvalidTimestamp(ProfileError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"invalid timestamp at line {line_no}" + (f": {detail}" if detail else ""))


class DuplicateTimestamp(ProfileError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"duplicate timestamp at line {line_no}")


class EmptyInput(ProfileError):
    pass


class EmptyDataset(ProfileError):
    pass


class InsufficientCoverage(ProfileError):
    def __init__(self, actual: float, required: float):
        self.actual = actual
        self.required = required
        super().__init__(f"coverage {actual:.4f} below required {required:.4f}")


class ZeroConsumption(ProfileError):
    pass


class ZeroVariance(ProfileError):
    """ZSCORE normalization requested on a constant profile."""


@dataclass(frozen=True, order=True)
class ConsumptionRecord:
    """One hourly meter reading."""

    year: int
    month: int
    day: int
    hour: int
    kwh: float

    def timestamp(self) -> dt.datetime:
        return dt.datetime(self.year, self.month, self.day, self.hour)


@dataclass(frozen=True)
class ConsumerDataset:
    """Chronologically sorted consumption history for one consumer.

    ``coverage`` is the fraction of hours in [first, last] (inclusive) that
    carry a reading; gaps lower it, duplicates are rejected at parse time.
    """

    consumer_id: str
    records: tuple[ConsumptionRecord, ...]
    coverage: float

    @classmethod
    def from_records(cls, consumer_id: str, records: Iterable[ConsumptionRecord]) -> "ConsumerDataset":
        recs = sorted(records)
        if not recs:
            raise EmptyDataset(f"no records for consumer {consumer_id!r}")
        for prev, cur in zip(recs, recs[1:]):
            if (prev.year, prev.month, prev.day, prev.hour) == (cur.year, cur.month, cur.day, cur.hour):
                raise DuplicateTimestamp(0)
        return cls(consumer_id, tuple(recs), _coverage(recs))

    def span_hours(self) -> int:
        first = self.records[0].timestamp()
        last = self.records[-1].timestamp()
        return int((last - first).total_seconds() // 3600) + 1

    def total_kwh(self) -> float:
        return float(sum(r.kwh for r in self.records))


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length numeric representation of one consumer's load shape."""

    consumer_id: str
    values: tuple[float, ...]
    layout: Layout
    normalization: Normalization

    def __post_init__(self):
        if len(self.values) != self.layout.length:
            raise ValueError(f"expected {self.layout.length} values for {self.layout.name}, got {len(self.values)}")


def _coverage(records: list[ConsumptionRecord]) -> float:
    first = records[0].timestamp()
    last = records[-1].timestamp()
    span = int((last - first).total_seconds() // 3600) + 1
    return len(records) / span


def parse_consumption_csv(stream: TextIO | str | bytes, consumer_id: str) -> ConsumerDataset:
    """Parse a ``year,month,day,hour,kwh`` CSV into a sorted dataset.

    Accepts a text stream, a string, or UTF-8 bytes. LF and CRLF endings are
    both fine; a trailing blank line is ignored. Raises MalformedRow,
    InvalidTimestamp, DuplicateTimestamp (all carrying 1-based line numbers,
    header = line 1) or EmptyInput.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    lines = text.split("\n")
    if lines and lines[0].startswith("﻿"):
        lines[0] = lines[0].lstrip("﻿")

    if not lines or lines[0].strip("\r ") != CSV_HEADER:
        raise MalformedRow(1, f"expected header {CSV_HEADER!r}")

    seen: set[tuple[int, int, int, int]] = set()
    records: list[ConsumptionRecord] = []
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip("\r")
        if line == "" and line_no == len(lines):  # trailing blank line only
            continue
        if line.strip() == "":
            raise MalformedRow(line_no, "blank row")
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(line_no, f"expected 5 fields, got {len(fields)}")
        try:
            year, month, day, hour = (int(f) for f in fields[:4])
        except ValueError:
            raise MalformedRow(line_no, "non-integer date part") from None
        try:
            kwh = float(fields[4])
        except ValueError:
            raise MalformedRow(line_no, "non-numeric kwh") from None
        if not math.isfinite(kwh) or kwh < 0:
            raise MalformedRow(line_no, f"kwh must be finite and >= 0, got {fields[4]}")
        if not (1 <= month <= 12 and 0 <= hour <= 23):
            raise InvalidTimestamp(line_no, f"{year}-{month}-{day} h{hour}")
        try:
            dt.date(year, month, day)
        except ValueError:
            raise InvalidTimestamp(line_no, f"{year}-{month}-{day}") from None
        key = (year, month, day, hour)
        if key in seen:
            raise DuplicateTimestamp(line_no)
        seen.add(key)
        records.append(ConsumptionRecord(year, month, day, hour, kwh))

    if not records:
        raise EmptyInput("no data rows")
    records.sort()
    return ConsumerDataset(consumer_id, tuple(records), _coverage(records))


def serialize_consumption_csv(dataset: ConsumerDataset) -> str:
    """Inverse of :func:`parse_consumption_csv`; floats use shortest round-trip repr."""
    rows = [CSV_HEADER]
    rows.extend(f"{r.year},{r.month},{r.day},{r.hour},{r.kwh!r}" for r in dataset.records)
    return "\n".join(rows) + "\n"


def series_to_dataset(consumer_id: str, series: Iterable[float], start: dt.date) -> ConsumerDataset:
    """Wrap a contiguous hourly series (starting at ``start`` 00:00) as a dataset."""
    t0 = dt.datetime(start.year, start.month, start.day)
    records = []
    for t, kwh in enumerate(series):
        ts = t0 + dt.timedelta(hours=t)
        records.append(ConsumptionRecord(ts.year, ts.month, ts.day, ts.hour, float(kwh)))
    if not records:
        raise EmptyDataset(f"empty series for consumer {consumer_id!r}")
    return ConsumerDataset(consumer_id, tuple(records), 1.0)


def dataset_to_series(dataset: ConsumerDataset) -> tuple[np.ndarray, dt.date]:
    """Contiguous hourly series over the dataset's span; gaps get the hour-of-day mean.

    Returns (series, first calendar date). Imputation mirrors the feature
    builder: an hour-of-day that was never observed falls back to the global
    mean.
    """
    first = dataset.records[0].timestamp()
    span = dataset.span_hours()
    series = np.full(span, np.nan)
    for rec in dataset.records:
        idx = int((rec.timestamp() - first).total_seconds() // 3600)
        series[idx] = rec.kwh

    if np.isnan(series).any():
        hour_means = _hour_of_day_means(dataset)
        for idx in np.flatnonzero(np.isnan(series)):
            hour = (first + dt.timedelta(hours=int(idx))).hour
            series[idx] = hour_means[hour]
    return series, first.date()


def _hour_of_day_means(dataset: ConsumerDataset) -> np.ndarray:
    """Mean kwh per hour of day; unobserved hours fall back to the global mean."""
    sums = np.zeros(24)
    counts = np.zeros(24, dtype=int)
    for rec in dataset.records:
        sums[rec.hour] += rec.kwh
        counts[rec.hour] += 1
    global_mean = sums.sum() / counts.sum()
    means = np.where(counts > 0, sums / np.maximum(counts, 1), global_mean)
    return means


def build_feature_vector(
    dataset: ConsumerDataset,
    layout: Layout = Layout.WEEKPART_48,
    normalization: Normalization = Normalization.UNIT_TOTAL,
    min_coverage: float = 0.8,
) -> FeatureVector:
    """Aggregate a dataset into a fixed-length load-shape vector.

    HOURLY_24: mean kwh per hour of day. WEEKPART_48: weekday means in
    [0, 24), weekend means in [24, 48). MONTH_HOUR_288: mean kwh per
    (month, hour) cell at index (month-1)*24 + hour. Cells with no
    observations are imputed with the hour-of-day mean (global mean if the
    hour itself was never seen), then the requested normalization applies.
    """
    if not dataset.records:
        raise EmptyDataset(dataset.consumer_id)
    if dataset.coverage < min_coverage:
        raise InsufficientCoverage(dataset.coverage, min_coverage)
    total = dataset.total_kwh()
    if total <= 0.0:
        raise ZeroConsumption(f"consumer {dataset.consumer_id!r} has zero total consumption")

    hour_means = _hour_of_day_means(dataset)

    if layout is Layout.HOURLY_24:
        values = hour_means.copy()
    elif layout is Layout.WEEKPART_48:
        sums = np.zeros(48)
        counts = np.zeros(48, dtype=int)
        for rec in dataset.records:
            weekend = dt.date(rec.year, rec.month, rec.day).weekday() >= 5
            idx = rec.hour + (24 if weekend else 0)
            sums[idx] += rec.kwh
            counts[idx] += 1
        values = np.where(counts > 0, sums / np.maximum(counts, 1), np.tile(hour_means, 2))
    elif layout is Layout.MONTH_HOUR_288:
        sums = np.zeros(288)
        counts = np.zeros(288, dtype=int)
        for rec in dataset.records:
            idx = (rec.month - 1) * 24 + rec.hour
            sums[idx] += rec.kwh
            counts[idx] += 1
        fallback = np.tile(hour_means, 12)
        values = np.where(counts > 0, sums / np.maximum(counts, 1), fallback)
    else:
        raise ValueError(f"unknown layout {layout}")

    values = _normalize(values, normalization)
    return FeatureVector(dataset.consumer_id, tuple(float(v) for v in values), layout, normalization)


def _normalize(values: np.ndarray, normalization: Normalization) -> np.ndarray:
    if normalization is Normalization.NONE:
        return values
    if normalization is Normalization.UNIT_TOTAL:
        return values / values.sum()
    if normalization is Normalization.ZSCORE:
        std = values.std()  # population std
        if std == 0.0:
            raise ZeroVariance("constant profile cannot be z-scored")
        return (values - values.mean()) / std
    raise ValueError(f"unknown normalization {normalization}")
