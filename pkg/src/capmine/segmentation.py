"""Piecewise-linear smoothing and signed change-event extraction.

Smoothing is a bottom-up merge: a series starts as segments over adjacent
index pairs, and the adjacent segment pair whose merged least-squares line
has the smallest maximum absolute residual is merged repeatedly while that
residual stays within ``max_error``. The reconstruction therefore never
deviates from the original by more than ``max_error`` at any non-null index.
A ``max_error`` of 0 keeps the series bit-exact, so it disables smoothing.

Event extraction turns a (possibly smoothed) series into signed change
events: index t carries a ``+`` when the value rose by at least epsilon from
index t-1, a ``-`` when it fell by at least epsilon. Deltas touching a null
never produce an event, and a zero delta is never an event even at epsilon 0.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import errors

Sign = int  # +1 or -1


@dataclass(frozen=True)
class Segment:
    start: int       # grid index, inclusive
    end: int         # grid index, inclusive
    slope: float     # value units per grid step
    intercept: float  # fitted value at ``start``

    def values(self) -> np.ndarray:
        return _line_values(self.slope, self.intercept, self.end - self.start + 1)


@dataclass(frozen=True)
class SensorEvents:
    """Sorted change-event indices of one sensor, split by direction."""

    rises: tuple[int, ...]
    falls: tuple[int, ...]

    def indices(self, sign: Sign) -> tuple[int, ...]:
        return self.rises if sign > 0 else self.falls

    def any_indices(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.rises) | set(self.falls)))

    def pairs(self) -> list[tuple[int, Sign]]:
        merged = [(t, 1) for t in self.rises] + [(t, -1) for t in self.falls]
        return sorted(merged)

    def __len__(self) -> int:
        return len(self.rises) + len(self.falls)


def _line_values(slope: float, intercept: float, length: int) -> np.ndarray:
    # Shared by fitting and reconstruction so residual checks see exactly
    # the values reconstruction will produce.
    return intercept + slope * np.arange(length, dtype=np.float64)


def _fit_line(values: np.ndarray) -> tuple[float, float]:
    """Least-squares line over offsets 0..len-1; returns (slope, value at 0)."""
    n = len(values)
    if n == 1:
        return 0.0, float(values[0])
    if n == 2:
        return float(values[1] - values[0]), float(values[0])
    x = np.arange(n, dtype=np.float64)
    x_mean = (n - 1) / 2.0
    y_mean = float(values.mean())
    denom = float(((x - x_mean) ** 2).sum())
    slope = float(((x - x_mean) * (values - y_mean)).sum() / denom)
    return slope, y_mean - slope * x_mean


def _max_residual(values: np.ndarray, slope: float, intercept: float) -> float:
    return float(np.max(np.abs(_line_values(slope, intercept, len(values)) - values)))


class _Run:
    """Mutable bottom-up merge state for one null-free run of values."""

    def __init__(self, values: np.ndarray, offset: int, max_error: float):
        self.values = values
        self.offset = offset
        self.max_error = max_error
        # spans[start] = end, both run-local inclusive
        self.spans: dict[int, int] = {}
        self.next_start: dict[int, int] = {}
        self.prev_start: dict[int, int] = {}
        # bumped whenever a segment's span changes, to invalidate heap entries
        self.version: dict[int, int] = {}

    def _initial_spans(self) -> list[tuple[int, int]]:
        n = len(self.values)
        spans = [(i, min(i + 1, n - 1)) for i in range(0, n, 2)]
        out: list[tuple[int, int]] = []
        for start, end in spans:
            if end > start:
                slope, intercept = _fit_line(self.values[start : end + 1])
                if _max_residual(self.values[start : end + 1], slope, intercept) > self.max_error:
                    # Pathological floats can defeat exact pair interpolation;
                    # single points always satisfy the bound.
                    out.append((start, start))
                    out.append((end, end))
                    continue
            out.append((start, end))
        return out

    def _merge_cost(self, left: int, right_end: int) -> float:
        merged = self.values[left : right_end + 1]
        slope, intercept = _fit_line(merged)
        return _max_residual(merged, slope, intercept)

    def _push(self, heap: list, left: int, right: int) -> None:
        cost = self._merge_cost(left, self.spans[right])
        heapq.heappush(heap, (cost, left, right, self.version[left], self.version[right]))

    def segments(self) -> list[Segment]:
        spans = self._initial_spans()
        starts = [s for s, _ in spans]
        for (start, end), nxt in zip(spans, starts[1:] + [-1]):
            self.spans[start] = end
            self.next_start[start] = nxt
            self.version[start] = 0
        for prev, cur in zip(starts, starts[1:]):
            self.prev_start[cur] = prev
        if starts:
            self.prev_start[starts[0]] = -1

        heap: list[tuple[float, int, int, int, int]] = []
        for start in starts:
            if self.next_start[start] != -1:
                self._push(heap, start, self.next_start[start])

        while heap:
            cost, left, right, vl, vr = heapq.heappop(heap)
            if (
                left not in self.spans
                or right not in self.spans
                or self.version[left] != vl
                or self.version[right] != vr
                or self.next_start[left] != right
            ):
                continue  # stale entry from an earlier merge
            if cost > self.max_error:
                break
            # merge right into left
            right_end = self.spans.pop(right)
            self.spans[left] = right_end
            self.version[left] += 1
            after = self.next_start.pop(right)
            self.next_start[left] = after
            if after != -1:
                self.prev_start[after] = left
                self._push(heap, left, after)
            before = self.prev_start[left]
            if before != -1:
                self._push(heap, before, left)

        out = []
        for start in sorted(self.spans):
            end = self.spans[start]
            slope, intercept = _fit_line(self.values[start : end + 1])
            out.append(Segment(start + self.offset, end + self.offset, slope, intercept))
        return out


def segment_series(values: Sequence[float | None] | np.ndarray, max_error: float) -> list[Segment]:
    """Bottom-up piecewise-linear approximation of one series.

    Nulls split the series into independently segmented runs. Every returned
    segment reproduces its points to within ``max_error``.
    """
    if max_error < 0:
        raise ValueError("max_error must be >= 0")
    array = _as_array(values)
    segments: list[Segment] = []
    run_start = None
    for i in range(len(array) + 1):
        is_value = i < len(array) and not np.isnan(array[i])
        if is_value and run_start is None:
            run_start = i
        elif not is_value and run_start is not None:
            segments.extend(_Run(array[run_start:i], run_start, max_error).segments())
            run_start = None
    return segments


def reconstruct(segments: Iterable[Segment], length: int) -> np.ndarray:
    """Evaluate segments onto a length-``length`` array; NaN where uncovered."""
    out = np.full(length, np.nan, dtype=np.float64)
    ordered = sorted(segments, key=lambda s: s.start)
    previous_end = -1
    for segment in ordered:
        if segment.start <= previous_end:
            raise errors.OverlappingSegments(
                f"segment starting at {segment.start} overlaps one ending at {previous_end}"
            )
        previous_end = segment.end
        out[segment.start : segment.end + 1] = segment.values()
    return out


def smooth(values: Sequence[float | None] | np.ndarray, max_error: float) -> np.ndarray:
    """Segment and reconstruct in one step; identity when ``max_error`` is 0."""
    array = _as_array(values)
    if max_error == 0:
        return array
    return reconstruct(segment_series(array, max_error), len(array))


def extract_events(values: Sequence[float | None] | np.ndarray, epsilon: float) -> SensorEvents:
    """Signed change events of one series under evolving threshold ``epsilon``."""
    if epsilon < 0:
        raise errors.NegativeEpsilon(f"epsilon must be >= 0, got {epsilon}")
    array = _as_array(values)
    if len(array) < 2:
        return SensorEvents((), ())
    deltas = array[1:] - array[:-1]  # NaN wherever either endpoint is null
    with np.errstate(invalid="ignore"):
        rise = (deltas > 0) & (deltas >= epsilon)
        fall = (deltas < 0) & (-deltas >= epsilon)
    rises = tuple(int(i) + 1 for i in np.flatnonzero(rise))
    falls = tuple(int(i) + 1 for i in np.flatnonzero(fall))
    return SensorEvents(rises, falls)


def _as_array(values: Sequence[float | None] | np.ndarray) -> np.ndarray:
    if isinstance(values, np.ndarray):
        return values.astype(np.float64, copy=False)
    return np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
