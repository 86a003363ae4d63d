"""Strided-rolling window arithmetic over index spans.

Windows are left-closed right-open intervals ``[begin + k*stride,
begin + k*stride + window)`` expressed in index units, and only complete
windows (fully inside the span) are generated. Sample positions for every
window are located either by vectorized binary search or by a single
two-pointer sweep; both give identical results.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DisjointSpans,
    EmptySeries,
    KindMismatch,
    NonPositiveStride,
    NonPositiveWindow,
)
from .series import Delta, IndexKind, Series, _index_scalar


class OutputPosition(enum.Enum):
    """Which end of each window labels its output row."""

    BEGIN = "begin"
    END = "end"


@dataclass(frozen=True)
class SegmentGrid:
    kind: IndexKind
    span_begin: int | float
    window: int | float
    stride: int | float
    n_segments: int
    output_position: OutputPosition = OutputPosition.END

    def starts(self) -> np.ndarray:
        """Window starts, computed as begin + k*stride in one multiply-add."""
        k = np.arange(self.n_segments)
        if self.kind is IndexKind.TIME_NS:
            return self.span_begin + k * int(self.stride)
        return self.span_begin + k.astype(np.float64) * self.stride

    def ends(self) -> np.ndarray:
        return self.starts() + self.window

    def output_index(self) -> np.ndarray:
        if self.output_position is OutputPosition.END:
            return self.ends()
        return self.starts()

    def segment_bounds(self, k: int) -> tuple:
        start = self.span_begin + k * self.stride
        return start, start + self.window


def _coerce_span_value(value, kind: IndexKind):
    return _index_scalar(value, kind)


def build_grid(
    span_begin,
    span_end,
    window,
    stride,
    output_position: OutputPosition = OutputPosition.END,
    kind: IndexKind | None = None,
) -> SegmentGrid:
    """Grid of complete strided windows covering [span_begin, span_end].

    The segment count follows floor((span - window) / stride) + 1 and is then
    reconciled against direct enumeration of begin + k*stride + window so that
    float rounding in the division can never disagree with ``starts()``.
    """
    w = Delta.coerce(window)
    s = Delta.coerce(stride)
    if w.kind is not s.kind:
        raise KindMismatch(
            f"window kind {w.kind.value} != stride kind {s.kind.value}"
        )
    if kind is not None and kind is not w.kind:
        raise KindMismatch(f"window/stride kind {w.kind.value} but span kind {kind.value}")
    kind = w.kind
    if w.value <= 0:
        raise NonPositiveWindow(f"window must be positive, got {w.render()}")
    if s.value <= 0:
        raise NonPositiveStride(f"stride must be positive, got {s.render()}")
    begin = _coerce_span_value(span_begin, kind)
    end = _coerce_span_value(span_end, kind)
    if begin > end:
        raise DisjointSpans(f"span begin {begin} exceeds span end {end}")

    span = end - begin
    if kind is IndexKind.TIME_NS:
        n = 0 if span < w.value else (span - w.value) // s.value + 1
    else:
        n = 0 if span < w.value else math.floor((span - w.value) / s.value) + 1
        # Reconcile float division (and the span subtraction itself) against
        # the multiply-add start formula, which is what starts() evaluates.
        while begin + n * s.value + w.value <= end:
            n += 1
        while n > 0 and begin + (n - 1) * s.value + w.value > end:
            n -= 1
    return SegmentGrid(kind, begin, w.value, s.value, int(n), output_position)


def segment_positions(
    series: Series, grid: SegmentGrid, method: str = "bisect"
) -> np.ndarray:
    """(n_segments, 2) array of [lo, hi) sample positions per window.

    ``bisect`` vectorizes searchsorted over all window bounds; ``sweep`` walks
    the index once with two forward-only pointers. Output is identical.
    """
    if series.kind is not grid.kind:
        raise KindMismatch(
            f"series kind {series.kind.value} != grid kind {grid.kind.value}"
        )
    if method == "bisect":
        starts = grid.starts()
        lo = np.searchsorted(series.index, starts, side="left")
        hi = np.searchsorted(series.index, starts + grid.window, side="left")
        return np.stack([lo, hi], axis=1).astype(np.int64)
    if method == "sweep":
        return _positions_sweep(series.index, grid)
    raise ValueError(f"unknown method {method!r}")


def _positions_sweep(index: np.ndarray, grid: SegmentGrid) -> np.ndarray:
    out = np.empty((grid.n_segments, 2), dtype=np.int64)
    n = len(index)
    lo = hi = 0
    for k in range(grid.n_segments):
        start = grid.span_begin + k * grid.stride
        end = start + grid.window
        while lo < n and index[lo] < start:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n and index[hi] < end:
            hi += 1
        out[k, 0] = lo
        out[k, 1] = hi
    return out


def intersect_spans(series: Sequence[Series]) -> tuple:
    """Largest span observed by every series: (max of first indices, min of
    last indices)."""
    if not series:
        raise EmptySeries("need at least one series")
    kinds = {s.kind for s in series}
    if len(kinds) > 1:
        raise KindMismatch("series mix index kinds")
    for s in series:
        if len(s) == 0:
            raise EmptySeries(f"series {s.name!r} is empty")
    begin = max(s.index[0] for s in series)
    end = min(s.index[-1] for s in series)
    if begin > end:
        raise DisjointSpans(f"series spans do not intersect: begin {begin} > end {end}")
    kind = series[0].kind
    if kind is IndexKind.TIME_NS:
        return int(begin), int(end)
    return float(begin), float(end)
