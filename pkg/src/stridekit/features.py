"""Feature registry and the (optionally parallel) strided-window extraction
engine.

Descriptors are grouped by (series names, window, stride) so each group's
window grid and sample positions are computed once and shared by every
function registered under it. The unit of parallel work is one (group,
function) pair; workers inherit the resolved groups through a fork and the
collector merges results in registration order, which makes the output
bit-identical for any worker count.
"""

from __future__ import annotations

import enum
import json
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DuplicateFeature,
    EmptyAxis,
    FunctionFailure,
    InvalidDescriptor,
    KindMismatch,
    NonFloatOutput,
    UnknownColumn,
)
from .naming import format_output_name, parse_output_name
from .segment import OutputPosition, SegmentGrid, build_grid, intersect_spans, segment_positions
from .series import (
    FLOAT_TAGS,
    Delta,
    IndexKind,
    Series,
    SeriesSet,
    ValueTag,
    check_component_name,
)


class InputMode(enum.Enum):
    VALUES_ONLY = "values"
    VALUES_AND_INDEX = "values_and_index"


#: Output-tag sentinel: resolve to the input series' value tag at extraction.
PRESERVE = "preserve"


class FuncWrapper:
    """A feature function plus its output naming, typing, and bound kwargs.

    The callable receives one argument per input series - the window's value
    array, or a ``(values, index)`` pair in VALUES_AND_INDEX mode - followed by
    the bound keyword arguments, and must return one scalar per output name.
    """

    __slots__ = ("func", "base_name", "output_names", "input_mode", "bound_kwargs",
                 "output_tags", "recipe")

    def __init__(
        self,
        func: Callable,
        base_name: str | None = None,
        output_names: str | Sequence[str] | None = None,
        input_mode: InputMode = InputMode.VALUES_ONLY,
        bound_kwargs: dict | None = None,
        output_tags: Sequence | None = None,
        recipe: tuple | None = None,
    ):
        self.func = func
        self.base_name = check_component_name(base_name or getattr(func, "__name__", "func"))
        if output_names is None:
            names: tuple[str, ...] = (self.base_name,)
        elif isinstance(output_names, str):
            names = (output_names,)
        else:
            names = tuple(output_names)
        if not names:
            raise InvalidDescriptor("a function needs at least one output name")
        for n in names:
            check_component_name(n)
        self.output_names = names
        self.input_mode = input_mode
        self.bound_kwargs = dict(bound_kwargs or {})
        tags = tuple(output_tags) if output_tags is not None else (ValueTag.F64,) * len(names)
        if len(tags) != len(names):
            raise InvalidDescriptor("one output tag per output name required")
        for t in tags:
            if t is not PRESERVE and not isinstance(t, ValueTag):
                raise InvalidDescriptor(f"bad output tag {t!r}")
        self.output_tags = tags
        self.recipe = recipe

    @property
    def n_outputs(self) -> int:
        return len(self.output_names)

    def apply(self, inputs: Sequence) -> tuple:
        out = self.func(*inputs, **self.bound_kwargs)
        if isinstance(out, (tuple, list)):
            if len(out) != self.n_outputs:
                raise ValueError(
                    f"{self.base_name!r} returned {len(out)} outputs, expected {self.n_outputs}"
                )
            return tuple(out)
        if self.n_outputs != 1:
            raise ValueError(
                f"{self.base_name!r} returned a scalar but declares {self.n_outputs} outputs"
            )
        return (out,)

    def identity(self) -> tuple:
        # Duplicate-registration key within a descriptor group.
        return (self.base_name, self.output_names)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"FuncWrapper({self.base_name!r}, outputs={list(self.output_names)})"


def make_robust(
    wrapper: FuncWrapper, min_samples: int = 1, fill_value: float = math.nan
) -> FuncWrapper:
    """Wrapper that returns ``fill_value`` for every output when any input
    window holds fewer than ``min_samples`` samples, instead of calling the
    inner function.

    A NaN fill requires every output to be float-tagged; integer, boolean,
    categorical, or tag-preserving outputs cannot represent it.
    """
    if min_samples < 0:
        raise InvalidDescriptor("min_samples must be >= 0")
    fill_is_nan = isinstance(fill_value, float) and math.isnan(fill_value)
    if fill_is_nan:
        for tag in wrapper.output_tags:
            if tag is PRESERVE or tag not in FLOAT_TAGS:
                raise NonFloatOutput(
                    f"{wrapper.base_name!r}: NaN fill requires float outputs "
                    f"(offending tag: {getattr(tag, 'value', tag)})"
                )
    fills = (fill_value,) * wrapper.n_outputs

    def robust(*inputs):
        for x in inputs:
            values = x[0] if isinstance(x, tuple) else x
            if len(values) < min_samples:
                return fills
        return wrapper.apply(inputs)

    recipe = None
    if wrapper.recipe is not None:
        recipe = ("robust", wrapper.recipe, int(min_samples), float(fill_value))
    return FuncWrapper(
        robust,
        base_name=wrapper.base_name,
        output_names=wrapper.output_names,
        input_mode=wrapper.input_mode,
        output_tags=wrapper.output_tags,
        recipe=recipe,
    )


# ---------------------------------------------------------------------------
# descriptors and the collection registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureDescriptor:
    series_names: tuple[str, ...]
    function: FuncWrapper
    window: Delta
    stride: Delta

    def __init__(self, series_names, function: FuncWrapper, window, stride):
        if isinstance(series_names, str):
            names = (series_names,)
        else:
            names = tuple(series_names)
        if not names:
            raise InvalidDescriptor("series_names must not be empty")
        try:
            for n in names:
                check_component_name(n)
            w = Delta.coerce(window)
            s = Delta.coerce(stride)
        except Exception as exc:
            raise InvalidDescriptor(str(exc)) from exc
        if w.kind is not s.kind:
            raise InvalidDescriptor(
                f"window kind {w.kind.value} != stride kind {s.kind.value}"
            )
        if w.value <= 0 or s.value <= 0:
            raise InvalidDescriptor("window and stride must be positive")
        if not isinstance(function, FuncWrapper):
            raise InvalidDescriptor("function must be a FuncWrapper")
        object.__setattr__(self, "series_names", names)
        object.__setattr__(self, "function", function)
        object.__setattr__(self, "window", w)
        object.__setattr__(self, "stride", s)

    def key(self) -> tuple:
        return (self.series_names, self.window, self.stride)


def expand_multiple(
    functions: Sequence[FuncWrapper],
    series_names: Sequence,
    windows: Sequence,
    strides: Sequence,
) -> list[FeatureDescriptor]:
    """Cartesian product of functions x series entries x windows x strides."""
    for label, axis in (
        ("functions", functions),
        ("series_names", series_names),
        ("windows", windows),
        ("strides", strides),
    ):
        if not axis:
            raise EmptyAxis(f"{label} must not be empty")
    out = []
    for func in functions:
        for entry in series_names:
            for w in windows:
                for s in strides:
                    out.append(FeatureDescriptor(entry, func, w, s))
    return out


class FeatureCollection:
    """Registry of feature descriptors grouped by (series names, window,
    stride). Group and function registration order is significant: it fixes
    output column order and the parallel merge order."""

    def __init__(self, descriptors: Iterable[FeatureDescriptor] = ()):
        self._groups: dict[tuple, list[FuncWrapper]] = {}
        for d in descriptors:
            self.add(d)

    def add(self, descriptor: FeatureDescriptor | Iterable[FeatureDescriptor]) -> None:
        if isinstance(descriptor, FeatureDescriptor):
            descriptors = [descriptor]
        else:
            descriptors = list(descriptor)
        for d in descriptors:
            if not isinstance(d, FeatureDescriptor):
                raise InvalidDescriptor(f"not a FeatureDescriptor: {d!r}")
            wrappers = self._groups.setdefault(d.key(), [])
            if any(w.identity() == d.function.identity() for w in wrappers):
                raise DuplicateFeature(
                    f"{d.function.base_name!r} with outputs {list(d.function.output_names)} "
                    f"already registered for {d.key()[0]}"
                )
            wrappers.append(d.function)

    def groups(self) -> list[tuple[tuple, list[FuncWrapper]]]:
        return list(self._groups.items())

    @property
    def n_groups(self) -> int:
        return len(self._groups)

    @property
    def n_descriptors(self) -> int:
        return sum(len(v) for v in self._groups.values())

    def descriptors(self) -> list[FeatureDescriptor]:
        out = []
        for (names, w, s), wrappers in self._groups.items():
            for wrapper in wrappers:
                out.append(FeatureDescriptor(names, wrapper, w, s))
        return out

    def column_names(self) -> list[str]:
        names = []
        for (series_names, w, s), wrappers in self._groups.items():
            for wrapper in wrappers:
                for out_name in wrapper.output_names:
                    names.append(format_output_name(series_names, out_name, w, s))
        return names

    def reduce(self, feat_cols_to_keep: Sequence[str]) -> "FeatureCollection":
        """New collection with exactly the descriptors whose outputs include
        the named columns; a multi-output function is retained whole if any of
        its outputs is named."""
        keep: set[tuple] = set()
        for col in feat_cols_to_keep:
            series_names, out_name, w, s = parse_output_name(col)
            key = (series_names, w, s)
            wrappers = self._groups.get(key)
            if wrappers is None:
                raise UnknownColumn(f"no registered feature produces {col!r}")
            matched = False
            for i, wrapper in enumerate(wrappers):
                if out_name in wrapper.output_names:
                    keep.add((key, i))
                    matched = True
            if not matched:
                raise UnknownColumn(f"no registered feature produces {col!r}")
        out = FeatureCollection()
        for key, wrappers in self._groups.items():
            for i, wrapper in enumerate(wrappers):
                if (key, i) in keep:
                    out.add(FeatureDescriptor(key[0], wrapper, key[1], key[2]))
        return out


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureColumn:
    tag: ValueTag
    data: np.ndarray


class FeatureMatrix:
    """Index-preserving output table. Float columns fill missing cells with
    NaN; integer, boolean, and categorical columns are object arrays with a
    None sentinel."""

    def __init__(self, kind: IndexKind | None, index: np.ndarray, columns: dict[str, FeatureColumn]):
        self.kind = kind
        self.index = index
        self._columns = columns

    @property
    def column_names(self) -> list[str]:
        return list(self._columns)

    @property
    def n_rows(self) -> int:
        return len(self.index)

    @property
    def n_columns(self) -> int:
        return len(self._columns)

    def __getitem__(self, name: str) -> FeatureColumn:
        try:
            return self._columns[name]
        except KeyError:
            raise UnknownColumn(f"no column named {name!r}") from None

    def project(self, names: Sequence[str]) -> "FeatureMatrix":
        cols = {n: self[n] for n in names}
        return FeatureMatrix(self.kind, self.index, cols)

    def equals(self, other: "FeatureMatrix") -> bool:
        """Bitwise equality: exact index bytes, column order, tags, and cell
        payloads (NaN == NaN by byte identity)."""
        if self.kind is not other.kind:
            return False
        if self.index.dtype != other.index.dtype or self.index.tobytes() != other.index.tobytes():
            return False
        if self.column_names != other.column_names:
            return False
        for name in self.column_names:
            a, b = self[name], other[name]
            if a.tag is not b.tag or a.data.dtype != b.data.dtype:
                return False
            if a.data.dtype == object:
                if len(a.data) != len(b.data):
                    return False
                for x, y in zip(a.data, b.data):
                    if (x is None) != (y is None) or (x is not None and x != y):
                        return False
            elif a.data.tobytes() != b.data.tobytes():
                return False
        return True


@dataclass(frozen=True)
class LogRecord:
    func: str
    series: str
    window: Delta
    stride: Delta
    n_segments: int
    duration_s: float

    def to_json_obj(self) -> dict:
        return {
            "func": self.func,
            "series": self.series,
            "window": self.window.render(),
            "stride": self.stride.render(),
            "n_segments": self.n_segments,
            "duration_s": self.duration_s,
        }


@dataclass(frozen=True)
class LogSummary:
    func: str
    total_s: float
    mean_s: float
    count: int


def aggregate_log(records: Sequence[LogRecord]) -> list[LogSummary]:
    totals: dict[str, list] = {}
    for r in records:
        entry = totals.setdefault(r.func, [0.0, 0])
        entry[0] += r.duration_s
        entry[1] += 1
    return [
        LogSummary(func, total, total / count, count)
        for func, (total, count) in sorted(totals.items())
    ]


@dataclass(frozen=True)
class SparsityWarning:
    """A (series, grid) whose per-window sample counts are not all equal to
    the modal count - irregular sampling or gaps inside the span."""

    series: str
    group: tuple[str, ...]
    window: Delta
    stride: Delta
    modal_count: int
    n_deviant: int

    def message(self) -> str:
        return (
            f"series {self.series!r} (group {'|'.join(self.group)}, "
            f"w={self.window.render()} s={self.stride.render()}): "
            f"{self.n_deviant} windows deviate from the modal sample count {self.modal_count}; "
            f"pass approve_sparsity=True to silence"
        )


@dataclass(frozen=True)
class ExtractOptions:
    approve_sparsity: bool = False
    n_workers: int = 1
    log_path: str | None = None
    output_position: OutputPosition = OutputPosition.END


class ExtractResult(NamedTuple):
    matrix: FeatureMatrix
    log_records: list[LogRecord]
    sparsity_warnings: list[SparsityWarning]


# ---------------------------------------------------------------------------
# extraction engine
# ---------------------------------------------------------------------------

@dataclass
class _ResolvedGroup:
    key: tuple
    series: list[Series]
    grid: SegmentGrid
    positions: list[np.ndarray]
    wrappers: list[FuncWrapper]
    wrapper_tags: list[tuple]  # PRESERVE resolved to concrete ValueTags


def _resolve_tags(wrapper: FuncWrapper, series: list[Series]) -> tuple:
    resolved = []
    for tag in wrapper.output_tags:
        resolved.append(series[0].values.tag if tag is PRESERVE else tag)
    return tuple(resolved)


def _resolve_groups(series_set: SeriesSet, collection: FeatureCollection,
                    output_position: OutputPosition) -> list[_ResolvedGroup]:
    groups = []
    for (series_names, w, s), wrappers in collection.groups():
        members = [series_set[name] for name in series_names]  # raises UnknownSeries
        kinds = {m.kind for m in members}
        if len(kinds) > 1 or next(iter(kinds)) is not w.kind:
            raise KindMismatch(
                f"group {series_names}: series kinds {sorted(k.value for k in kinds)} "
                f"vs window kind {w.kind.value}"
            )
        begin, end = intersect_spans(members)
        grid = build_grid(begin, end, w, s, output_position)
        positions = [segment_positions(m, grid) for m in members]
        tags = [_resolve_tags(wrapper, members) for wrapper in wrappers]
        groups.append(_ResolvedGroup((series_names, w, s), members, grid, positions, wrappers, tags))
    if len({g.grid.kind for g in groups}) > 1:
        raise KindMismatch(
            "descriptors mix time and numeric windows; the output index cannot join them"
        )
    return groups


def _check_column_collisions(groups: list[_ResolvedGroup]) -> None:
    seen: set[str] = set()
    for g in groups:
        series_names, w, s = g.key
        for wrapper in g.wrappers:
            for out_name in wrapper.output_names:
                col = format_output_name(series_names, out_name, w, s)
                if col in seen:
                    raise DuplicateFeature(f"output column {col!r} produced twice")
                seen.add(col)


def _cells_to_array(cells: list, tag: ValueTag, categories) -> np.ndarray:
    if tag in FLOAT_TAGS:
        dtype = np.float64 if tag is ValueTag.F64 else np.float32
        return np.array([float(c) for c in cells], dtype=dtype)
    out = np.empty(len(cells), dtype=object)
    if tag is ValueTag.I64:
        for i, c in enumerate(cells):
            out[i] = int(c)
    elif tag is ValueTag.BOOL:
        for i, c in enumerate(cells):
            out[i] = bool(c)
    else:  # CATEGORICAL: function results are dictionary codes
        for i, c in enumerate(cells):
            out[i] = c if isinstance(c, str) else categories[int(c)]
    return out


def _compute_unit(group: _ResolvedGroup, fi: int) -> tuple[list[np.ndarray], float]:
    wrapper = group.wrappers[fi]
    tags = group.wrapper_tags[fi]
    want_index = wrapper.input_mode is InputMode.VALUES_AND_INDEX
    n = group.grid.n_segments
    n_out = wrapper.n_outputs
    cells: list[list] = [[None] * n for _ in range(n_out)]
    t0 = time.perf_counter()
    for k in range(n):
        inputs = []
        for series, pos in zip(group.series, group.positions):
            lo, hi = int(pos[k, 0]), int(pos[k, 1])
            values = series.values.data[lo:hi]
            if want_index:
                inputs.append((values, series.index[lo:hi]))
            else:
                inputs.append(values)
        try:
            outs = wrapper.apply(inputs)
        except Exception as exc:
            series_names = "|".join(group.key[0])
            raise FunctionFailure(
                f"function {wrapper.base_name!r} failed on group {series_names!r} "
                f"segment {k}: {exc}"
            ) from exc
        for j in range(n_out):
            cells[j][k] = outs[j]
    categories = group.series[0].values.categories
    arrays = [_cells_to_array(cells[j], tags[j], categories) for j in range(n_out)]
    return arrays, time.perf_counter() - t0


# Worker context, inherited through fork; never pickled.
_WORKER_GROUPS: list[_ResolvedGroup] | None = None


def _unit_worker(unit: tuple[int, int]):
    gi, fi = unit
    assert _WORKER_GROUPS is not None
    arrays, duration = _compute_unit(_WORKER_GROUPS[gi], fi)
    return unit, arrays, duration


def _run_units(groups: list[_ResolvedGroup], n_workers: int) -> dict[tuple, tuple]:
    units = [(gi, fi) for gi, g in enumerate(groups) for fi in range(len(g.wrappers))]
    results: dict[tuple, tuple] = {}
    use_pool = (
        n_workers > 1
        and len(units) > 1
        and "fork" in multiprocessing.get_all_start_methods()
    )
    if not use_pool:
        for gi, fi in units:
            arrays, duration = _compute_unit(groups[gi], fi)
            results[(gi, fi)] = (arrays, duration)
        return results
    global _WORKER_GROUPS
    _WORKER_GROUPS = groups
    try:
        ctx = multiprocessing.get_context("fork")
        chunksize = max(1, len(units) // (n_workers * 4))
        with ProcessPoolExecutor(max_workers=n_workers, mp_context=ctx) as pool:
            for unit, arrays, duration in pool.map(_unit_worker, units, chunksize=chunksize):
                results[unit] = (arrays, duration)
    finally:
        _WORKER_GROUPS = None
    return results


def _merge(groups: list[_ResolvedGroup], results: dict[tuple, tuple]) -> FeatureMatrix:
    active = [g for g in groups if g.grid.n_segments > 0]
    if groups:
        kind = groups[0].grid.kind
        index_dtype = np.int64 if kind is IndexKind.TIME_NS else np.float64
    else:
        kind, index_dtype = None, np.float64
    if active:
        index = np.unique(np.concatenate([g.grid.output_index() for g in active]))
        index = index.astype(index_dtype, copy=False)
    else:
        index = np.array([], dtype=index_dtype)

    columns: dict[str, FeatureColumn] = {}
    for gi, g in enumerate(groups):
        series_names, w, s = g.key
        rows = np.searchsorted(index, g.grid.output_index())
        for fi, wrapper in enumerate(g.wrappers):
            arrays, _ = results[(gi, fi)]
            tags = g.wrapper_tags[fi]
            for j, out_name in enumerate(wrapper.output_names):
                col_name = format_output_name(series_names, out_name, w, s)
                tag = tags[j]
                if tag in FLOAT_TAGS:
                    dtype = np.float64 if tag is ValueTag.F64 else np.float32
                    data = np.full(len(index), np.nan, dtype=dtype)
                else:
                    data = np.full(len(index), None, dtype=object)
                if len(rows):
                    data[rows] = arrays[j]
                columns[col_name] = FeatureColumn(tag, data)
    return FeatureMatrix(kind, index, columns)


def _sparsity_warnings(groups: list[_ResolvedGroup]) -> list[SparsityWarning]:
    warnings = []
    for g in groups:
        series_names, w, s = g.key
        for series, pos in zip(g.series, g.positions):
            if g.grid.n_segments == 0:
                continue
            counts = pos[:, 1] - pos[:, 0]
            values, freq = np.unique(counts, return_counts=True)
            modal = int(values[int(np.argmax(freq))])
            deviant = int(np.count_nonzero(counts != modal))
            if deviant:
                warnings.append(
                    SparsityWarning(series.name, series_names, w, s, modal, deviant)
                )
    return warnings


def extract(
    series_set: SeriesSet,
    collection: FeatureCollection,
    options: ExtractOptions | None = None,
) -> ExtractResult:
    """Run every registered feature over its strided windows and outer-join
    the per-group results on the output index.

    Raises UnknownSeries, KindMismatch, or DisjointSpans before any function
    runs; FunctionFailure (naming the group and segment) aborts the whole
    extraction.
    """
    options = options or ExtractOptions()
    groups = _resolve_groups(series_set, collection, options.output_position)
    _check_column_collisions(groups)
    warnings = [] if options.approve_sparsity else _sparsity_warnings(groups)
    results = _run_units(groups, max(1, options.n_workers))
    matrix = _merge(groups, results)

    records = []
    for gi, g in enumerate(groups):
        series_names, w, s = g.key
        for fi, wrapper in enumerate(g.wrappers):
            _, duration = results[(gi, fi)]
            records.append(
                LogRecord(
                    func=wrapper.base_name,
                    series="|".join(series_names),
                    window=w,
                    stride=s,
                    n_segments=g.grid.n_segments,
                    duration_s=duration,
                )
            )
    if options.log_path:
        with open(options.log_path, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps(r.to_json_obj()) + "\n")
    return ExtractResult(matrix, records, warnings)
