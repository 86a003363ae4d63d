"""Strided-window feature extraction for multivariate, irregularly sampled,
gapped time series: zero-copy series views, index-unit window grids, a
deterministic (optionally parallel) extraction engine, whole-series
processing pipelines, gap-aware chunking, and a benchmark harness."""

from . import errors
from .errors import StridekitError
from .series import (
    Delta,
    IndexKind,
    Series,
    SeriesSet,
    SeriesView,
    ValueColumn,
    ValueTag,
    infer_period,
    slice_range,
)
from .segment import (
    OutputPosition,
    SegmentGrid,
    build_grid,
    intersect_spans,
    segment_positions,
)
from .naming import format_output_name, parse_output_name
from .features import (
    ExtractOptions,
    ExtractResult,
    FeatureCollection,
    FeatureColumn,
    FeatureDescriptor,
    FeatureMatrix,
    FuncWrapper,
    InputMode,
    LogRecord,
    LogSummary,
    PRESERVE,
    SparsityWarning,
    aggregate_log,
    expand_multiple,
    extract,
    make_robust,
)
from .calculators import BUILTIN_NAMES, builtin
from .processing import (
    PROCESSOR_NAMES,
    Pipeline,
    ProcessorStep,
    SELECTOR_OUTPUTS,
    add_step,
    builtin_processor,
    required_inputs,
    run_pipeline,
)
from .chunking import ChunkGroup, ChunkSpec, chunk_series, chunk_set
from .io import (
    format_rfc3339,
    load_csv,
    parse_feature_config,
    parse_pipeline_config,
    parse_rfc3339_ns,
    read_json,
    serialize_feature_config,
    serialize_pipeline_config,
    write_json,
    write_matrix,
    write_series_csv,
)
from .bench import (
    BenchReport,
    data_bytes,
    default_feature_functions,
    gen_synthetic,
    measure_allocation,
    run_bench,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "StridekitError",
    "Delta",
    "IndexKind",
    "Series",
    "SeriesSet",
    "SeriesView",
    "ValueColumn",
    "ValueTag",
    "infer_period",
    "slice_range",
    "OutputPosition",
    "SegmentGrid",
    "build_grid",
    "intersect_spans",
    "segment_positions",
    "format_output_name",
    "parse_output_name",
    "ExtractOptions",
    "ExtractResult",
    "FeatureCollection",
    "FeatureColumn",
    "FeatureDescriptor",
    "FeatureMatrix",
    "FuncWrapper",
    "InputMode",
    "LogRecord",
    "LogSummary",
    "PRESERVE",
    "SparsityWarning",
    "aggregate_log",
    "expand_multiple",
    "extract",
    "make_robust",
    "BUILTIN_NAMES",
    "builtin",
    "PROCESSOR_NAMES",
    "Pipeline",
    "ProcessorStep",
    "SELECTOR_OUTPUTS",
    "add_step",
    "builtin_processor",
    "required_inputs",
    "run_pipeline",
    "ChunkGroup",
    "ChunkSpec",
    "chunk_series",
    "chunk_set",
    "format_rfc3339",
    "load_csv",
    "parse_feature_config",
    "parse_pipeline_config",
    "parse_rfc3339_ns",
    "read_json",
    "serialize_feature_config",
    "serialize_pipeline_config",
    "write_json",
    "write_matrix",
    "write_series_csv",
    "BenchReport",
    "data_bytes",
    "default_feature_functions",
    "gen_synthetic",
    "measure_allocation",
    "run_bench",
    "__version__",
]
