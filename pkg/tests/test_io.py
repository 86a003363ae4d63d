"""CSV round trips, timestamp parsing, and JSON config documents."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stridekit import (
    ExtractOptions,
    FeatureCollection,
    FeatureDescriptor,
    FuncWrapper,
    IndexKind,
    OutputPosition,
    Series,
    SeriesSet,
    ValueTag,
    builtin,
    extract,
    load_csv,
    parse_feature_config,
    parse_pipeline_config,
    parse_rfc3339_ns,
    format_rfc3339,
    read_json,
    run_pipeline,
    serialize_feature_config,
    serialize_pipeline_config,
    write_json,
    write_matrix,
    write_series_csv,
)
from stridekit.errors import (
    ConfigError,
    DuplicateHeader,
    IoError,
    KindMismatch,
    LengthMismatch,
    NonFloatOutput,
    NonMonotonicIndex,
    ParseError,
    StridekitError,
    UnknownBuiltin,
)

from conftest import NS, numeric_series, time_series


# ---------------------------------------------------------------------------
# RFC 3339 timestamps
# ---------------------------------------------------------------------------

def test_parse_epoch_and_fractions():
    assert parse_rfc3339_ns("1970-01-01T00:00:00Z") == 0
    assert parse_rfc3339_ns("1970-01-01T00:00:01.5Z") == 1_500_000_000
    assert parse_rfc3339_ns("1970-01-01T00:00:00.000000001Z") == 1


def test_parse_applies_offsets():
    utc = parse_rfc3339_ns("2020-01-01T00:00:00Z")
    assert parse_rfc3339_ns("2020-01-01T01:00:00+01:00") == utc
    assert parse_rfc3339_ns("2019-12-31T18:30:00-05:30") == utc
    # Missing offset reads as UTC; space and lowercase separators accepted.
    assert parse_rfc3339_ns("2020-01-01T00:00:00") == utc
    assert parse_rfc3339_ns("2020-01-01 00:00:00z") == utc
    assert parse_rfc3339_ns("2020-01-01t00:00:00Z") == utc


@pytest.mark.parametrize(
    "bad",
    ["", "garbage", "2020-13-01T00:00:00Z", "2020-01-32T00:00:00Z",
     "2020-01-01T25:00:00Z", "2020-01-01T00:61:00Z", "20200101T000000Z",
     "2020-01-01T00:00:00.1234567890Z"],
)
def test_parse_rejects_malformed_timestamps(bad):
    with pytest.raises(ValueError):
        parse_rfc3339_ns(bad)


def test_format_trims_fraction_to_unit_boundaries():
    assert format_rfc3339(0) == "1970-01-01T00:00:00Z"
    assert format_rfc3339(1_500_000_000) == "1970-01-01T00:00:01.500Z"
    assert format_rfc3339(1_500_000) == "1970-01-01T00:00:00.001500Z"
    assert format_rfc3339(1) == "1970-01-01T00:00:00.000000001Z"
    assert format_rfc3339(-1) == "1969-12-31T23:59:59.999999999Z"


@given(st.integers(min_value=-9_200_000_000_000_000_000,
                   max_value=9_200_000_000_000_000_000))
def test_rfc3339_round_trip(ns):
    assert parse_rfc3339_ns(format_rfc3339(ns)) == ns


@given(st.integers(min_value=-(2**62), max_value=2**62))
def test_parse_agrees_with_datetime64_rendering(ns):
    text = str(np.datetime64(ns, "ns"))
    assert parse_rfc3339_ns(text) == ns


# ---------------------------------------------------------------------------
# load_csv
# ---------------------------------------------------------------------------

def write_text(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def test_load_time_indexed_columns(tmp_path):
    path = write_text(tmp_path / "acc.csv", [
        "index,ACC_x,ACC_y,ACC_z",
        "2020-01-01T00:00:00Z,1.0,2.0,3.0",
        "2020-01-01T00:00:01Z,4.0,5.0,6.0",
        "2020-01-01T00:00:02Z,7.0,8.0,9.0",
    ])
    series = load_csv(path)
    assert [s.name for s in series] == ["ACC_x", "ACC_y", "ACC_z"]
    base = parse_rfc3339_ns("2020-01-01T00:00:00Z")
    for s in series:
        assert s.kind is IndexKind.TIME_NS
        assert list(s.index) == [base, base + NS, base + 2 * NS]
        assert len(s) == 3
    assert list(series[0].values.data) == [1.0, 4.0, 7.0]


def test_load_numeric_index(tmp_path):
    path = write_text(tmp_path / "n.csv", [
        "index,V",
        "0.5,10",
        "1.5,20",
    ])
    (s,) = load_csv(path)
    assert s.kind is IndexKind.NUMERIC
    assert list(s.index) == [0.5, 1.5]
    assert s.values.tag is ValueTag.I64


def test_decreasing_index_names_row_seven(tmp_path):
    stamps = ["2020-01-01T00:00:0%dZ" % i for i in range(6)]
    stamps[5] = "2020-01-01T00:00:02Z"  # drops below its predecessor
    path = write_text(tmp_path / "bad.csv",
                      ["index,V"] + [f"{t},{i}" for i, t in enumerate(stamps)])
    with pytest.raises(NonMonotonicIndex) as err:
        load_csv(path)
    assert "row 7" in str(err.value)
    series = load_csv(path, sort=True)
    assert list(np.diff(series[0].index) >= 0) == [True] * 5


def test_sort_is_stable_for_equal_keys(tmp_path):
    path = write_text(tmp_path / "dup.csv", [
        "index,V",
        "5,first",
        "1,early",
        "5,second",
    ])
    (s,) = load_csv(path, sort=True)
    decoded = [s.values.decode(c) for c in s.values.data]
    assert decoded == ["early", "first", "second"]


def test_unparseable_timestamp_names_row(tmp_path):
    path = write_text(tmp_path / "bad.csv", [
        "index,V",
        "2020-01-01T00:00:00Z,1",
        "not-a-time,2",
    ])
    with pytest.raises(ParseError) as err:
        load_csv(path)
    assert "row 3" in str(err.value)


def test_kind_hint_forces_index_interpretation(tmp_path):
    path = write_text(tmp_path / "n.csv", ["timestamp,V", "0.5,1", "1.5,2"])
    (s,) = load_csv(path, index_column="timestamp")
    assert s.kind is IndexKind.NUMERIC
    with pytest.raises(ParseError) as err:
        load_csv(path, index_column="timestamp", kind_hint=IndexKind.TIME_NS)
    assert "row 2" in str(err.value)


def test_structural_errors(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(IoError):
        load_csv(str(missing))
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ParseError):
        load_csv(str(empty))
    no_index = write_text(tmp_path / "noidx.csv", ["time,V", "1,2"])
    with pytest.raises(ParseError):
        load_csv(no_index)
    dup = write_text(tmp_path / "dup.csv", ["index,V,V", "1,2,3"])
    with pytest.raises(DuplicateHeader):
        load_csv(dup)
    ragged = write_text(tmp_path / "ragged.csv", ["index,V", "1,2", "3"])
    with pytest.raises(ParseError) as err:
        load_csv(ragged)
    assert "row 3" in str(err.value)


def test_value_tag_inference(tmp_path):
    path = write_text(tmp_path / "tags.csv", [
        "index,flag,whole,frac,label,gappy",
        "0,true,4,0.5,walk,1",
        "1,false,-2,1.5,run,",
        "2,true,+7,2.5,walk,3",
    ])
    series = {s.name: s for s in load_csv(path)}
    assert series["flag"].values.tag is ValueTag.BOOL
    assert series["whole"].values.tag is ValueTag.I64
    assert list(series["whole"].values.data) == [4, -2, 7]
    assert series["frac"].values.tag is ValueTag.F64
    assert series["label"].values.tag is ValueTag.CATEGORICAL
    # An empty cell turns an otherwise integer column into floats with NaN.
    gappy = series["gappy"].values.data
    assert series["gappy"].values.tag is ValueTag.F64
    assert gappy[0] == 1.0 and math.isnan(gappy[1]) and gappy[2] == 3.0


def test_nonnumeric_tokens_become_categorical(tmp_path):
    # "1_0" fails the strict numeric grammar, so the column is labels.
    path = write_text(tmp_path / "odd.csv", ["index,V", "0,1_0", "1,2"])
    (s,) = load_csv(path)
    assert s.values.tag is ValueTag.CATEGORICAL


def test_empty_cell_in_label_column_rejected(tmp_path):
    path = write_text(tmp_path / "bad.csv", ["index,V", "0,walk", "1,", "2,run"])
    with pytest.raises(ParseError) as err:
        load_csv(path)
    assert "row 3" in str(err.value)


# ---------------------------------------------------------------------------
# write_series_csv round trips
# ---------------------------------------------------------------------------

def test_float_round_trip_with_nan(tmp_path):
    vals = np.array([0.1, -0.0, 1e-17, math.nan, 3.5e300])
    s = time_series("F", [0, 1, 2, 3, 4], values=vals)
    path = tmp_path / "f.csv"
    write_series_csv([s], path)
    (back,) = load_csv(str(path))
    assert back.kind is IndexKind.TIME_NS
    assert list(back.index) == list(s.index)
    assert np.array_equal(back.values.data, vals, equal_nan=True)
    # Signed zero survives repr.
    assert math.copysign(1.0, back.values.data[1]) == -1.0


def test_bool_int_categorical_round_trip(tmp_path):
    idx = np.arange(4.0)
    flags = numeric_series("flags", idx, values=np.array([True, False, False, True]))
    counts = numeric_series("counts", idx, values=np.array([1, -2, 3, 4], dtype=np.int64))
    labels = numeric_series(
        "labels", idx,
        values=np.array(['walk', 'run, fast', 'say "hi"', 'walk'], dtype=object),
    )
    path = tmp_path / "mix.csv"
    write_series_csv([flags, counts, labels], path)
    back = {s.name: s for s in load_csv(str(path))}
    assert back["flags"].values.tag is ValueTag.BOOL
    assert list(back["flags"].values.data) == [True, False, False, True]
    assert back["counts"].values.tag is ValueTag.I64
    assert list(back["counts"].values.data) == [1, -2, 3, 4]
    lab = back["labels"].values
    assert lab.tag is ValueTag.CATEGORICAL
    assert [lab.decode(c) for c in lab.data] == ['walk', 'run, fast', 'say "hi"', 'walk']


def test_float32_reloads_as_float64_with_exact_values(tmp_path):
    vals = (np.arange(5, dtype=np.float32) / 3).astype(np.float32)
    s = numeric_series("S", np.arange(5.0), values=vals)
    assert s.values.tag is ValueTag.F32
    path = tmp_path / "f32.csv"
    write_series_csv([s], path)
    (back,) = load_csv(str(path))
    assert back.values.tag is ValueTag.F64
    assert np.array_equal(back.values.data, vals.astype(np.float64))


def test_write_series_requires_alignment(tmp_path):
    a = numeric_series("A", np.arange(3.0))
    b = numeric_series("B", np.arange(3.0) + 0.5)
    c = time_series("C", [0, 1, 2])
    with pytest.raises(LengthMismatch):
        write_series_csv([a, b], tmp_path / "x.csv")
    with pytest.raises(KindMismatch):
        write_series_csv([a, c], tmp_path / "x.csv")
    with pytest.raises(LengthMismatch):
        write_series_csv([], tmp_path / "x.csv")


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False,
                          min_value=-1e12, max_value=1e12),
                min_size=1, max_size=30, unique=True))
def test_numeric_index_round_trip(tmp_path_factory, xs):
    tmp = tmp_path_factory.mktemp("idx")
    idx = np.array(sorted(xs))
    s = numeric_series("S", idx)
    path = tmp / "s.csv"
    write_series_csv([s], path)
    (back,) = load_csv(str(path))
    assert back.index.tobytes() == idx.tobytes()


# ---------------------------------------------------------------------------
# write_matrix
# ---------------------------------------------------------------------------

def small_matrix():
    t = np.arange(0.0, 100.25, 0.25)
    data = SeriesSet([time_series("TMP", t, values=20.0 + 0.01 * np.arange(len(t)))])
    c = FeatureCollection([
        FeatureDescriptor("TMP", builtin("mean"), "30s", "10s"),
        FeatureDescriptor("TMP", builtin("std"), "1m", "10s"),
    ])
    return extract(data, c).matrix


def test_write_matrix_shape_and_nan_cells(tmp_path):
    matrix = small_matrix()
    path = tmp_path / "out.csv"
    write_matrix(matrix, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == matrix.n_rows + 1
    assert lines[0] == "index,TMP__mean__w=30s_s=10s,TMP__std__w=1m_s=10s"
    # The first three rows predate the first complete 1-minute window.
    first = lines[1].split(",")
    assert first[0] == format_rfc3339(int(matrix.index[0]))
    assert first[2] == ""
    assert lines[4].split(",")[2] != ""


def test_write_matrix_is_byte_stable(tmp_path):
    matrix = small_matrix()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_matrix(matrix, a)
    write_matrix(small_matrix(), b)
    assert a.read_bytes() == b.read_bytes()


def test_write_empty_matrix_header_only(tmp_path):
    data = SeriesSet([numeric_series("S", np.arange(0.0, 5.0))])
    c = FeatureCollection([FeatureDescriptor("S", builtin("mean"), 50.0, 10.0)])
    matrix = extract(data, c).matrix
    assert matrix.n_rows == 0
    path = tmp_path / "empty.csv"
    write_matrix(matrix, path)
    assert path.read_bytes() == b"index,S__mean__w=50_s=10\r\n"


# ---------------------------------------------------------------------------
# feature config documents
# ---------------------------------------------------------------------------

FEATURE_DOC = {
    "features": [
        {
            "series": "TMP",
            "functions": [
                {"name": "mean"},
                {"name": "quantile", "params": {"q": 0.25}},
                {"name": "std", "params": {}, "robust": {"min_samples": 4}},
            ],
            "windows": ["30s"],
            "strides": ["10s"],
        },
        {
            "series": [["ACC_x", "ACC_y"]],
            "functions": [{"name": "count", "robust": {"min_samples": 1, "fill_value": 0}}],
            "windows": ["5s"],
            "strides": ["2500ms"],
        },
    ],
    "options": {"approve_sparsity": True, "n_workers": 2, "output_position": "begin"},
}


def test_parse_feature_config_builds_collection():
    collection, options = parse_feature_config(FEATURE_DOC)
    assert collection.n_groups == 2
    cols = collection.column_names()
    assert "TMP__quantile_0.25__w=30s_s=10s" in cols
    assert "ACC_x|ACC_y__count__w=5s_s=2500ms" in cols
    assert options.approve_sparsity is True
    assert options.n_workers == 2
    assert options.output_position is OutputPosition.BEGIN


def test_robust_duplicate_of_plain_function_conflicts():
    # The robust-wrapped mean shares base name and output name with the plain
    # mean on the same group, which would collide in the output matrix.
    doc = {
        "features": [{
            "series": "TMP",
            "functions": [{"name": "mean"}, {"name": "mean", "robust": {"min_samples": 2}}],
            "windows": ["30s"], "strides": ["10s"],
        }]
    }
    with pytest.raises(StridekitError):
        parse_feature_config(doc)


def test_feature_config_round_trip_is_idempotent():
    doc = {
        "features": [
            {
                "series": "TMP",
                "functions": [
                    {"name": "mean"},
                    {"name": "quantile", "params": {"q": 0.25}},
                ],
                "windows": ["30s"],
                "strides": ["10s"],
            },
            {
                "series": [["ACC_x", "ACC_y"]],
                "functions": [{"name": "count", "robust": {"min_samples": 1, "fill_value": 0}}],
                "windows": ["5s"],
                "strides": ["2500ms"],
            },
        ],
    }
    collection, options = parse_feature_config(doc)
    serialized = serialize_feature_config(collection, options)
    collection2, options2 = parse_feature_config(serialized)
    assert collection.column_names() == collection2.column_names()
    assert options == options2
    assert serialize_feature_config(collection2, options2) == serialized


def test_multi_window_entry_expands_to_groups():
    doc = {
        "features": [{
            "series": ["TMP", "EDA"],
            "functions": [{"name": "mean"}],
            "windows": ["30s", "1m"],
            "strides": ["10s"],
        }]
    }
    collection, _ = parse_feature_config(doc)
    assert collection.n_groups == 4
    assert collection.n_descriptors == 4


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"features": []},
        {"features": "TMP"},
        {"features": [{"series": "TMP"}]},
        {"features": [{"series": [], "functions": [{"name": "mean"}],
                       "windows": ["30s"], "strides": ["10s"]}]},
        {"features": [{"series": "TMP", "functions": [],
                       "windows": ["30s"], "strides": ["10s"]}]},
        {"features": [{"series": "TMP", "functions": [{"name": "mean"}],
                       "windows": [], "strides": ["10s"]}]},
        {"features": [{"series": "TMP", "functions": [{"params": {}}],
                       "windows": ["30s"], "strides": ["10s"]}]},
        {"features": [{"series": "TMP", "functions": [{"name": "mean"}],
                       "windows": ["30s"], "strides": ["10s"], "extra": 1}]},
        {"features": [{"series": "TMP",
                       "functions": [{"name": "mean", "robust": {"min_samples": "1"}}],
                       "windows": ["30s"], "strides": ["10s"]}]},
        {"features": [{"series": "TMP", "functions": [{"name": "mean"}],
                       "windows": ["30s"], "strides": ["10s"]}],
         "options": {"n_workers": 0}},
        {"features": [{"series": "TMP", "functions": [{"name": "mean"}],
                       "windows": ["30s"], "strides": ["10s"]}],
         "options": {"output_position": "middle"}},
    ],
)
def test_feature_config_errors(doc):
    with pytest.raises(ConfigError):
        parse_feature_config(doc)


def test_feature_config_propagates_function_errors():
    bad_builtin = {
        "features": [{"series": "TMP", "functions": [{"name": "entropy"}],
                      "windows": ["30s"], "strides": ["10s"]}]
    }
    with pytest.raises(UnknownBuiltin):
        parse_feature_config(bad_builtin)
    nan_robust_count = {
        "features": [{"series": "TMP",
                      "functions": [{"name": "count", "robust": {"min_samples": 1}}],
                      "windows": ["30s"], "strides": ["10s"]}]
    }
    with pytest.raises(NonFloatOutput):
        parse_feature_config(nan_robust_count)
    bad_delta = {
        "features": [{"series": "TMP", "functions": [{"name": "mean"}],
                      "windows": ["thirty"], "strides": ["10s"]}]
    }
    with pytest.raises(StridekitError):
        parse_feature_config(bad_delta)


def test_serialize_rejects_custom_functions():
    c = FeatureCollection([
        FeatureDescriptor("S", FuncWrapper(lambda x: 0.0, base_name="custom"), 5.0, 1.0)
    ])
    with pytest.raises(ConfigError):
        serialize_feature_config(c)


# ---------------------------------------------------------------------------
# pipeline config documents
# ---------------------------------------------------------------------------

PIPELINE_DOC = {
    "steps": [
        {"function": "smv", "series": [["ACC_x", "ACC_y", "ACC_z"]],
         "params": {"output": "ACC_SMV"}},
        {"function": "median_filter", "series": "ACC_SMV", "params": {"size": 3}},
        {"function": "clip", "series": ["ACC_SMV"], "params": {"lo": 0.0}},
        {"function": "resample_linear", "series": "ACC_SMV", "params": {"period": "1s"}},
    ]
}


def test_parse_pipeline_config_and_run():
    pipeline = parse_pipeline_config(PIPELINE_DOC)
    assert len(pipeline) == 4
    t = np.arange(0.0, 4.0)
    data = SeriesSet([
        time_series("ACC_x", t, values=np.array([3.0, 0.0, 0.0, 1.0])),
        time_series("ACC_y", t, values=np.array([4.0, 0.0, 0.0, 2.0])),
        time_series("ACC_z", t, values=np.array([0.0, 5.0, 5.0, 2.0])),
    ])
    out = run_pipeline(pipeline, data)
    assert "ACC_SMV" in out.names()


def test_pipeline_config_round_trip_is_idempotent():
    pipeline = parse_pipeline_config(PIPELINE_DOC)
    serialized = serialize_pipeline_config(pipeline)
    again = serialize_pipeline_config(parse_pipeline_config(serialized))
    assert serialized == again
    # clip's unset bound is dropped rather than written as null.
    assert serialized["steps"][2]["params"] == {"lo": 0.0}
    assert serialized["steps"][3]["params"] == {"period": "1s"}


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"steps": "x"},
        {"steps": [{"series": "A"}]},
        {"steps": [{"function": "clip", "series": "A", "params": {"lo": 0.0}, "extra": 1}]},
        {"steps": [{"function": "clip", "series": 7, "params": {"lo": 0.0}}]},
    ],
)
def test_pipeline_config_errors(doc):
    with pytest.raises(ConfigError):
        parse_pipeline_config(doc)


def test_pipeline_config_unknown_processor():
    with pytest.raises(UnknownBuiltin):
        parse_pipeline_config({"steps": [{"function": "fft", "series": "A"}]})


def test_serialize_rejects_unregistered_steps():
    from stridekit import Pipeline, ProcessorStep

    p = Pipeline([ProcessorStep(lambda v: v.values, ["A"], label="custom")])
    with pytest.raises(ConfigError):
        serialize_pipeline_config(p)


# ---------------------------------------------------------------------------
# JSON file helpers
# ---------------------------------------------------------------------------

def test_json_file_round_trip(tmp_path):
    path = tmp_path / "doc.json"
    write_json({"a": [1, 2, {"b": "c"}]}, path)
    assert read_json(path) == {"a": [1, 2, {"b": "c"}]}
    with pytest.raises(IoError):
        read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_json(bad)
