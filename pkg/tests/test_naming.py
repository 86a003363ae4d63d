"""Column-name grammar: formatting, parsing, and their round trip."""

import pytest
from hypothesis import given, strategies as st

from stridekit import Delta, format_output_name, parse_output_name
from stridekit.errors import EmptyName, MalformedName, ReservedCharacterInName

S = 1_000_000_000


def test_single_series_time_deltas():
    name = format_output_name(["ACC_SMV"], "mean", Delta.time_ns(30 * S), Delta.time_ns(10 * S))
    assert name == "ACC_SMV__mean__w=30s_s=10s"


def test_joined_series_subsecond_stride():
    name = format_output_name(
        ["ACC_x", "ACC_y"], "corr", Delta.time_ns(5 * S), Delta.time_ns(2500 * 10**6)
    )
    assert name == "ACC_x|ACC_y__corr__w=5s_s=2500ms"


def test_numeric_deltas_render_as_decimals():
    name = format_output_name(["IBI"], "q", Delta.numeric(0.5), Delta.numeric(0.25))
    assert name == "IBI__q__w=0.5_s=0.25"


def test_parse_inverts_time_name():
    got = parse_output_name("ACC_SMV__mean__w=30s_s=10s")
    assert got == (("ACC_SMV",), "mean", Delta.time_ns(30 * S), Delta.time_ns(10 * S))


def test_parse_inverts_joined_numeric_name():
    got = parse_output_name("A|B__f__w=5_s=1")
    assert got == (("A", "B"), "f", Delta.numeric(5.0), Delta.numeric(1.0))


def test_parse_rejects_sectionless_string():
    with pytest.raises(MalformedName):
        parse_output_name("no_separators")


@pytest.mark.parametrize(
    "bad",
    [
        "",
        "a__b",
        "a__b__c__d__w=1_s=1",
        "A__f__w=30s",
        "A__f__s=10s_w=30s",
        "A__f__w=_s=1",
        "A__f__w=1_s=",
        "A__f__wx=1_s=1",
        "A__f__w=abc_s=10s",
        "A__f__w=30q_s=1",
        "A__f__w=30s_s=0.5",
        "A__f__w=0.5_s=30s",
        "_A__f__w=1_s=1",
        "A___f__w=1_s=1",
        "A____w=1_s=1",
        "A|__f__w=1_s=1",
        "|A__f__w=1_s=1",
    ],
)
def test_parse_rejects_malformed_names(bad):
    with pytest.raises(MalformedName):
        parse_output_name(bad)


@pytest.mark.parametrize("component", ["A__B", "A|B", "_A", "A_"])
def test_format_rejects_reserved_characters(component):
    w = Delta.numeric(1.0)
    with pytest.raises(ReservedCharacterInName):
        format_output_name([component], "f", w, w)
    with pytest.raises(ReservedCharacterInName):
        format_output_name(["ok"], component, w, w)


def test_format_rejects_empty_component_and_empty_list():
    w = Delta.numeric(1.0)
    with pytest.raises(EmptyName):
        format_output_name([""], "f", w, w)
    with pytest.raises(EmptyName):
        format_output_name(["ok"], "", w, w)
    with pytest.raises(ReservedCharacterInName):
        format_output_name([], "f", w, w)


def test_interior_underscores_do_not_collide():
    # "A_B" + "c" and "A" + "B_c" would collide under a single-underscore
    # separator; the double-underscore grammar keeps them apart.
    w = Delta.numeric(1.0)
    first = format_output_name(["A_B"], "c", w, w)
    second = format_output_name(["A"], "B_c", w, w)
    assert first != second
    assert parse_output_name(first)[:2] == (("A_B",), "c")
    assert parse_output_name(second)[:2] == (("A",), "B_c")


component_names = st.from_regex(
    r"[A-Za-z0-9]([A-Za-z0-9_.=-]*[A-Za-z0-9.=-])?", fullmatch=True
).filter(lambda s: "__" not in s)

time_deltas = st.integers(min_value=1, max_value=10**15).map(Delta.time_ns)
numeric_deltas = (
    st.floats(min_value=1e-6, max_value=1e12, allow_nan=False, allow_infinity=False)
    .map(Delta.numeric)
)


@given(
    names=st.lists(component_names, min_size=1, max_size=4),
    out=component_names,
    wins=st.tuples(time_deltas, time_deltas) | st.tuples(numeric_deltas, numeric_deltas),
)
def test_parse_is_exact_inverse_of_format(names, out, wins):
    window, stride = wins
    text = format_output_name(names, out, window, stride)
    assert parse_output_name(text) == (tuple(names), out, window, stride)
