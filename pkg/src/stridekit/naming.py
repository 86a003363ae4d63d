"""Canonical feature-column naming grammar.

A column is named ``<series names joined by "|">__<function output
name>__w=<window>_s=<stride>``. Window and stride render through
:meth:`Delta.render`: time deltas pick the largest unit in
{D, h, m, s, ms, us, ns} that divides them exactly, numeric deltas use the
shortest round-trip decimal. Because component names may not contain "__" or
"|" and may not start or end with "_", parsing is the exact inverse of
formatting.
"""

from __future__ import annotations

import re
from typing import Sequence

from .errors import EmptyName, MalformedName, ReservedCharacterInName
from .series import Delta, check_component_name

_TAIL_RE = re.compile(r"^w=([^_]+)_s=([^_]+)$")


def format_output_name(
    series_names: Sequence[str],
    func_output_name: str,
    window: Delta,
    stride: Delta,
) -> str:
    if not series_names:
        raise ReservedCharacterInName("at least one series name required")
    for name in series_names:
        check_component_name(name)
    check_component_name(func_output_name)
    joined = "|".join(series_names)
    return f"{joined}__{func_output_name}__w={window.render()}_s={stride.render()}"


def parse_output_name(name: str) -> tuple[tuple[str, ...], str, Delta, Delta]:
    parts = name.split("__")
    if len(parts) != 3:
        raise MalformedName(f"{name!r} does not have exactly three '__'-separated sections")
    series_part, out_part, tail = parts
    m = _TAIL_RE.match(tail)
    if not m:
        raise MalformedName(f"{name!r}: trailing section {tail!r} is not 'w=<W>_s=<S>'")
    series_names = tuple(series_part.split("|"))
    try:
        for s in series_names:
            check_component_name(s)
        check_component_name(out_part)
    except (ReservedCharacterInName, EmptyName) as exc:
        raise MalformedName(str(exc)) from None
    window = Delta.parse(m.group(1))
    stride = Delta.parse(m.group(2))
    if window.kind is not stride.kind:
        raise MalformedName(f"{name!r}: window and stride units disagree")
    return series_names, out_part, window, stride
