"""Built-in per-window feature functions.

Exact semantics, fixed here so results are reproducible bit for bit:

- accumulations (sum, mean, std, var, rms, abs_energy, skewness, kurtosis,
  slope, quantile, median) compute in float64 regardless of input tag;
- std and var are population moments (divide by n);
- skewness is Fisher-Pearson g1 = m3 / m2^1.5, kurtosis is excess
  g2 = m4 / m2^2 - 3; zero-variance windows yield 0.0 for both;
- quantile interpolates linearly between order statistics;
- slope is the least-squares slope of values against the index, with a time
  index shifted to the window start and cast to float seconds (the shift keeps
  nanosecond timestamps inside float64 precision); a zero-spread index yields
  a slope of 0.0;
- zero_cross counts strict sign changes, i.e. consecutive products < 0,
  evaluated in float64;
- count outputs an I64 column (and therefore rejects a NaN robust fill);
  first and last preserve the input series' value tag.

Empty windows: count, zero_cross return 0 and sum, abs_energy return 0.0;
every other function raises, which extract surfaces as FunctionFailure unless
the wrapper is made robust.
"""

from __future__ import annotations

import numpy as np

from .errors import BadParam, UnknownBuiltin
from .features import FuncWrapper, InputMode, PRESERVE
from .series import ValueTag, render_number


def _f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _require_nonempty(x, what: str) -> None:
    if len(x) == 0:
        raise ValueError(f"{what} of an empty window is undefined")


def _count(x):
    return len(x)


def _sum(x):
    return float(np.sum(_f64(x)))


def _mean(x):
    _require_nonempty(x, "mean")
    return float(np.mean(_f64(x)))


def _var(x):
    _require_nonempty(x, "var")
    return float(np.var(_f64(x)))


def _std(x):
    _require_nonempty(x, "std")
    return float(np.sqrt(np.var(_f64(x))))


def _min(x):
    _require_nonempty(x, "min")
    return float(np.min(_f64(x)))


def _max(x):
    _require_nonempty(x, "max")
    return float(np.max(_f64(x)))


def _median(x):
    _require_nonempty(x, "median")
    return float(np.median(_f64(x)))


def _rms(x):
    _require_nonempty(x, "rms")
    v = _f64(x)
    return float(np.sqrt(np.mean(v * v)))


def _abs_energy(x):
    v = _f64(x)
    return float(np.sum(v * v))


def _skewness(x):
    _require_nonempty(x, "skewness")
    v = _f64(x)
    d = v - np.mean(v)
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        return 0.0
    m3 = float(np.mean(d * d * d))
    return m3 / m2 ** 1.5


def _kurtosis(x):
    _require_nonempty(x, "kurtosis")
    v = _f64(x)
    d = v - np.mean(v)
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        return 0.0
    m4 = float(np.mean(d ** 4))
    return m4 / m2 ** 2 - 3.0


def _slope(pair):
    values, index = pair
    _require_nonempty(values, "slope")
    y = _f64(values)
    if index.dtype == np.int64:
        t = (index - index[0]).astype(np.float64) / 1e9
    else:
        t = _f64(index) - float(index[0])
    tc = t - np.mean(t)
    denom = float(np.sum(tc * tc))
    if denom == 0.0:
        return 0.0
    return float(np.sum(tc * (y - np.mean(y))) / denom)


def _first(x):
    _require_nonempty(x, "first")
    return x[0]


def _last(x):
    _require_nonempty(x, "last")
    return x[-1]


def _zero_cross(x):
    if len(x) < 2:
        return 0.0
    v = _f64(x)
    return float(np.count_nonzero(v[:-1] * v[1:] < 0.0))


def _no_params(params: dict, name: str) -> None:
    if params:
        raise BadParam(f"{name} takes no parameters, got {sorted(params)}")


def _make_quantile(params: dict) -> FuncWrapper:
    if set(params) != {"q"}:
        raise BadParam(f"quantile requires exactly the parameter q, got {sorted(params)}")
    q = params["q"]
    if isinstance(q, bool) or not isinstance(q, (int, float)) or not 0.0 <= float(q) <= 1.0:
        raise BadParam(f"quantile q must be a number in [0, 1], got {q!r}")
    q = float(q)

    def quantile(x):
        _require_nonempty(x, "quantile")
        return float(np.quantile(_f64(x), q))

    label = f"quantile_{render_number(q)}"
    return FuncWrapper(quantile, base_name=label, output_names=label,
                       recipe=("builtin", "quantile", {"q": q}))


_SIMPLE: dict[str, tuple] = {
    # name -> (func, input_mode, output_tag)
    "count": (_count, InputMode.VALUES_ONLY, ValueTag.I64),
    "sum": (_sum, InputMode.VALUES_ONLY, ValueTag.F64),
    "mean": (_mean, InputMode.VALUES_ONLY, ValueTag.F64),
    "std": (_std, InputMode.VALUES_ONLY, ValueTag.F64),
    "var": (_var, InputMode.VALUES_ONLY, ValueTag.F64),
    "min": (_min, InputMode.VALUES_ONLY, ValueTag.F64),
    "max": (_max, InputMode.VALUES_ONLY, ValueTag.F64),
    "median": (_median, InputMode.VALUES_ONLY, ValueTag.F64),
    "rms": (_rms, InputMode.VALUES_ONLY, ValueTag.F64),
    "abs_energy": (_abs_energy, InputMode.VALUES_ONLY, ValueTag.F64),
    "skewness": (_skewness, InputMode.VALUES_ONLY, ValueTag.F64),
    "kurtosis": (_kurtosis, InputMode.VALUES_ONLY, ValueTag.F64),
    "slope": (_slope, InputMode.VALUES_AND_INDEX, ValueTag.F64),
    "first": (_first, InputMode.VALUES_ONLY, PRESERVE),
    "last": (_last, InputMode.VALUES_ONLY, PRESERVE),
    "zero_cross": (_zero_cross, InputMode.VALUES_ONLY, ValueTag.F64),
}

BUILTIN_NAMES: tuple[str, ...] = tuple(list(_SIMPLE) + ["quantile"])


def builtin(name: str, params: dict | None = None) -> FuncWrapper:
    """Look up a built-in feature function by name.

    ``params`` is only meaningful for quantile (``{"q": float}``); any other
    parameter, or a parameter on a parameterless function, raises BadParam.
    """
    params = dict(params or {})
    if name == "quantile":
        return _make_quantile(params)
    try:
        func, mode, tag = _SIMPLE[name]
    except KeyError:
        raise UnknownBuiltin(
            f"unknown built-in {name!r}; available: {', '.join(sorted(BUILTIN_NAMES))}"
        ) from None
    _no_params(params, name)
    return FuncWrapper(func, base_name=name, output_names=name, input_mode=mode,
                       output_tags=(tag,), recipe=("builtin", name, {}))
