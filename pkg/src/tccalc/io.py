"""JSON readers and the deterministic report writer."""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .curve import CurveError, Polyline, Step, TCCurve, make_curve
from .modulus import CurveFamily, enumerate_step_curves
from .space import FiniteMetricMeasureSpace, SpaceError, as_table


class InputError(ValueError):
    """Malformed input file; the message names the file and the offending field."""


def load_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _field(obj, key, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{where}: missing field '{key}'")
    return obj[key]


def _number(v):
    if isinstance(v, bool):
        raise TypeError("boolean is not a number")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


def space_from_json(obj, where: str = "space") -> FiniteMetricMeasureSpace:
    try:
        dist = [[_number(v) for v in row] for row in _field(obj, "dist", where)]
        weight = [_number(v) for v in _field(obj, "weight", where)]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: non-numeric entry in 'dist' or 'weight' ({exc})") from exc
    coords = obj.get("coords")
    if "n" in obj and obj["n"] != len(dist):
        raise InputError(f"{where}: field 'n'={obj['n']} but 'dist' has {len(dist)} rows")
    try:
        return FiniteMetricMeasureSpace.from_data(dist, weight, coords)
    except SpaceError as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_space(path) -> FiniteMetricMeasureSpace:
    return space_from_json(load_json(path), str(path))


def function_from_json(obj, s: FiniteMetricMeasureSpace, where: str = "function") -> np.ndarray:
    values = _field(obj, "values", where)
    try:
        return as_table(values, s)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: field 'values': {exc}") from exc


def load_function(path, s: FiniteMetricMeasureSpace) -> np.ndarray:
    return function_from_json(load_json(path), s, str(path))


def curve_from_json(obj, s: FiniteMetricMeasureSpace, where: str = "curve") -> TCCurve:
    domain = _field(obj, "domain", where)
    pieces = []
    for i, p in enumerate(_field(obj, "pieces", where)):
        here = f"{where}: pieces[{i}]"
        kind = _field(p, "type", here)
        if kind == "step":
            pieces.append(Step(float(_field(p, "start", here)), int(_field(p, "point", here))))
        elif kind == "polyline":
            times = [float(t) for t in _field(p, "times", here)]
            if "start" in p and float(p["start"]) != times[0]:
                raise InputError(f"{here}: 'start' disagrees with times[0]")
            if "end" in p and float(p["end"]) != times[-1]:
                raise InputError(f"{here}: 'end' disagrees with times[-1]")
            pieces.append(Polyline(tuple(times), tuple(map(tuple, _field(p, "vertices", here)))))
        else:
            raise InputError(f"{here}: unknown piece type {kind!r}")
    try:
        return make_curve(s, domain, pieces)
    except CurveError as exc:
        raise InputError(f"{where}: {exc}") from exc


def curve_to_json(c: TCCurve) -> dict:
    pieces = []
    for p in c.pieces:
        if isinstance(p, Step):
            pieces.append({"type": "step", "start": p.start, "point": p.point})
        else:
            pieces.append({"type": "polyline", "start": p.start, "end": p.end,
                           "times": list(p.times), "vertices": [list(v) for v in p.vertices]})
    return {"domain": [c.a, c.b], "pieces": pieces}


def load_curve(path, s: FiniteMetricMeasureSpace) -> TCCurve:
    return curve_from_json(load_json(path), s, str(path))


def family_from_json(obj, s: FiniteMetricMeasureSpace, where: str = "family") -> CurveFamily:
    """A list of curve objects, or ``{"enumerate": {"max_jumps": J, "depth": D?}}``."""
    if isinstance(obj, dict) and "enumerate" in obj:
        spec = obj["enumerate"]
        jumps = int(_field(spec, "max_jumps", f"{where}: enumerate"))
        depth = spec.get("depth")
        return CurveFamily(enumerate_step_curves(s, jumps, depth), s)
    if not isinstance(obj, list):
        raise InputError(f"{where}: expected a list of curves or an 'enumerate' directive")
    curves = [curve_from_json(c, s, f"{where}[{i}]") for i, c in enumerate(obj)]
    try:
        return CurveFamily(curves, s)
    except CurveError as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_family(path, s: FiniteMetricMeasureSpace) -> CurveFamily:
    return family_from_json(load_json(path), s, str(path))


# ---------------------------------------------------------------- output

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _emit(obj, out: list) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            out.append(json.dumps(key, ensure_ascii=False) + ": ")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _emit(v, out)
        out.append("]")
    elif isinstance(obj, float):
        if math.isinf(obj):
            out.append('"inf"' if obj > 0 else '"-inf"')
        elif math.isnan(obj):
            out.append('"nan"')
        else:
            out.append(format(obj, ".17g"))
    else:
        out.append(json.dumps(obj, ensure_ascii=False))


def dumps(obj) -> str:
    """JSON with sorted keys, floats in 17 significant digits and ``"inf"`` sentinels."""
    out: list = []
    _emit(_plain(obj), out)
    return "".join(out)
