"""Structured-text (JSON) input and output formats.

Connection document::

    {"n": 2, "grid": [16, 16], "r": 1, "s": 1, "t": [0, 0.5, 1, 2],
     "theta": {"components": {"0": [{"freq": [0, 0], "matrix": [[[re, im], ...], ...]}]}},
     "L": {...same layout...}                       # or
     "morphism": {"u": [{"freq": [...], "matrix": s x r}], "metric0": r x r, "metric1": s x s}}

Complex numbers are ``[re, im]`` pairs (a bare number is read as real).
Form components are keyed by comma-separated 0-based axes, ``""`` for
0-forms.

Holonomy document::

    {"n": 3, "rank": 2, "matrices": [[z_00, z_01, z_10, z_11], ...]}   # row-major, one per axis

Total class document (form level, exact)::

    {"n": 4, "classes": {"1": {"0,1": "1/2", "2,3": 1}, "2": {"0,1,2,3": -3}}}

The ``{"n", "level", "terms"}`` layout written by :func:`dump_total_class`
is accepted as well.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .charclasses import CHARACTER, FORM, CohomologyClass, FlatBundleClassData, FlatCharacter, TotalClass
from .formcalc import AliasingError, ModeSeries, TorusGrid
from .superalgebra import Parity
from .superconnection import Morphism, SuperConnection, build_L_from_morphism


class SpecError(ValueError):
    """Malformed input document."""


def cplx_in(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise SpecError(f"not a complex number: {v!r}")


def cplx_out(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def matrix_in(rows) -> np.ndarray:
    return np.array([[cplx_in(z) for z in row] for row in rows], dtype=complex).reshape(len(rows), -1)


def matrix_out(a: np.ndarray) -> list[list[list[float]]]:
    return [[cplx_out(z) for z in row] for row in np.asarray(a)]


def index_key(I) -> str:
    return ",".join(str(i) for i in I)


def parse_index(key: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in key.split(",")) if key else ()
    except ValueError:
        raise SpecError(f"bad multi-index key {key!r}") from None


def _require(obj: Mapping, key: str):
    if key not in obj:
        raise SpecError(f"missing field {key!r}")
    return obj[key]


def load_connection(obj: Mapping, grid_override: tuple[int, ...] | None = None) -> tuple[SuperConnection, list[float]]:
    n = int(_require(obj, "n"))
    r, s = int(_require(obj, "r")), int(_require(obj, "s"))
    pts = grid_override or tuple(int(p) for p in obj.get("grid", [16] * n))
    if len(pts) != n:
        raise SpecError(f"grid has {len(pts)} axes, n = {n}")
    grid = TorusGrid(pts)
    t_values = [float(t) for t in obj.get("t", [1.0])]

    def field(key):
        doc = dict(obj[key])
        doc.setdefault("n", n)
        doc.setdefault("ranks", [r, s])
        modes = ModeSeries.from_json(doc)
        # grading is checked by SuperConnection with a specific message
        return modes.synthesize(grid, parity=Parity.ODD, check_parity=False)

    theta = field("theta") if "theta" in obj else None
    if "L" in obj and "morphism" in obj:
        raise SpecError("give either 'L' or 'morphism', not both")
    if "L" in obj:
        L = field("L")
    elif "morphism" in obj:
        L = build_L_from_morphism(load_morphism(obj["morphism"], grid, r, s), grid)
    else:
        L = None
    base = SuperConnection.trivial(grid, (r, s), t_values[0])
    c = SuperConnection(
        grid, (r, s), theta if theta is not None else base.theta, L if L is not None else base.L, t_values[0]
    )
    return c, t_values


def load_morphism(obj: Mapping, grid: TorusGrid, r: int, s: int) -> Morphism:
    u_doc = _require(obj, "u")
    if isinstance(u_doc, list) and u_doc and isinstance(u_doc[0], Mapping):
        xs = grid.coords()
        u = np.zeros(grid.shape + (s, r), dtype=complex)
        for mode in u_doc:
            freq = tuple(int(f) for f in mode["freq"])
            if len(freq) != grid.dim:
                raise SpecError(f"frequency {freq} has wrong length")
            for axis, f in enumerate(freq):
                if abs(f) > grid.band_limit(axis):
                    raise AliasingError(f"frequency {f} on axis {axis} exceeds band limit {grid.band_limit(axis)}")
            M = matrix_in(mode["matrix"])
            if M.shape != (s, r):
                raise SpecError(f"u modes must be {s}x{r}")
            u = u + np.exp(2j * np.pi * sum(k * x for k, x in zip(freq, xs)))[..., None, None] * M
    else:
        u = matrix_in(u_doc)
        if u.shape != (s, r):
            raise SpecError(f"u must be {s}x{r}")
    g0 = matrix_in(obj["metric0"]) if "metric0" in obj else None
    g1 = matrix_in(obj["metric1"]) if "metric1" in obj else None
    return Morphism(u, g0, g1)


def load_holonomy(obj: Mapping) -> FlatBundleClassData:
    n = int(_require(obj, "n"))
    rank = int(_require(obj, "rank"))
    mats = _require(obj, "matrices")
    if len(mats) != n:
        raise SpecError(f"expected {n} holonomy matrices, got {len(mats)}")
    out = []
    for flat in mats:
        if len(flat) != rank * rank:
            raise SpecError(f"holonomy matrix needs {rank * rank} entries")
        out.append(np.array([cplx_in(z) for z in flat], dtype=complex).reshape(rank, rank))
    return FlatBundleClassData(rank, tuple(out))


def dump_holonomy(b: FlatBundleClassData) -> dict:
    return {"n": b.n, "rank": b.rank, "matrices": [[cplx_out(z) for z in h.ravel()] for h in b.holonomy]}


def _exact(v):
    if isinstance(v, bool):
        raise SpecError("boolean is not a coefficient")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            raise SpecError(f"bad rational {v!r}") from None
    if isinstance(v, float):
        return Fraction(v)
    raise SpecError(f"bad coefficient {v!r}")


def load_total_class(obj: Mapping) -> TotalClass:
    n = int(_require(obj, "n"))
    if "terms" in obj:
        # layout written by dump_total_class
        if obj.get("level", FORM) != FORM:
            raise SpecError("only form-level total classes can be loaded")
        classes = {key[1:]: term["coefficients"] for key, term in obj["terms"].items()}
    else:
        classes = obj.get("classes", {})
    N = max((int(k) for k in classes), default=0)
    terms: list[Any] = [1]
    for k in range(1, N + 1):
        table = classes.get(str(k), {})
        terms.append(CohomologyClass(n, {parse_index(key): _exact(v) for key, v in table.items()}))
    try:
        return TotalClass(n, FORM, terms)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def _coef_out(c):
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else c.numerator
    return cplx_out(c)


def dump_total_class(c: TotalClass) -> dict:
    out = {}
    for k in range(1, c.N + 1):
        term = c[k]
        value = term.value if c.level == CHARACTER else term
        degree = term.degree if c.level == CHARACTER else 2 * k
        out[f"c{k}"] = {
            "degree": degree,
            "coefficients": {index_key(I): _coef_out(v) for I, v in value.coeffs.items()},
        }
    return {"n": c.n, "level": c.level, "terms": out}


def dump_character(x: FlatCharacter) -> dict:
    return {"degree": x.degree, "coefficients": {index_key(I): cplx_out(v) for I, v in x.value.coeffs.items()}}


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
