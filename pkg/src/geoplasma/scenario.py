"""Scenario files: validation and construction of the pipeline objects.

A scenario is a single JSON document.  Field expressions are strings in
the expression mini-language over the framework's coordinate names:
``x1..xn`` (base manifold), plus ``y1..yn`` on the tangent bundle, or
``t1..tp`` and ``x1_1..xn_p`` on the jet space.  Unknown keys are
rejected.  See the README for the full schema.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import ExprError, ScenarioError
from .lagrange import (
    GeneralizedLagrangeSpace,
    LagrangeFluidState,
    canonical_nonlinear_connection,
    zero_connection,
)
from .models import (
    build_bsml,
    build_edml,
    build_grgml,
    build_rgogml,
    stock_metric,
)
from .multitime import MultiTimeFluidState, MultiTimeSpace, zero_jet_connection
from .riemann import ElectromagneticPair, FluidState, SemiRiemannianSpace
from .tensor_core import MetricField, TwoFormField, scalar_field

FRAMEWORKS = ("riemann", "lagrange", "multitime")

_TOP_KEYS = {
    "framework", "n", "p", "c", "model", "metric", "h_metric", "connection",
    "pressure", "density", "velocity", "em", "eval", "sheet",
}

_STOCK_NAMES = {"flat", "polar", "conformal"}
_MODEL_NAMES = {"grgml", "rgogml", "edml", "bsml"} | _STOCK_NAMES


def coordinate_names(framework, n, p=None):
    if framework == "riemann":
        return [f"x{i + 1}" for i in range(n)]
    if framework == "lagrange":
        return [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    names = [f"t{a + 1}" for a in range(p)] + [f"x{i + 1}" for i in range(n)]
    for i in range(n):
        for a in range(p):
            names.append(f"x{i + 1}_{a + 1}")
    return names


def scenario_hash(raw_bytes):
    return hashlib.sha256(raw_bytes).hexdigest()


def _field(source, names, label):
    if not isinstance(source, str):
        raise ScenarioError(f"{label} must be an expression string")
    try:
        return scalar_field(source, names)
    except ExprError as err:
        raise ScenarioError(f"{label}: {err}") from err


def _metric_from_rows(dim, rows, names, label):
    if not isinstance(rows, list) or len(rows) != dim:
        raise ScenarioError(f"{label} needs {dim} upper-triangle rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim - i:
            raise ScenarioError(
                f"{label} row {i + 1} must list entries (i, i)..(i, {dim}); "
                f"expected {dim - i} entries, got {len(row) if isinstance(row, list) else 'non-list'}"
            )
    try:
        return MetricField.from_exprs(dim, rows, names)
    except ExprError as err:
        raise ScenarioError(f"{label}: {err}") from err


def _two_form_from_rows(dim, rows, names, label):
    if not isinstance(rows, list) or len(rows) != dim:
        raise ScenarioError(
            f"{label} needs {dim} strictly-upper rows (row i lists entries j > i); "
            "a full square matrix is not accepted, antisymmetry is implied"
        )
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim - i - 1:
            raise ScenarioError(
                f"{label} row {i + 1} must have {dim - i - 1} entries, got "
                f"{len(row) if isinstance(row, list) else 'non-list'}"
            )
    try:
        return TwoFormField.from_exprs(dim, rows, names)
    except ExprError as err:
        raise ScenarioError(f"{label}: {err}") from err


def _spatial_metric(config, n, names, label="metric"):
    """Spatial metric from a model name or inline rows (over ``names``)."""
    if isinstance(config, dict):
        name = config.get("name")
        if name not in _STOCK_NAMES:
            raise ScenarioError(f"{label}: unknown stock metric {name!r}")
        return stock_metric(name, n, names, config.get("params"))
    return _metric_from_rows(n, config, names, label)


@dataclass
class Scenario:
    framework: str
    n: int
    p: int
    c: float
    names: list
    space: object
    state: object
    em: object  # riemann only
    eval_spec: dict
    sheet_spec: object
    model_name: str
    hash: str
    raw: dict


def load_scenario(path):
    try:
        with open(path, "rb") as fh:
            raw_bytes = fh.read()
    except OSError as err:
        raise ScenarioError(f"cannot read scenario file: {err}") from err
    try:
        raw = json.loads(raw_bytes)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"scenario is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    scenario = build_scenario(raw)
    scenario.hash = scenario_hash(raw_bytes)
    return scenario


def build_scenario(raw):
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    framework = raw.get("framework")
    if framework not in FRAMEWORKS:
        raise ScenarioError(f"framework must be one of {FRAMEWORKS}, got {framework!r}")
    n = raw.get("n")
    if not isinstance(n, int) or not 1 <= n <= 8:
        raise ScenarioError("n must be an integer in 1..8")
    p = raw.get("p", 1)
    if framework == "multitime":
        if not isinstance(p, int) or not 1 <= p <= 2:
            raise ScenarioError("p must be 1 or 2 for the multitime framework")
    elif "p" in raw:
        raise ScenarioError("key 'p' is only valid for the multitime framework")
    c = raw.get("c", 1.0)
    if not isinstance(c, (int, float)) or c <= 0:
        raise ScenarioError("c must be a positive number")
    c = float(c)

    names = coordinate_names(framework, n, p)
    if "pressure" not in raw or "density" not in raw:
        raise ScenarioError("scenario needs 'pressure' and 'density' expressions")
    pressure = _field(raw["pressure"], names, "pressure")
    density = _field(raw["density"], names, "density")
    em_H, em_G = _parse_em(raw.get("em"), n, names)

    eval_spec = raw.get("eval", {})
    if not isinstance(eval_spec, dict):
        raise ScenarioError("'eval' must be an object")
    unknown = set(eval_spec) - {"points", "box", "count", "seed", "grid"}
    if unknown:
        raise ScenarioError(f"unknown eval keys: {sorted(unknown)}")

    sheet_spec = raw.get("sheet")
    if sheet_spec is not None and framework != "multitime":
        raise ScenarioError("key 'sheet' is only valid for the multitime framework")

    model_name = None
    if "model" in raw:
        model = raw["model"]
        if not isinstance(model, dict) or "name" not in model:
            raise ScenarioError("'model' must be an object with a 'name'")
        unknown = set(model) - {"name", "params"}
        if unknown:
            raise ScenarioError(f"unknown model keys: {sorted(unknown)}")
        model_name = model["name"]
        if model_name not in _MODEL_NAMES:
            raise ScenarioError(f"unknown model name {model_name!r}")

    if framework == "riemann":
        space = _build_riemann_space(raw, n, names)
        if "velocity" not in raw:
            raise ScenarioError("riemann scenarios need a 'velocity' expression list")
        vel = raw["velocity"]
        if not isinstance(vel, list) or len(vel) != n:
            raise ScenarioError(f"'velocity' must list {n} expressions")
        velocity = tuple(_field(v, names, f"velocity[{i}]") for i, v in enumerate(vel))
        state = FluidState(pressure, density, c, velocity)
        em = ElectromagneticPair(em_H, em_G)
        if "connection" in raw or "h_metric" in raw:
            raise ScenarioError("'connection'/'h_metric' are not riemann keys")
        return Scenario(framework, n, 1, c, names, space, state, em,
                        eval_spec, sheet_spec, model_name, "", raw)

    if "velocity" in raw:
        raise ScenarioError("'velocity' is only valid for the riemann framework")

    if framework == "lagrange":
        space = _build_lagrange_space(raw, n, names)
        state = LagrangeFluidState(pressure, density, c, em_H, em_G)
        if "h_metric" in raw:
            raise ScenarioError("'h_metric' is not a lagrange key")
        return Scenario(framework, n, 1, c, names, space, state, None,
                        eval_spec, sheet_spec, model_name, "", raw)

    space = _build_multitime_space(raw, n, p, names)
    state = MultiTimeFluidState(pressure, density, c, em_H, em_G)
    return Scenario(framework, n, p, c, names, space, state, None,
                    eval_spec, sheet_spec, model_name, "", raw)


def _parse_em(config, n, names):
    if config is None:
        return TwoFormField.zero(n), TwoFormField.zero(n)
    if not isinstance(config, dict):
        raise ScenarioError("'em' must be an object with 'H' and optionally 'G'")
    unknown = set(config) - {"H", "G"}
    if unknown:
        raise ScenarioError(f"unknown em keys: {sorted(unknown)}")
    if "H" not in config:
        raise ScenarioError("'em' needs an 'H' entry")
    H = _two_form_from_rows(n, config["H"], names, "em.H")
    g_cfg = config.get("G", "self-dual")
    if g_cfg == "self-dual":
        G = H.negated()
    else:
        G = _two_form_from_rows(n, g_cfg, names, "em.G")
    return H, G


def _build_riemann_space(raw, n, names):
    if "model" in raw:
        model = raw["model"]
        if model["name"] not in _STOCK_NAMES:
            raise ScenarioError(
                f"model {model['name']!r} is not available for the riemann framework"
            )
        phi = stock_metric(model["name"], n, names, model.get("params"))
    elif "metric" in raw:
        phi = _metric_from_rows(n, raw["metric"], names, "metric")
    else:
        raise ScenarioError("riemann scenarios need 'metric' or 'model'")
    return SemiRiemannianSpace(n, phi)


def _connection_lagrange(raw, g, n, names):
    config = raw.get("connection", "canonical")
    if config == "canonical":
        return canonical_nonlinear_connection(g, n)
    if config == "zero":
        return zero_connection(n)
    if not isinstance(config, list) or len(config) != n or any(
        not isinstance(row, list) or len(row) != n for row in config
    ):
        raise ScenarioError("'connection' must be 'canonical', 'zero' or an n x n expression matrix")
    fields = [
        [_field(config[i][j], names, f"connection[{i}][{j}]") for j in range(n)]
        for i in range(n)
    ]

    def fn(coords):
        return [[f(coords) for f in row] for row in fields]

    return fn


def _build_lagrange_space(raw, n, names):
    if "model" in raw:
        model = raw["model"]
        if model["name"] not in _STOCK_NAMES:
            raise ScenarioError(
                f"model {model['name']!r} is not available for the lagrange framework"
            )
        g = stock_metric(model["name"], n, names, model.get("params"))
    elif "metric" in raw:
        g = _metric_from_rows(n, raw["metric"], names, "metric")
    else:
        raise ScenarioError("lagrange scenarios need 'metric' or 'model'")
    return GeneralizedLagrangeSpace(n, g, _connection_lagrange(raw, g, n, names))


def _connection_multitime(raw, g, p, n, names):
    from .multitime import fiber_index

    config = raw.get("connection", "canonical")
    if config == "zero":
        return zero_jet_connection(p, n)
    if config == "canonical":
        # generalized Christoffel symbols of g in the spatial directions,
        # contracted with the fiber coordinates
        from .dual import seed
        from .tensor_core import christoffel_from, eval_matrix_jets, invert_symmetric

        def fn(coords):
            cj, ctx = seed(list(coords), seeds=range(p, p + n))
            gj = eval_matrix_jets(g, cj, ctx)
            g0 = [[e.value for e in row] for row in gj]
            ginv0 = invert_symmetric(g0)
            dgx = [
                [[gj[i][j].d(k) for j in range(n)] for i in range(n)]
                for k in range(n)
            ]
            gamma = christoffel_from(ginv0, dgx)
            out = [[[0.0] * n for _ in range(p)] for _ in range(n)]
            for i in range(n):
                for a in range(p):
                    for j in range(n):
                        out[i][a][j] = sum(
                            gamma[i][j][m] * coords[fiber_index(p, n, m, a)]
                            for m in range(n)
                        )
            return out

        return fn
    if not isinstance(config, list) or len(config) != n:
        raise ScenarioError(
            "'connection' must be 'canonical', 'zero' or an n x p x n expression array"
        )
    fields = []
    for i, plane in enumerate(config):
        if not isinstance(plane, list) or len(plane) != p or any(
            not isinstance(row, list) or len(row) != n for row in plane
        ):
            raise ScenarioError(f"connection[{i}] must be a p x n expression matrix")
        fields.append([
            [_field(plane[a][j], names, f"connection[{i}][{a}][{j}]") for j in range(n)]
            for a in range(p)
        ])

    def fn(coords):
        return [[[f(coords) for f in row] for row in plane] for plane in fields]

    return fn


def _build_multitime_space(raw, n, p, names):
    tnames = names[:p]
    xnames = names[p:p + n]
    if "h_metric" not in raw:
        raise ScenarioError("multitime scenarios need 'h_metric'")
    h = _metric_from_rows(p, raw["h_metric"], tnames, "h_metric")

    if "model" in raw:
        model = raw["model"]
        name = model["name"]
        params = model.get("params", {})
        if not isinstance(params, dict):
            raise ScenarioError("model 'params' must be an object")
        if name in _STOCK_NAMES:
            g = stock_metric(name, n, names, params or None)
            space = MultiTimeSpace(p, n, h, g, _connection_multitime(raw, g, p, n, names))
            return space
        known = {
            "grgml": {"phi", "sigma"},
            "rgogml": {"phi", "refractive_index", "X"},
            "edml": {"phi", "U", "Phi"},
            "bsml": {"phi"},
        }[name]
        unknown = set(params) - known
        if unknown:
            raise ScenarioError(f"unknown params for model {name!r}: {sorted(unknown)}")
        if "phi" not in params:
            raise ScenarioError(f"model {name!r} needs a 'phi' base metric")
        phi = _spatial_metric(params["phi"], n, xnames, "model.params.phi")
        if "connection" in raw and raw["connection"] != "canonical":
            raise ScenarioError(f"model {name!r} fixes its own connection")
        if name == "bsml":
            return build_bsml(h, phi, p, n)
        if name == "grgml":
            if "sigma" not in params:
                raise ScenarioError("grgml needs a 'sigma' expression")
            return build_grgml(h, _field(params["sigma"], names, "sigma"), phi, p, n)
        if name == "rgogml":
            for key in ("refractive_index", "X"):
                if key not in params:
                    raise ScenarioError(f"rgogml needs {key!r}")
            X = params["X"]
            if not isinstance(X, list) or len(X) != p:
                raise ScenarioError(f"'X' must list {p} expressions over t")
            return build_rgogml(
                h, phi,
                _field(params["refractive_index"], names, "refractive_index"),
                [_field(x, tnames, f"X[{mu}]") for mu, x in enumerate(X)],
                p, n,
            )
        # edml
        U = params.get("U")
        if not isinstance(U, list) or len(U) != n or any(
            not isinstance(row, list) or len(row) != p for row in U
        ):
            raise ScenarioError("'U' must be an n x p expression matrix over (t, x)")
        Phi = params.get("Phi", "0")
        return build_edml(
            h, phi,
            [[_field(U[i][a], names, f"U[{i}][{a}]") for a in range(p)] for i in range(n)],
            _field(Phi, names, "Phi"),
            p, n,
        )

    if "metric" not in raw:
        raise ScenarioError("multitime scenarios need 'metric' or 'model'")
    g = _metric_from_rows(n, raw["metric"], names, "metric")
    return MultiTimeSpace(p, n, h, g, _connection_multitime(raw, g, p, n, names))


def evaluation_points(scenario, seed=None, count=None):
    """Evaluation coordinates from the scenario's eval block.

    Returns (points, seed_used); the seed is recorded in outputs for
    reproducibility.  Explicit points are validated against the
    coordinate dimension; box sampling draws uniformly with the given
    64-bit seed; a grid spec produces the lattice nodes in row-major
    order.
    """
    spec = scenario.eval_spec
    dim = len(scenario.names)
    if "points" in spec:
        pts = spec["points"]
        if not isinstance(pts, list) or not pts:
            raise ScenarioError("'eval.points' must be a non-empty list")
        for pt in pts:
            if not isinstance(pt, list) or len(pt) != dim:
                raise ScenarioError(
                    f"evaluation points must have {dim} coordinates ({scenario.names})"
                )
        return [list(map(float, pt)) for pt in pts], 0
    if "grid" in spec:
        grid = spec["grid"]
        lo, hi, shape = _box_spec(grid, dim, need_shape=True)
        axes = [np.linspace(lo[i], hi[i], shape[i]) for i in range(dim)]
        pts = [list(xs) for xs in itertools.product(*axes)]
        return pts, 0
    if "box" in spec:
        lo, hi, _ = _box_spec(spec["box"], dim, need_shape=False)
        used_seed = seed if seed is not None else int(spec.get("seed", 0))
        used_count = count if count is not None else int(spec.get("count", 20))
        if used_count < 1:
            raise ScenarioError("eval count must be positive")
        rng = np.random.default_rng(used_seed)
        return [list(rng.uniform(lo, hi)) for _ in range(used_count)], used_seed
    raise ScenarioError("'eval' needs 'points', 'box' or 'grid'")


def _box_spec(config, dim, need_shape):
    if not isinstance(config, dict):
        raise ScenarioError("box/grid spec must be an object")
    allowed = {"min", "max"} | ({"shape"} if need_shape else set())
    unknown = set(config) - allowed
    if unknown:
        raise ScenarioError(f"unknown box keys: {sorted(unknown)}")
    try:
        lo = [float(v) for v in config["min"]]
        hi = [float(v) for v in config["max"]]
    except (KeyError, TypeError, ValueError) as err:
        raise ScenarioError(f"box needs numeric 'min'/'max' lists: {err}") from err
    if len(lo) != dim or len(hi) != dim:
        raise ScenarioError(f"box bounds must have {dim} coordinates")
    if any(h <= l for l, h in zip(lo, hi)):
        raise ScenarioError("box max must exceed min in every coordinate")
    shape = None
    if need_shape:
        shape = config.get("shape")
        if not isinstance(shape, list) or len(shape) != dim or any(
            not isinstance(s, int) or s < 1 for s in shape
        ):
            raise ScenarioError(f"grid 'shape' must list {dim} positive integers")
    return np.array(lo), np.array(hi), shape


def sheet_axes_and_values(scenario, refine=1):
    """Expression sheet evaluated on its grid: (axes, values array).

    ``refine`` multiplies the node count per axis (shape 2k-1 for a
    doubling) so convergence studies reuse one scenario.
    """
    spec = scenario.sheet_spec
    if spec is None:
        raise ScenarioError("scenario has no 'sheet' block")
    if not isinstance(spec, dict):
        raise ScenarioError("'sheet' must be an object")
    unknown = set(spec) - {"x", "grid"}
    if unknown:
        raise ScenarioError(f"unknown sheet keys: {sorted(unknown)}")
    p, n = scenario.p, scenario.n
    exprs = spec.get("x")
    if not isinstance(exprs, list) or len(exprs) != n:
        raise ScenarioError(f"'sheet.x' must list {n} expressions over t1..t{p}")
    tnames = scenario.names[:p]
    fields = [_field(e, tnames, f"sheet.x[{i}]") for i, e in enumerate(exprs)]
    grid = spec.get("grid")
    lo, hi, shape = _box_spec(grid, p, need_shape=True)
    shape = [(s - 1) * refine + 1 for s in shape]
    if any(s < 3 for s in shape):
        raise ScenarioError("sheet grid needs at least 3 nodes per axis")
    axes = tuple(np.linspace(lo[a], hi[a], shape[a]) for a in range(p))
    values = np.empty(tuple(shape) + (n,))
    for idx in np.ndindex(*shape):
        t = [axes[a][idx[a]] for a in range(p)]
        for i in range(n):
            values[idx + (i,)] = fields[i](t)
    return axes, values, fields
