"""Shared builders and independent oracles for the test suite.

Oracles here are deliberately written against numpy/einsum or finite
differences so they do not share code paths with the package internals
they check.
"""

import numpy as np

from geoplasma.riemann import ElectromagneticPair, FluidState, SemiRiemannianSpace
from geoplasma.tensor_core import MetricField, TwoFormField, constant_field, scalar_field


def xnames(n):
    return [f"x{i + 1}" for i in range(n)]


def flat_space(n):
    rows = [["1" if j == 0 else "0" for j in range(n - i)] for i in range(n)]
    return SemiRiemannianSpace(n, MetricField.from_exprs(n, rows, xnames(n)))


def polar_space():
    # diag(1, r^2) with r = x1
    return SemiRiemannianSpace(
        2, MetricField.from_exprs(2, [["1", "0"], ["x1^2"]], xnames(2))
    )


def conformal_space(n, coeffs):
    names = xnames(n)
    sigma = " + ".join(f"{c!r}*{nm}" for c, nm in zip(coeffs, names))
    rows = []
    for i in range(n):
        row = []
        for j in range(i, n):
            row.append(f"exp(2*({sigma}))" if i == j else "0")
        rows.append(row)
    return SemiRiemannianSpace(n, MetricField.from_exprs(n, rows, names))


def zero_em(n):
    return ElectromagneticPair(TwoFormField.zero(n), TwoFormField.zero(n))


def const_state(n, p=0.2, rho=1.0, c=1.0, v=None):
    if v is None:
        v = [1.0] + [0.0] * (n - 1)
    return FluidState(
        constant_field(p), constant_field(rho), c,
        tuple(constant_field(vi) for vi in v),
    )


def _wave(rng, names, amp, base=0.0):
    """Random smooth bounded expression a + amp*sin(k.x + phase)."""
    ks = rng.uniform(0.4, 1.4, size=len(names))
    phase = float(rng.uniform(0, 6.28))
    arg = " + ".join(f"{float(k)!r}*{nm}" for k, nm in zip(ks, names))
    return f"{float(base)!r} + {float(amp)!r}*sin({arg} + {phase!r})"


def random_metric_rows(rng, dim, names, diag_base=1.2, diag_amp=0.2, off_amp=None):
    """Diagonally dominant symmetric expression matrix (upper-tri rows)."""
    if off_amp is None:
        off_amp = 0.3 / max(1, dim - 1)
    rows = []
    for i in range(dim):
        row = []
        for j in range(i, dim):
            if i == j:
                row.append(_wave(rng, names, diag_amp, base=diag_base))
            else:
                row.append(_wave(rng, names, off_amp))
        rows.append(row)
    return rows


def random_two_form_rows(rng, dim, names, amp=0.3):
    return [[_wave(rng, names, amp) for _ in range(dim - i - 1)] for i in range(dim)]


def random_riemann_scenario(rng, n):
    """Smooth expression-backed scenario with safe invertibility margins."""
    names = xnames(n)
    space = SemiRiemannianSpace(
        n, MetricField.from_exprs(n, random_metric_rows(rng, n, names), names)
    )
    em = ElectromagneticPair(
        TwoFormField.from_exprs(n, random_two_form_rows(rng, n, names), names),
        TwoFormField.from_exprs(n, random_two_form_rows(rng, n, names), names),
    )
    state = FluidState(
        scalar_field(_wave(rng, names, 0.1, base=0.4), names),
        scalar_field(_wave(rng, names, 0.2, base=1.1), names),
        1.0,
        tuple(
            scalar_field(_wave(rng, names, 0.25, base=1.0), names) for _ in range(n)
        ),
    )
    box = (np.full(n, -0.8), np.full(n, 0.8))
    return space, state, em, box


def sample_box(rng, box, count):
    lo, hi = box
    return [list(rng.uniform(lo, hi)) for _ in range(count)]


def xynames(n):
    return [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]


def random_lagrange_scenario(rng, n):
    """Expression-backed tangent-bundle scenario, fiber-dependent fields."""
    from geoplasma.lagrange import GeneralizedLagrangeSpace, LagrangeFluidState

    names = xynames(n)
    g = MetricField.from_exprs(n, random_metric_rows(rng, n, names), names)
    # smooth inline nonlinear connection, linear in the fiber
    nexprs = [
        [
            " + ".join(
                f"{float(rng.uniform(-0.15, 0.15))!r}*y{m + 1}*cos({float(rng.uniform(0.3, 1.0))!r}*x{(j % n) + 1})"
                for m in range(n)
            )
            for j in range(n)
        ]
        for _ in range(n)
    ]
    nfields = [[scalar_field(e, names) for e in row] for row in nexprs]

    def N_fn(coords):
        return [[f(coords) for f in row] for row in nfields]

    space = GeneralizedLagrangeSpace(n, g, N_fn)
    state = LagrangeFluidState(
        scalar_field(_wave(rng, names, 0.1, base=0.4), names),
        scalar_field(_wave(rng, names, 0.2, base=1.1), names),
        1.0,
        TwoFormField.from_exprs(n, random_two_form_rows(rng, n, names), names),
        TwoFormField.from_exprs(n, random_two_form_rows(rng, n, names), names),
    )
    # fiber part sampled away from zero so eps^2 stays positive
    lo = np.concatenate([np.full(n, -0.8), np.full(n, 0.6)])
    hi = np.concatenate([np.full(n, 0.8), np.full(n, 1.4)])
    box = (lo, hi)
    return space, state, box


def jetnames(p, n):
    names = [f"t{a + 1}" for a in range(p)] + [f"x{i + 1}" for i in range(n)]
    for i in range(n):
        for a in range(p):
            names.append(f"x{i + 1}_{a + 1}")
    return names


def random_multitime_scenario(rng, p, n):
    """Expression-backed jet-space scenario with fiber/time dependence."""
    from geoplasma.multitime import MultiTimeSpace, MultiTimeFluidState

    tnm = [f"t{a + 1}" for a in range(p)]
    names = jetnames(p, n)
    h = MetricField.from_exprs(
        p, random_metric_rows(rng, p, tnm, diag_base=1.3, diag_amp=0.2, off_amp=0.1),
        tnm,
    )
    g = MetricField.from_exprs(n, random_metric_rows(rng, n, names), names)
    nexprs = [
        [
            [_wave(rng, names, 0.12) for _ in range(n)]
            for _ in range(p)
        ]
        for _ in range(n)
    ]
    nfields = [
        [[scalar_field(e, names) for e in row] for row in plane]
        for plane in nexprs
    ]

    def N_fn(coords):
        return [[[f(coords) for f in row] for row in plane] for plane in nfields]

    space = MultiTimeSpace(p, n, h, g, N_fn)
    state = MultiTimeFluidState(
        scalar_field(_wave(rng, names, 0.1, base=0.4), names),
        scalar_field(_wave(rng, names, 0.2, base=1.1), names),
        1.0,
        TwoFormField.from_exprs(n, random_two_form_rows(rng, n, names), names),
        TwoFormField.from_exprs(n, random_two_form_rows(rng, n, names), names),
    )
    lo = np.concatenate([np.full(p, -0.5), np.full(n, -0.8), np.full(n * p, 0.6)])
    hi = np.concatenate([np.full(p, 0.5), np.full(n, 0.8), np.full(n * p, 1.4)])
    return space, state, (lo, hi)


def to_multitime_names(source, n):
    """Rewrite tangent-bundle fiber names y_i as single-time jet names."""
    for i in range(n, 0, -1):
        source = source.replace(f"y{i}", f"x{i}_1")
    return source


def paired_lagrange_multitime(rng, n):
    """Matching tangent-bundle and single-time jet-space scenarios."""
    from geoplasma.lagrange import GeneralizedLagrangeSpace, LagrangeFluidState
    from geoplasma.multitime import MultiTimeSpace, MultiTimeFluidState

    lag_names = xynames(n)
    mt_names = jetnames(1, n)
    rows = random_metric_rows(rng, n, lag_names)
    h_rows = random_two_form_rows(rng, n, lag_names)
    g_rows_em = random_two_form_rows(rng, n, lag_names)
    p_expr = _wave(rng, lag_names, 0.1, base=0.4)
    rho_expr = _wave(rng, lag_names, 0.2, base=1.1)
    nexprs = [
        [
            " + ".join(
                f"{float(rng.uniform(-0.15, 0.15))!r}*y{m + 1}*cos(x{(j % n) + 1})"
                for m in range(n)
            )
            for j in range(n)
        ]
        for _ in range(n)
    ]

    g_lag = MetricField.from_exprs(n, rows, lag_names)
    nf_lag = [[scalar_field(e, lag_names) for e in row] for row in nexprs]
    space_lag = GeneralizedLagrangeSpace(
        n, g_lag, lambda coords: [[f(coords) for f in row] for row in nf_lag]
    )
    state_lag = LagrangeFluidState(
        scalar_field(p_expr, lag_names),
        scalar_field(rho_expr, lag_names),
        1.0,
        TwoFormField.from_exprs(n, h_rows, lag_names),
        TwoFormField.from_exprs(n, g_rows_em, lag_names),
    )

    mt = lambda s: to_multitime_names(s, n)
    rows_mt = [[mt(e) for e in row] for row in rows]
    h_mt = MetricField.from_exprs(1, [["1"]], ["t1"])
    g_mt = MetricField.from_exprs(n, rows_mt, mt_names)
    nf_mt = [[scalar_field(mt(e), mt_names) for e in row] for row in nexprs]

    def N_mt_fn(coords):
        return [[[nf_mt[i][j](coords) for j in range(n)]] for i in range(n)]

    space_mt = MultiTimeSpace(1, n, h_mt, g_mt, N_mt_fn)
    state_mt = MultiTimeFluidState(
        scalar_field(mt(p_expr), mt_names),
        scalar_field(mt(rho_expr), mt_names),
        1.0,
        TwoFormField.from_exprs(n, [[mt(e) for e in row] for row in h_rows], mt_names),
        TwoFormField.from_exprs(n, [[mt(e) for e in row] for row in g_rows_em], mt_names),
    )
    return space_lag, state_lag, space_mt, state_mt


def paired_riemann_lagrange(rng, n):
    """A fiber-independent tangent-bundle scenario and its base counterpart.

    Returns (riemann space/state/em, lagrange space factory taking an N
    choice, lagrange state, box over x).
    """
    from geoplasma.lagrange import GeneralizedLagrangeSpace, LagrangeFluidState

    xnm = xnames(n)
    full = xynames(n)
    metric_rows = random_metric_rows(rng, n, xnm)
    h_rows = random_two_form_rows(rng, n, xnm)
    g_rows = random_two_form_rows(rng, n, xnm)
    p_expr = _wave(rng, xnm, 0.1, base=0.4)
    rho_expr = _wave(rng, xnm, 0.2, base=1.1)

    space_r = SemiRiemannianSpace(n, MetricField.from_exprs(n, metric_rows, xnm))
    em_r = ElectromagneticPair(
        TwoFormField.from_exprs(n, h_rows, xnm),
        TwoFormField.from_exprs(n, g_rows, xnm),
    )
    state_lag = LagrangeFluidState(
        scalar_field(p_expr, full),
        scalar_field(rho_expr, full),
        1.0,
        TwoFormField.from_exprs(n, h_rows, full),
        TwoFormField.from_exprs(n, g_rows, full),
    )
    g_lag = MetricField.from_exprs(n, metric_rows, full)

    def make_space(N_fn):
        return GeneralizedLagrangeSpace(n, g_lag, N_fn)

    def make_riemann_state(velocity):
        return FluidState(
            scalar_field(p_expr, xnm), scalar_field(rho_expr, xnm), 1.0, tuple(velocity)
        )

    box = (np.full(n, -0.8), np.full(n, 0.8))
    return space_r, em_r, make_riemann_state, make_space, state_lag, box


# -- independent oracles -----------------------------------------------------


def oracle_energy(phi, H, G):
    """Minkowski energy tensors via einsum, independent of the package."""
    phi = np.asarray(phi)
    H = np.asarray(H)
    G = np.asarray(G)
    phinv = np.linalg.inv(phi)
    Gup = np.einsum("rp,sq,pq->rs", phinv, phinv, G)
    hg = np.einsum("rs,rs->", H, Gup)
    E_low = 0.25 * phi * hg + np.einsum("rs,ir,js->ij", phinv, H, G)
    E_mix = phinv @ E_low
    return E_low, E_mix


def fd_christoffel(metric_field, x, step=1e-5):
    """Christoffel symbols with metric derivatives by central differences."""
    n = len(x)
    g0 = np.array(metric_field.matrix(list(x)))
    dg = np.empty((n, n, n))
    for k in range(n):
        up = list(x)
        dn = list(x)
        up[k] += step
        dn[k] -= step
        dg[k] = (np.array(metric_field.matrix(up)) - np.array(metric_field.matrix(dn))) / (2 * step)
    ginv = np.linalg.inv(g0)
    gamma = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                gamma[i][j][k] = 0.5 * sum(
                    ginv[i][m] * (dg[k][j][m] + dg[j][k][m] - dg[m][j][k])
                    for m in range(n)
                )
    return gamma


def polar_geodesic_endpoint(x0, v0, s):
    """Exact polar-coordinate geodesic via the Cartesian straight line."""
    r0, th0 = x0
    dr, dth = v0
    cx = np.array([r0 * np.cos(th0), r0 * np.sin(th0)])
    cv = np.array(
        [
            dr * np.cos(th0) - r0 * np.sin(th0) * dth,
            dr * np.sin(th0) + r0 * np.cos(th0) * dth,
        ]
    )
    # geodesic parameter s is Euclidean arclength / |cv|
    end = cx + cv * s
    r = np.hypot(end[0], end[1])
    th = np.arctan2(end[1], end[0])
    return np.array([r, th])
