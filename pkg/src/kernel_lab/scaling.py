"""Convergence experiments for scaled Bergman, spectral and heat kernels.

Each experiment walks a weight family phi_k = C_k * base + sum_j C_k^{gamma_j}
* pert_j through increasing k, rescales to unit curvature (z -> z / sqrt(C_k)),
blends the scaled weight into its quadratic model outside |z| = C_k^epsilon,
and compares Galerkin kernels of the blended weight against the closed-form
model kernel on a fixed grid.  Everything here is n = 1.

Reported errors are sup-norms over the same grid for every k; rates are least
squares slopes of log(error) against log(C_k) over the largest k values.  A
term of total order m in the weight scales as C_k^{gamma - m/2}, so any
perturbation with gamma < 1 and order >= 2 decays and the errors should
shrink; the fitted slope measures how fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .galerkin import (
    GalerkinSystem,
    GramConditioningError,
    _Weight1D,
    bergman_kernel_numeric,
    build_system,
    heat_kernel_numeric,
    holomorphic_subsystem,
    spectral_gap,
    spectral_projector_kernel,
)
from .model import ModelSpectrum, eval_model_bergman
from .weights import (
    ExtendedWeight,
    WeightFamily,
    WeightPolynomial,
    extend_weight,
    normalize_gauge,
    scale_weight,
)

DEFAULT_DEGREE = 30
DEFAULT_QUAD_ORDER = 44
DEFAULT_EPSILON = 1.0 / 7.0
DEFAULT_KS = tuple(range(1, 8))


def kernel_grid(points_per_axis: int = 3, radius: float = 1.5) -> np.ndarray:
    """Flat array of complex tensor-grid points with |z| <= radius."""
    if points_per_axis < 1:
        raise ValueError("need at least one point per axis")
    axis = np.linspace(-radius, radius, points_per_axis) / math.sqrt(2.0)
    if points_per_axis == 1:
        axis = np.zeros(1)
    return (axis[:, None] + 1j * axis[None, :]).ravel()


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Per-k sup-grid deviations of a scaled kernel from its model limit."""

    ks: tuple[int, ...]
    c_values: tuple[float, ...]
    errors: tuple[float, ...]
    ranks: tuple[int, ...] | None
    slope: float | None
    slope_residual: float | None
    grid: np.ndarray
    threshold_exponent: float | None = None
    failures: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])):
            raise ValueError("k values must be strictly increasing")
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be nonnegative")
        if len(self.c_values) != len(self.ks) or len(self.errors) != len(self.ks):
            raise ValueError("per-k fields must align with ks")


def fit_loglog(
    c_values, errors, points: int = 4
) -> tuple[float, float] | tuple[None, None]:
    """Slope and rms residual of log(error) vs log(C_k) over the largest C_k.

    Zero errors carry no rate information and are skipped; with fewer than two
    usable points the fit is undefined and (None, None) is returned.
    """
    pairs = [(c, e) for c, e in zip(c_values, errors) if e > 0.0]
    pairs = pairs[-points:]
    if len(pairs) < 2:
        return None, None
    x = np.log([c for c, _ in pairs])
    y = np.log([e for _, e in pairs])
    (slope, _), res, *_ = np.polyfit(x, y, 1, full=True)
    rms = math.sqrt(float(res[0]) / len(pairs)) if res.size else 0.0
    return float(slope), rms


def fit_exp_decay(ts, values) -> float | None:
    """Least-squares slope of log(value) against t; None with < 2 usable points."""
    pairs = [(t, v) for t, v in zip(ts, values) if v > 0.0]
    if len(pairs) < 2:
        return None
    x = np.asarray([t for t, _ in pairs], dtype=float)
    y = np.log([v for _, v in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _require_gauge_normal(family: WeightFamily) -> None:
    _, removed = normalize_gauge(family.base)
    if removed.coeffs:
        raise ValueError(
            "family base carries gauge terms (constant, linear or pure second"
            " order); apply normalize_gauge to the base first"
        )


def _extended(family: WeightFamily, k: int, epsilon: float) -> ExtendedWeight:
    return extend_weight(
        scale_weight(family, k), family.model_weight(), epsilon, family.c_value(k)
    )


def _model_matrix(spec: ModelSpectrum, q: int, grid: np.ndarray) -> np.ndarray:
    out = np.empty((grid.size, grid.size), dtype=complex)
    for i, z in enumerate(grid):
        for j, w in enumerate(grid):
            out[i, j] = eval_model_bergman(spec, q, z, w).value
    return out


def scaled_bergman_convergence(
    family: WeightFamily,
    ks: tuple[int, ...] = DEFAULT_KS,
    degree: int = DEFAULT_DEGREE,
    grid: np.ndarray | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> ConvergenceReport:
    """Sup-grid error of the scaled Bergman kernel against the model kernel.

    Matched signature only (n = 1, lambda > 0, q = 0): the model limit is the
    rank-one Gaussian kernel with value |lambda| / pi on the diagonal.  Ranks
    are not part of this report (the Bergman projector is used whole).
    """
    spec = family.model_spectrum()
    if spec.n != 1:
        raise ValueError("scaled Bergman convergence is implemented for n = 1")
    if spec.q0 != 0:
        raise ValueError("scaled Bergman convergence needs lambda > 0")
    _require_gauge_normal(family)
    pts = kernel_grid() if grid is None else np.asarray(grid, dtype=complex).ravel()
    model = _model_matrix(spec, 0, pts)

    kept: list[int] = []
    errors: list[float] = []
    failures: list[str] = []
    for k in ks:
        try:
            hol = holomorphic_subsystem(
                _extended(family, k, epsilon), degree, quad_order=quad_order
            )
        except GramConditioningError as err:
            failures.append(f"k={k}: {err}")
            continue
        kern = bergman_kernel_numeric(hol, pts, pts)
        kept.append(k)
        errors.append(float(np.abs(kern - model).max()))

    cs = tuple(family.c_value(k) for k in kept)
    slope, resid = fit_loglog(cs, errors)
    return ConvergenceReport(
        ks=tuple(kept),
        c_values=cs,
        errors=tuple(errors),
        ranks=None,
        slope=slope,
        slope_residual=resid,
        grid=pts,
        failures=tuple(failures),
    )


def _projector_selection(system: GalerkinSystem, c_scaled: float) -> np.ndarray:
    return system.eigenvalues <= max(c_scaled, system.zero_tolerance())


def vanishing_convergence(
    family: WeightFamily,
    ks: tuple[int, ...] = DEFAULT_KS,
    degree: int = DEFAULT_DEGREE,
    d: float = 1.0,
    grid: np.ndarray | None = None,
    *,
    q: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> ConvergenceReport:
    """Rank and sup-grid size of the scaled spectral projector at c = C_k^{-d}.

    The threshold applies to the unscaled Laplacian; its eigenvalues are C_k
    times the scaled ones, so the scaled system is cut at C_k^{-d} / C_k.  The
    numerical zero band always belongs to the projector.  With a mismatched
    signature (q != q0) the gap of the scaled operator stays ~2|lambda|, the
    rank drops to 0 once C_k^{-d-1} falls below it, and the kernel vanishes
    identically; the matched q = q0 run keeps the full holomorphic zero band
    and serves as the control.
    """
    spec = family.model_spectrum()
    if spec.n != 1:
        raise ValueError("vanishing convergence is implemented for n = 1")
    if d <= 0:
        raise ValueError("threshold exponent d must be positive")
    _require_gauge_normal(family)
    if q is None:
        q = 1 - spec.q0
    pts = kernel_grid() if grid is None else np.asarray(grid, dtype=complex).ravel()
    model = _model_matrix(spec, q, pts)

    kept: list[int] = []
    errors: list[float] = []
    ranks: list[int] = []
    failures: list[str] = []
    for k in ks:
        ck = family.c_value(k)
        try:
            system = build_system(
                _extended(family, k, epsilon), q=q, degree=degree, quad_order=quad_order
            )
        except GramConditioningError as err:
            failures.append(f"k={k}: {err}")
            continue
        c_scaled = ck ** (-d) / ck
        sel = _projector_selection(system, c_scaled)
        kern = spectral_projector_kernel(system, c_scaled, pts, pts).value
        kept.append(k)
        ranks.append(int(sel.sum()))
        errors.append(float(np.abs(kern - model).max()))

    cs = tuple(family.c_value(k) for k in kept)
    slope, resid = fit_loglog(cs, errors)
    return ConvergenceReport(
        ks=tuple(kept),
        c_values=cs,
        errors=tuple(errors),
        ranks=tuple(ranks),
        slope=slope,
        slope_residual=resid,
        grid=pts,
        threshold_exponent=float(d),
        failures=tuple(failures),
    )


@dataclass(frozen=True, eq=False)
class DiagonalScanReport:
    """Per-k maxima of the scaled projector kernel on the diagonal."""

    ks: tuple[int, ...]
    c_values: tuple[float, ...]
    per_k: tuple[float, ...]
    maximum: float
    growing: bool
    points: np.ndarray
    threshold_exponent: float
    failures: tuple[str, ...] = ()


def diagonal_bound_scan(
    family: WeightFamily,
    ks: tuple[int, ...] = DEFAULT_KS,
    degree: int = DEFAULT_DEGREE,
    points: np.ndarray | None = None,
    *,
    q: int | None = None,
    d: float = 1.0,
    epsilon: float = DEFAULT_EPSILON,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> DiagonalScanReport:
    """Scan of C_k^{-n} |K(p, p)| over scaled points p and all k.

    Uses the spectral projector at the C_k^{-d} threshold, so the matched run
    tends to |lambda| / pi at every point and the mismatched run to 0.  The
    ``growing`` flag fires when the per-k maxima increase by more than one
    part in 1e6 across each of the last three k: a bounded, converging
    sequence stays under that, an unbounded one does not.
    """
    spec = family.model_spectrum()
    if spec.n != 1:
        raise ValueError("diagonal scan is implemented for n = 1")
    _require_gauge_normal(family)
    if q is None:
        q = spec.q0
    pts = kernel_grid() if points is None else np.asarray(points, dtype=complex).ravel()

    kept: list[int] = []
    per_k: list[float] = []
    failures: list[str] = []
    for k in ks:
        ck = family.c_value(k)
        try:
            system = build_system(
                _extended(family, k, epsilon), q=q, degree=degree, quad_order=quad_order
            )
        except GramConditioningError as err:
            failures.append(f"k={k}: {err}")
            continue
        diat = [
            abs(spectral_projector_kernel(system, ck ** (-d) / ck, p, p).value)
            for p in pts
        ]
        kept.append(k)
        per_k.append(float(max(diat)))

    growing = False
    if len(per_k) >= 3:
        a, b, c = per_k[-3:]
        scale = max(c, 1e-300)
        growing = (b - a) > 1e-6 * scale and (c - b) > 1e-6 * scale
    return DiagonalScanReport(
        ks=tuple(kept),
        c_values=tuple(family.c_value(k) for k in kept),
        per_k=tuple(per_k),
        maximum=max(per_k) if per_k else 0.0,
        growing=growing,
        points=pts,
        threshold_exponent=float(d),
        failures=tuple(failures),
    )


@dataclass(frozen=True, eq=False)
class HeatRouteReport:
    """Sup-grid gaps between heat kernels and the kernel projector.

    ``diffs[i, j]`` is the sup over the grid of |H(t_j) - P| for the i-th k;
    ``slopes`` are per-k decay rates of log(diff) in t (close to -gap);
    ``trace_bounds`` are sum_j max_p |psi_j(p)|^2 over nonzero modes, giving
    the a-priori bound diff <= e^{-t gap} * trace_bound; ``spread_per_t`` is
    the max-min variation across k for each t (zero for exactly scale
    invariant quadratic families).
    """

    ks: tuple[int, ...]
    c_values: tuple[float, ...]
    ts: tuple[float, ...]
    diffs: np.ndarray
    gaps: tuple[float, ...]
    slopes: tuple[float | None, ...]
    trace_bounds: tuple[float, ...]
    spread_per_t: tuple[float, ...]
    grid: np.ndarray


def heat_route_comparison(
    source: WeightFamily | ModelSpectrum,
    ks: tuple[int, ...] | None = None,
    ts: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0),
    degree: int = DEFAULT_DEGREE,
    grid: np.ndarray | None = None,
    *,
    q: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    quad_order: int | None = DEFAULT_QUAD_ORDER,
) -> HeatRouteReport:
    """Compare heat kernels H(t) of the scaled operator with the projector P.

    Requires the matched signature q = q0 so that P is a genuine limit; the
    decay of |H(t) - P| in t then measures the spectral gap.  ``source`` may
    be a weight family (one system per k) or a bare model spectrum (a single
    exactly quadratic system, reported as k = 1).
    """
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t schedule must be strictly increasing")
    if isinstance(source, ModelSpectrum):
        if source.n != 1:
            raise ValueError("heat route comparison is implemented for n = 1")
        if q != source.q0:
            raise ValueError("heat route comparison needs the matched q = q0")
        kss = (1,) if ks is None else tuple(ks)
        systems = [
            build_system(
                WeightPolynomial.quadratic([source.lambdas[0]]), q=q, degree=degree
            )
        ] * len(kss)
        cs = tuple(1.0 for _ in kss)
    else:
        spec = source.model_spectrum()
        if spec.n != 1:
            raise ValueError("heat route comparison is implemented for n = 1")
        if q != spec.q0:
            raise ValueError("heat route comparison needs the matched q = q0")
        _require_gauge_normal(source)
        kss = DEFAULT_KS if ks is None else tuple(ks)
        systems = [
            build_system(
                _extended(source, k, epsilon), q=q, degree=degree, quad_order=quad_order
            )
            for k in kss
        ]
        cs = tuple(source.c_value(k) for k in kss)

    pts = kernel_grid() if grid is None else np.asarray(grid, dtype=complex).ravel()
    diffs = np.empty((len(kss), len(ts)))
    gaps: list[float] = []
    slopes: list[float | None] = []
    bounds: list[float] = []
    for i, system in enumerate(systems):
        proj = spectral_projector_kernel(system, 0.0, pts, pts).value
        for j, t in enumerate(ts):
            heat = heat_kernel_numeric(system, t, pts, pts).value
            diffs[i, j] = float(np.abs(heat - proj).max())
        gaps.append(spectral_gap(system))
        slopes.append(fit_exp_decay(ts, diffs[i]))
        hot = system.eigenvalues > system.zero_tolerance()
        modes = system.eval_modes(pts, np.nonzero(hot)[0])
        bounds.append(float((np.abs(modes) ** 2).max(axis=0).sum()))

    spread = tuple(float(diffs[:, j].max() - diffs[:, j].min()) for j in range(len(ts)))
    return HeatRouteReport(
        ks=kss,
        c_values=cs,
        ts=tuple(float(t) for t in ts),
        diffs=diffs,
        gaps=tuple(gaps),
        slopes=tuple(slopes),
        trace_bounds=tuple(bounds),
        spread_per_t=spread,
        grid=pts,
    )


def route_equivalence_gap(
    family: WeightFamily,
    k: int,
    degree: int = DEFAULT_DEGREE,
    grid: np.ndarray | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """Sup-grid gap between the two routes to the scaled Bergman kernel.

    Route one rescales the weight first and runs a unit-scale Galerkin solve;
    route two runs the solve on the unscaled weight (reference lambda * C_k)
    and changes variables afterwards, K(z, w) = C_k^{-1} K_u(z / sqrt(C_k),
    w / sqrt(C_k)).  The two agree up to roundoff because the substitution
    maps basis, nodes and integrand onto each other exactly.
    """
    spec = family.model_spectrum()
    if spec.q0 != 0:
        raise ValueError("route equivalence uses the Bergman (q = 0) kernel")
    _require_gauge_normal(family)
    ck = family.c_value(k)
    root = math.sqrt(ck)
    lam = abs(spec.lambdas[0])
    ext = _extended(family, k, epsilon)
    unscaled = _Weight1D(
        value=lambda y: np.asarray(ext.value(root * y), dtype=float),
        d_z=lambda y: root * np.asarray(ext.d_z(root * y), dtype=complex),
        d_zbar=lambda y: root * np.asarray(ext.d_zbar(root * y), dtype=complex),
        degree=None,
        ref_lambda=lam * ck,
        source=ext,
    )
    pts = kernel_grid() if grid is None else np.asarray(grid, dtype=complex).ravel()
    hol_scaled = holomorphic_subsystem(ext, degree, quad_order=quad_order)
    hol_unscaled = holomorphic_subsystem(unscaled, degree, quad_order=quad_order)
    direct = bergman_kernel_numeric(hol_scaled, pts, pts)
    routed = bergman_kernel_numeric(hol_unscaled, pts / root, pts / root) / ck
    return float(np.abs(routed - direct).max())
