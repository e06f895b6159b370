"""Flat-torus holomorphic Morse inequalities and the theta trace identity.

The torus is C / (Z + tau Z) with Im tau > 0, described in lattice
coordinates (x, y) in [0, 1)^2 via z = x + tau y.  The volume convention
dV = 2 * Lebesgue gives area 2 Im tau.  A bundle of degree m carries the
flat weight phi = pi m (Im z)^2 / Im tau, and the level-k weight is
k * (d * flat part + psi) with psi a mean-zero trigonometric polynomial
psi(x, y) = sum_j a_j cos(2 pi (m1_j x + m2_j y)).

The curvature field per unit k is R = 2 * d^2 phi / dz dzbar evaluated on the
unit-degree weight, so that integral of R dV = 2 pi d and the alternating sum
of Morse integrals reproduces k * d exactly.  Holomorphic sections at level k
are the k*d classical theta functions; their Gram matrix under the weighted
volume gives the Bergman projector whose integrated trace must equal the
Dolbeault dimension h^0 = k*d.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .galerkin import GramConditioningError

DEAD_BAND = 1e-12
DEFAULT_GRID = 64
DEFAULT_GRAM_GRID = 48
DEFAULT_TRACE_GRID = 64


class BoundaryCrossingWarning(UserWarning):
    """The integration grid crosses the degenerate set {R = 0}."""


@dataclass(frozen=True)
class TorusBundle:
    """Degree-d line bundle data on C / (Z + tau Z) with weight perturbation psi."""

    tau: complex
    degree: int
    psi_modes: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        tau = complex(self.tau)
        object.__setattr__(self, "tau", tau)
        if not tau.imag > 0:
            raise ValueError("lattice parameter needs Im tau > 0")
        if self.degree == 0:
            raise ValueError("flat (degree 0) bundles are excluded")
        seen: set[tuple[int, int]] = set()
        modes = []
        for m1, m2, amp in self.psi_modes:
            m1, m2, amp = int(m1), int(m2), float(amp)
            if (m1, m2) == (0, 0):
                raise ValueError("psi must have zero mean: (0, 0) mode not allowed")
            if (m1, m2) in seen:
                raise ValueError(f"duplicate psi mode {(m1, m2)}")
            if amp == 0.0:
                continue
            seen.add((m1, m2))
            modes.append((m1, m2, amp))
        object.__setattr__(self, "psi_modes", tuple(modes))

    @property
    def area(self) -> float:
        return 2.0 * self.tau.imag

    @property
    def top_frequency(self) -> int:
        freqs = [max(abs(m1), abs(m2)) for m1, m2, _ in self.psi_modes]
        return max(freqs, default=1)

    def psi_values(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.zeros(np.broadcast(x, y).shape)
        for m1, m2, amp in self.psi_modes:
            out += amp * np.cos(2.0 * math.pi * (m1 * x + m2 * y))
        return out

    def curvature_values(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Limit curvature R(x, y): flat part pi d / Im tau plus the psi Hessian."""
        tau2 = self.tau.imag
        out = np.full(np.broadcast(x, y).shape, math.pi * self.degree / tau2)
        for m1, m2, amp in self.psi_modes:
            freq2 = abs(m1 * self.tau - m2) ** 2
            out -= (
                2.0
                * math.pi**2
                * amp
                * freq2
                / tau2**2
                * np.cos(2.0 * math.pi * (m1 * x + m2 * y))
            )
        return out


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Grid samples of the limit curvature with a sign classification.

    ``labels`` holds 0 on M(0) (R > dead band), 1 on M(1) (R < -dead band)
    and -1 on the degenerate band |R| <= dead band.
    """

    bundle: TorusBundle
    grid_n: int
    values: np.ndarray
    labels: np.ndarray

    @property
    def sign_changing(self) -> bool:
        return bool((self.labels == 0).any() and (self.labels == 1).any())

    def measure(self, label: int) -> float:
        cell = self.bundle.area / self.grid_n**2
        return float((self.labels == label).sum()) * cell


def _lattice_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(n) / n
    return np.meshgrid(t, t, indexing="ij")


def _check_resolution(bundle: TorusBundle, grid_n: int) -> None:
    need = 8 * bundle.top_frequency
    if grid_n < need:
        raise ValueError(
            f"grid with {grid_n} points per axis cannot resolve psi; need >= {need}"
        )


def curvature_field(bundle: TorusBundle, grid_n: int = DEFAULT_GRID) -> CurvatureField:
    """Sample the limit curvature on an n x n lattice grid and classify signs."""
    _check_resolution(bundle, grid_n)
    x, y = _lattice_grid(grid_n)
    values = bundle.curvature_values(x, y)
    labels = np.where(values > DEAD_BAND, 0, np.where(values < -DEAD_BAND, 1, -1))
    return CurvatureField(
        bundle=bundle, grid_n=grid_n, values=values, labels=labels.astype(np.int8)
    )


def morse_integrals(
    bundle: TorusBundle,
    k: int,
    q: int,
    grid_n: int = DEFAULT_GRID,
    window: tuple[float, float, float, float] | None = None,
) -> float:
    """Morse integral (k / 2 pi) * integral over M(q) of |R| dV at level k.

    Riemann sums on the periodic lattice grid are spectrally accurate while
    M(q) is the whole torus; once {R = 0} cuts through the grid the error
    drops to first order and a BoundaryCrossingWarning carries a rough
    estimate (sign-boundary cell count * cell volume * max |R|).  ``window``
    restricts the integral to a sub-rectangle [x0, x1) x [y0, y1) in lattice
    coordinates (half-open, within the unit square).
    """
    if q not in (0, 1):
        raise ValueError("torus Morse integrals take q in {0, 1}")
    if k == 0:
        raise ValueError("level k must be nonzero")
    field = curvature_field(bundle, grid_n)
    mask = field.labels == q
    if window is not None:
        x0, x1, y0, y1 = map(float, window)
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise ValueError("window must be a nonempty sub-rectangle of [0, 1]^2")
        x, y = _lattice_grid(grid_n)
        mask = mask & (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
    if field.sign_changing:
        cell = bundle.area / grid_n**2
        crossings = int(
            (field.labels != np.roll(field.labels, 1, axis=0)).sum()
            + (field.labels != np.roll(field.labels, 1, axis=1)).sum()
        )
        estimate = k / (2.0 * math.pi) * crossings * cell * float(np.abs(field.values).max())
        warnings.warn(
            f"grid crosses the degenerate set; integration error is first order"
            f" (rough estimate {estimate:.3e})",
            BoundaryCrossingWarning,
            stacklevel=2,
        )
    cell = bundle.area / grid_n**2
    total = float(np.abs(field.values[mask]).sum()) * cell
    return k / (2.0 * math.pi) * total


def dolbeault_dims(bundle: TorusBundle, k: int) -> tuple[int, int]:
    """Dimensions (h^0, h^1) of the degree k*d bundle on the elliptic curve.

    Degree kd > 0 gives (kd, 0) and kd < 0 gives (0, -kd); the flat kd = 0
    case is excluded.  These are classical facts used as the independent
    reference for the Morse audit, not derived from the kernels here.
    """
    kd = k * bundle.degree
    if kd == 0:
        raise ValueError("k * degree must be nonzero")
    return (kd, 0) if kd > 0 else (0, -kd)


def _theta_radius(tau2: float, m: int) -> int:
    spread = math.sqrt(1.0 + 18.0 * math.log(10.0) / (math.pi * tau2 * m))
    return max(6, math.ceil(1.0 + spread) + 2)


def _theta_matrix(
    bundle: TorusBundle, k: int, x: np.ndarray, y: np.ndarray, radius: int
) -> np.ndarray:
    """Values theta_j(z) e^{-phi_k(z)} on flattened grid points, one column per j.

    The weight is folded into the lattice-sum exponent before exponentiation,
    keeping every term at the scale of the weighted section norms.
    """
    tau = bundle.tau
    tau2 = tau.imag
    m = k * bundle.degree
    z = (x + tau * y).ravel()
    phi = (
        math.pi * m * tau2 * (y.ravel() ** 2)
        + k * bundle.psi_values(x, y).ravel()
    )
    ls = np.arange(-radius, radius + 1)
    js = np.arange(m)
    shift = ls[:, None] + js[None, :] / m
    quad = 1j * math.pi * tau * m * shift**2
    expo = quad[None, :, :] + 2j * math.pi * m * shift[None, :, :] * z[:, None, None]
    return np.exp(expo - phi[:, None, None]).sum(axis=1)


@dataclass(frozen=True, eq=False)
class TraceCheckResult:
    """Outcome of integrating the theta Bergman projector trace."""

    dimension: int
    trace: float
    deviation: float
    gram_rank: int
    lattice_radius: int
    truncation_estimate: float
    gram_grid: int
    trace_grid: int


def theta_trace_check(
    bundle: TorusBundle,
    k: int,
    lattice_radius: int | None = None,
    gram_grid: int = DEFAULT_GRAM_GRID,
    trace_grid: int = DEFAULT_TRACE_GRID,
) -> TraceCheckResult:
    """Check that the integrated Bergman trace equals the dimension k*d.

    The Gram matrix of the k*d theta functions is assembled on one periodic
    lattice grid and the projector trace is integrated on a different one, so
    the identity trace = rank is a genuine quadrature statement rather than a
    restatement of the matrix algebra.  Raises GramConditioningError when the
    Gram matrix is not positive definite.
    """
    m = k * bundle.degree
    if m <= 0:
        raise ValueError("theta sections need k * degree > 0")
    if gram_grid == trace_grid:
        raise ValueError("trace grid must differ from the Gram grid")
    _check_resolution(bundle, min(gram_grid, trace_grid))
    tau2 = bundle.tau.imag
    radius = _theta_radius(tau2, m) if lattice_radius is None else int(lattice_radius)
    if radius < 1:
        raise ValueError("lattice radius must be positive")
    truncation = 2.0 * math.exp(-math.pi * m * tau2 * (radius - 1) ** 2)

    xg, yg = _lattice_grid(gram_grid)
    vg = _theta_matrix(bundle, k, xg, yg, radius)
    gram = vg.conj().T @ vg * (bundle.area / gram_grid**2)
    gram = 0.5 * (gram + gram.conj().T)
    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as err:
        raise GramConditioningError(f"theta Gram matrix is not positive definite: {err}")

    xt, yt = _lattice_grid(trace_grid)
    vt = _theta_matrix(bundle, k, xt, yt, radius)
    diag = np.einsum("pi,pi->p", cho_solve(factor, vt.conj().T).T, vt).real
    trace = float(diag.sum()) * bundle.area / trace_grid**2
    return TraceCheckResult(
        dimension=m,
        trace=trace,
        deviation=abs(trace - m),
        gram_rank=int(np.linalg.matrix_rank(gram)),
        lattice_radius=radius,
        truncation_estimate=truncation,
        gram_grid=gram_grid,
        trace_grid=trace_grid,
    )


@dataclass(frozen=True, eq=False)
class MorseReport:
    """Per-k Morse integrals, Dolbeault dimensions and inequality margins.

    morse1 = I0 - h0 (weak inequality, >= 0, zero iff the gap condition bites),
    morse2 = (h0 - h1) - (I0 - I1) (strong inequality at q = 1; identically
    ~0 on the torus), morse3 = (h0 - h1) - (k / 2 pi) * integral of R dV
    (asymptotic Riemann-Roch; exactly zero here).
    """

    ks: tuple[int, ...]
    h0: tuple[int, ...]
    h1: tuple[int, ...]
    i0: tuple[float, ...]
    i1: tuple[float, ...]
    morse1: tuple[float, ...]
    morse2: tuple[float, ...]
    morse3: tuple[float, ...]
    grid_n: int


def audit_morse(
    bundle: TorusBundle, ks: tuple[int, ...], grid_n: int = DEFAULT_GRID
) -> MorseReport:
    """Audit the three Morse inequalities against the dimension oracle."""
    if not ks:
        raise ValueError("need at least one level k")
    h0s, h1s, i0s, i1s = [], [], [], []
    m1s, m2s, m3s = [], [], []
    field = curvature_field(bundle, grid_n)
    cell = bundle.area / grid_n**2
    total_r = float(field.values.sum()) * cell
    for k in ks:
        h0, h1 = dolbeault_dims(bundle, k)
        i0 = morse_integrals(bundle, k, 0, grid_n)
        i1 = morse_integrals(bundle, k, 1, grid_n)
        h0s.append(h0)
        h1s.append(h1)
        i0s.append(i0)
        i1s.append(i1)
        m1s.append(i0 - h0)
        m2s.append((h0 - h1) - (i0 - i1))
        m3s.append((h0 - h1) - k / (2.0 * math.pi) * total_r)
    return MorseReport(
        ks=tuple(ks),
        h0=tuple(h0s),
        h1=tuple(h1s),
        i0=tuple(i0s),
        i1=tuple(i1s),
        morse1=tuple(m1s),
        morse2=tuple(m2s),
        morse3=tuple(m3s),
        grid_n=grid_n,
    )
