"""Closed-form model kernel and orthonormal basis on C^n with a quadratic weight.

The model data is a nondegenerate curvature spectrum lambda = (lambda_1..lambda_n)
with q0 negative entries listed first.  The weight is phi_0 = sum_i lambda_i |z^i|^2
and the metric on sections is |s|^2 e^{-2 phi_0}.  Conventions used everywhere in
this package:

* volume form dV = 2^n dm, with dm the Lebesgue measure of C^n = R^{2n}
  (so ||e^{-|z|^2}||^2 = pi in one variable);
* kernels are the self-adjoint localized kernels acting on L^2(dV),
  K(z, w) = e^{-phi(z)} (sesquiholomorphic part) e^{-phi(w)};
* (0,1)-forms carry the flat metric <dzbar^i, dzbar^j> = delta_ij.

With these conventions the projector onto the kernel of the model Laplacian in
degree q = q0 has the explicit value

  P(z, w) = (|lambda_1 .. lambda_n| / pi^n)
            * exp(2 (sum_{i<=q0} |lambda_i| zbar^i w^i + sum_{i>q0} |lambda_i| z^i wbar^i)
                  - sum_i |lambda_i| (|z^i|^2 + |w^i|^2)),

and is identically zero in every other degree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "ModelSpectrum",
    "MultiIndex",
    "FormKernelValue",
    "eval_model_bergman",
    "eval_model_basis",
    "model_kernel_from_basis",
    "eval_model_heat",
    "multi_indices",
]


@dataclass(frozen=True)
class ModelSpectrum:
    """Curvature eigenvalues at the expansion point, negative entries first.

    The ordering is part of the data: the first ``q0`` coordinates are the ones
    whose basis monomials get conjugated, so a silent permutation would change
    every kernel value.  Constructors must list negatives first.
    """

    lambdas: tuple[float, ...]

    def __post_init__(self) -> None:
        lams = tuple(float(l) for l in self.lambdas)
        if len(lams) == 0:
            raise ValueError("spectrum needs at least one eigenvalue")
        if any(l == 0.0 for l in lams):
            raise ValueError("degenerate spectrum: zero eigenvalue not allowed")
        neg = [l < 0 for l in lams]
        if neg != sorted(neg, reverse=True):
            raise ValueError("eigenvalues must be ordered negatives first")
        object.__setattr__(self, "lambdas", lams)

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def q0(self) -> int:
        """Number of negative eigenvalues; the only degree with nonzero kernel."""
        return sum(1 for l in self.lambdas if l < 0)


@dataclass(frozen=True)
class MultiIndex:
    """Multi-index alpha in N^n with |alpha| = sum alpha_i."""

    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        ent = tuple(int(a) for a in self.entries)
        if any(a < 0 for a in ent):
            raise ValueError("multi-index entries must be nonnegative")
        object.__setattr__(self, "entries", ent)

    @property
    def order(self) -> int:
        return sum(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)


@dataclass(frozen=True)
class FormKernelValue:
    """Kernel coefficients of a (0,q)-form kernel on dzbar^I (x) (d/dwbar)^J.

    ``entries`` maps strictly increasing index pairs (I, J) to complex values;
    absent entries are zero.  For the diagonal model kernels only the principal
    entry I = J = (0..q-1) occurs.
    """

    q: int
    entries: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = field(default_factory=dict)

    @classmethod
    def zero(cls, q: int) -> "FormKernelValue":
        return cls(q=q, entries={})

    @classmethod
    def principal(cls, q: int, value: complex) -> "FormKernelValue":
        idx = tuple(range(q))
        return cls(q=q, entries={(idx, idx): complex(value)})

    @property
    def value(self) -> complex:
        """The principal (I, J) = ((0..q-1), (0..q-1)) coefficient."""
        idx = tuple(range(self.q))
        return self.entries.get((idx, idx), 0j)

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.entries.values())

    def conjugate_transpose(self) -> "FormKernelValue":
        """Swap the (I, J) roles and conjugate, i.e. the kernel of the adjoint."""
        swapped = {(j, i): complex(np.conj(v)) for (i, j), v in self.entries.items()}
        return FormKernelValue(q=self.q, entries=swapped)


def _point(z: complex | Sequence[complex], n: int) -> np.ndarray:
    pt = np.atleast_1d(np.asarray(z, dtype=complex))
    if pt.shape != (n,):
        raise ValueError(f"expected a point in C^{n}, got shape {pt.shape}")
    return pt


def multi_indices(n: int, max_order: int) -> Iterator[tuple[int, ...]]:
    """All alpha in N^n with |alpha| <= max_order, in graded lexicographic order."""
    for total in range(max_order + 1):
        for head in itertools.combinations_with_replacement(range(n), total):
            alpha = [0] * n
            for i in head:
                alpha[i] += 1
            yield tuple(alpha)


def eval_model_bergman(
    spec: ModelSpectrum, q: int, z: complex | Sequence[complex], w: complex | Sequence[complex]
) -> FormKernelValue:
    """Exact model projector kernel in degree q at (z, w).

    Returns the zero kernel for every q != q0 (the model Laplacian has trivial
    kernel there), and the closed-form Gaussian value for q = q0.
    """
    if not 0 <= q <= spec.n:
        raise ValueError(f"form degree q={q} outside [0, {spec.n}]")
    if q != spec.q0:
        return FormKernelValue.zero(q)
    zp = _point(z, spec.n)
    wp = _point(w, spec.n)
    lam = np.abs(np.asarray(spec.lambdas))
    cross = np.where(
        np.arange(spec.n) < spec.q0, lam * np.conj(zp) * wp, lam * zp * np.conj(wp)
    ).sum()
    quad = (lam * (np.abs(zp) ** 2 + np.abs(wp) ** 2)).sum()
    prefactor = float(np.prod(lam)) / math.pi ** spec.n
    return FormKernelValue.principal(q, prefactor * np.exp(2.0 * cross - quad))


def eval_model_basis(
    spec: ModelSpectrum, alpha: MultiIndex | Sequence[int], z: complex | Sequence[complex]
) -> complex:
    """Orthonormal kernel basis element Psi_alpha(z), a coefficient on dzbar^1..dzbar^q0.

    Psi_alpha = sqrt(2^|alpha| prod_i |lambda_i|^(alpha_i + 1) / (pi^n alpha!))
                * z_q^alpha * e^{-sum_i |lambda_i| |z^i|^2},

    where the mixed monomial z_q^alpha conjugates the first q0 coordinates.
    """
    a = tuple(MultiIndex(tuple(alpha)).entries)
    if len(a) != spec.n:
        raise ValueError(f"multi-index length {len(a)} does not match n={spec.n}")
    zp = _point(z, spec.n)
    lam = np.abs(np.asarray(spec.lambdas))
    coords = np.where(np.arange(spec.n) < spec.q0, np.conj(zp), zp)
    norm2 = 2.0 ** sum(a) * float(np.prod(lam ** (np.asarray(a) + 1)))
    norm2 /= math.pi ** spec.n * float(np.prod([math.factorial(ai) for ai in a]))
    mono = np.prod(coords ** np.asarray(a))
    return complex(math.sqrt(norm2) * mono * np.exp(-(lam * np.abs(zp) ** 2).sum()))


def model_kernel_from_basis(
    spec: ModelSpectrum,
    q: int,
    degree: int,
    z: complex | Sequence[complex],
    w: complex | Sequence[complex],
) -> FormKernelValue:
    """Truncated basis expansion sum_{|alpha| <= degree} Psi_alpha(z) Psi_alpha(w)*.

    Independent oracle for :func:`eval_model_bergman`; converges to it as
    degree grows, uniformly on compact sets.  Zero kernel when q != q0.
    """
    if not 0 <= q <= spec.n:
        raise ValueError(f"form degree q={q} outside [0, {spec.n}]")
    if q != spec.q0:
        return FormKernelValue.zero(q)
    total = 0j
    for alpha in multi_indices(spec.n, degree):
        total += eval_model_basis(spec, alpha, z) * np.conj(eval_model_basis(spec, alpha, w))
    return FormKernelValue.principal(q, total)


def eval_model_heat(
    spec: ModelSpectrum,
    q: int,
    t: float,
    z: complex,
    w: complex,
    degree: int = 24,
    quad_order: int | None = None,
) -> FormKernelValue:
    """Heat kernel e^{-t box} of the model Laplacian at (z, w), n = 1 only.

    No closed form is assumed: the value is the eigen-expansion
    sum_j e^{-t mu_j} psi_j(z) psi_j(w)* of the Galerkin discretization at the
    given truncation degree.  As t -> infinity it converges to
    :func:`eval_model_bergman` (to the projector onto the numerical kernel).
    """
    if spec.n != 1:
        raise ValueError("heat kernel eigen-expansion is restricted to n = 1")
    if not t > 0:
        raise ValueError("heat time must be positive")
    if q not in (0, 1):
        raise ValueError(f"form degree q={q} outside [0, 1]")

    from . import galerkin
    from .weights import WeightPolynomial

    weight = WeightPolynomial.quadratic((spec.lambdas[0],))
    system = galerkin.build_system(weight, q, degree, quad_order=quad_order, reference=spec)
    return galerkin.heat_kernel_numeric(system, t, z, w)
