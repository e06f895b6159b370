"""Shared fixtures: small weight families and torus bundles used across suites."""

import pytest

from kernel_lab import CkRule, Perturbation, TorusBundle, WeightFamily, WeightPolynomial, real_term


@pytest.fixture(scope="session")
def quadratic_family() -> WeightFamily:
    return WeightFamily(base=WeightPolynomial.quadratic([1.0]), ck=CkRule(4.0))


@pytest.fixture(scope="session")
def cubic_family() -> WeightFamily:
    base = WeightPolynomial.quadratic([1.0]) + real_term(1, (3,), (0,), 0.25)
    return WeightFamily(base=base, ck=CkRule(4.0))


@pytest.fixture(scope="session")
def perturbed_family() -> WeightFamily:
    # quadratic perturbation with amplitude C_k^{2/3}, decaying as C_k^{-1/3}
    # after scaling
    pert = Perturbation(shape=WeightPolynomial.quadratic([1.0]), gamma=2.0 / 3.0)
    return WeightFamily(
        base=WeightPolynomial.quadratic([1.0]), ck=CkRule(4.0), perturbations=(pert,)
    )


@pytest.fixture(scope="session")
def flat_torus() -> TorusBundle:
    return TorusBundle(tau=1j, degree=1)


@pytest.fixture(scope="session")
def wavy_torus() -> TorusBundle:
    # amplitude 0.3 makes the curvature change sign at degree 1
    return TorusBundle(tau=1j, degree=1, psi_modes=((1, 0, 0.3),))
