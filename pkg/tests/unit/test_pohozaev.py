import math

import numpy as np
import pytest
import sympy

from bubble import BubbleSpec
from fields import PolyRadialField, SampledField
from harmonic_poly import HomPoly
from pohozaev import (
    ExtrapolationError,
    SphericalQuadrature,
    SurfaceIntegrator,
    bilinear_form,
    boundary_functional,
    boundary_functional_with_error,
    halving_radii,
    identity_residual,
    richardson_limit,
    singular_mass_limit,
    theta_constant,
)
from radial_calculus import ClosedFormRadial, Dimension

pytestmark = pytest.mark.unit


def _gaussian(n):
    return PolyRadialField.radial(ClosedFormRadial.gaussian(1), n)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_product_rule_integrates_moments(n):
    rule = SphericalQuadrature.product(n, 8)
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    assert rule.integrate(np.ones(len(rule.weights))) == pytest.approx(area, rel=1e-13)
    assert rule.integrate(rule.nodes[:, 0] ** 2) == pytest.approx(area / n, rel=1e-13)
    assert abs(rule.integrate(rule.nodes[:, 1] ** 3)) < 1e-13


def test_axisymmetric_rule():
    rule = SphericalQuadrature.axisymmetric(5, 10)
    area = 8 * math.pi**2 / 3
    assert rule.integrate(np.ones(len(rule.weights))) == pytest.approx(area, rel=1e-13)
    assert rule.integrate(rule.nodes[:, 0] ** 4) == pytest.approx(area * 3 / 35, rel=1e-12)


def test_theta_constant():
    assert sympy.simplify(theta_constant(Dimension(3, 1)) - 2 * sympy.pi) == 0
    dim = Dimension(5, 2)
    assert sympy.simplify(theta_constant(dim) - 3 * dim.sphere_area) == 0


def test_surface_method_validation():
    with pytest.raises(ValueError):
        SurfaceIntegrator(Dimension(5, 2), method="lebedev")
    nonradial = PolyRadialField.polynomial(HomPoly.coordinate(5, 0))
    with pytest.raises(ValueError):
        boundary_functional(nonradial, 1.0, Dimension(5, 2), method="radial")
    sampled = SampledField(5, lambda pts: np.ones(len(pts)))
    with pytest.raises(ValueError):
        boundary_functional(sampled, 1.0, Dimension(5, 2), method="exact")
    with pytest.raises(ValueError):
        boundary_functional(_gaussian(5), 0.0, Dimension(5, 2))


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2), (7, 3), (9, 4)])
def test_fundamental_power_has_zero_boundary_term(n, k):
    dim = Dimension(n, k)
    g0 = PolyRadialField.radial(ClosedFormRadial.power(2 * k - n), n)
    for r in (0.05, 1.0, 7.5):
        assert abs(float(boundary_functional(g0, r, dim))) < 1e-15


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2), (7, 3)])
def test_boundary_functional_constant_for_polyharmonic(n, k):
    dim = Dimension(n, k)
    x1 = HomPoly.coordinate(n, 0)
    u = PolyRadialField.radial(ClosedFormRadial.power(2 * k - n) + 1, n)
    u = u + PolyRadialField.polynomial(x1)
    if k > 1:
        u = u + PolyRadialField.radial(ClosedFormRadial.power(2), n)
    values = [float(boundary_functional(u, r, dim, method="exact")) for r in (0.25, 0.5, 1.0, 2.0, 4.0)]
    scale = max(1.0, max(abs(v) for v in values))
    assert max(values) - min(values) <= 1e-9 * scale


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2)])
def test_surface_methods_agree(n, k):
    dim = Dimension(n, k)
    u = _gaussian(n)
    radial = float(boundary_functional(u, 0.8, dim, method="radial"))
    exact = float(boundary_functional(u, 0.8, dim, method="exact"))
    quadrature = float(boundary_functional(u, 0.8, dim, method="quadrature"))
    assert exact == pytest.approx(radial, rel=1e-14)
    assert quadrature == pytest.approx(radial, rel=1e-9)


def test_bilinear_form_polarizes_boundary_functional():
    dim = Dimension(5, 2)
    x1 = HomPoly.coordinate(5, 0)
    a = _gaussian(5)
    b = PolyRadialField(5, ((ClosedFormRadial.gaussian(2), x1),)) + PolyRadialField.constant(5, 1)
    r = 0.7
    diagonal = float(bilinear_form(a, a, r, dim, method="exact"))
    assert diagonal == pytest.approx(float(boundary_functional(a, r, dim, method="exact")), rel=1e-14)
    whole = float(boundary_functional(a + b, r, dim, method="exact"))
    parts = float(
        boundary_functional(a, r, dim, method="exact")
        + 2 * bilinear_form(a, b, r, dim, method="exact")
        + boundary_functional(b, r, dim, method="exact")
    )
    assert whole == pytest.approx(parts, rel=1e-12)


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2), (7, 3)])
def test_identity_residual_radial(n, k):
    dim = Dimension(n, k)
    report = identity_residual(_gaussian(n), None, 2.0, 0.5, 1.5, dim)
    assert abs(report.residual) <= 1e-7 * report.scale
    assert report.lhs == pytest.approx(report.boundary_outer - report.boundary_inner)
    assert set(report.volume_terms) == {"error_term", "exponent_defect", "grad_f", "surface_f"}


@pytest.mark.parametrize("n, k", [(5, 2), (7, 3)])
def test_identity_residual_bubble_at_critical_exponent(n, k):
    dim = Dimension(n, k)
    bubble = PolyRadialField.radial(BubbleSpec(dim).profile(), n)
    report = identity_residual(bubble, None, float(dim.crit_exp), 0.5, 1.5, dim)
    assert abs(report.residual) <= 1e-7 * report.scale
    assert abs(report.volume_terms["error_term"]) <= 1e-9 * report.scale
    assert abs(report.volume_terms["exponent_defect"]) <= 1e-12 * report.scale


@pytest.mark.parametrize("method", ["exact", "quadrature"])
@pytest.mark.parametrize("n, k", [(3, 1), (5, 2), (7, 3)])
def test_identity_residual_non_radial(n, k, method):
    """Odd k included: the (n-2)/2 coefficient of the boundary remainder closes the identity"""
    dim = Dimension(n, k)
    x1, x2 = HomPoly.coordinate(n, 0), HomPoly.coordinate(n, 1)
    extra = ((ClosedFormRadial.gaussian(2), x1 * x2), (ClosedFormRadial.gaussian(1), x1))
    u = _gaussian(n) + PolyRadialField(n, extra)
    report = identity_residual(u, None, 2.0, 0.5, 1.5, dim, method=method)
    assert abs(report.residual) <= 1e-7 * report.scale


def test_identity_residual_validation():
    dim = Dimension(5, 2)
    with pytest.raises(ValueError):
        identity_residual(_gaussian(5), None, 2.0, 1.5, 0.5, dim)
    with pytest.raises(ValueError):
        identity_residual(_gaussian(5), None, 1.5, 0.5, 1.5, dim)


def test_halving_radii():
    radii = halving_radii(3, 6)
    assert radii == [0.125, 0.0625, 0.03125, 0.015625]


def test_richardson_limit_removes_linear_term():
    radii = halving_radii(3, 9)
    values = [3.0 + 2.0 * r for r in radii]
    limit, spread = richardson_limit(radii, values)
    assert limit == pytest.approx(3.0, rel=1e-14)
    assert spread < 1e-12


def test_richardson_limit_errors():
    with pytest.raises(ExtrapolationError):
        richardson_limit([0.5, 0.25, 0.125], [1.0, 1.0, 1.0])
    with pytest.raises(ExtrapolationError):
        richardson_limit([1.0, 0.4, 0.2, 0.1], [1.0, 1.0, 1.0, 1.0])
    radii = halving_radii(3, 8)
    with pytest.raises(ExtrapolationError) as exc_info:
        richardson_limit(radii, [(-1) ** j for j in range(len(radii))])
    assert "did not settle" in str(exc_info.value)


def test_singular_mass_limit_exact_case():
    """P₁(r; r⁻¹ + 2) = 4π on every sphere in ℝ³"""
    dim = Dimension(3, 1)
    result = singular_mass_limit(1, PolyRadialField.constant(3, 2), dim)
    assert result.expected == pytest.approx(4 * math.pi, rel=1e-14)
    assert result.relative_error < 1e-12
    assert len(result.values) == len(result.radii)


def test_singular_mass_limit_gaussian():
    dim = Dimension(5, 2)
    result = singular_mass_limit(1, _gaussian(5), dim)
    assert result.expected == pytest.approx(float(theta_constant(dim)), rel=1e-14)
    assert result.relative_error < 1e-4


def test_singular_mass_limit_rejects_non_positive_coefficient():
    with pytest.raises(ValueError):
        singular_mass_limit(0, _gaussian(5), Dimension(5, 2))


def test_bilinear_form_is_symmetric():
    dim = Dimension(7, 3)
    a = _gaussian(7)
    b = PolyRadialField(7, ((ClosedFormRadial.gaussian(2), HomPoly.coordinate(7, 0) * HomPoly.coordinate(7, 0)),))
    ab = float(bilinear_form(a, b, 0.9, dim, method="exact"))
    ba = float(bilinear_form(b, a, 0.9, dim, method="exact"))
    assert ab == pytest.approx(ba, rel=1e-14)


def test_identity_terms_add_over_annuli():
    dim = Dimension(5, 2)
    u = _gaussian(5)
    whole = identity_residual(u, None, 2.0, 0.5, 1.5, dim)
    inner = identity_residual(u, None, 2.0, 0.5, 1.0, dim)
    outer = identity_residual(u, None, 2.0, 1.0, 1.5, dim)
    assert inner.lhs + outer.lhs == pytest.approx(whole.lhs, rel=1e-12)
    for key, value in whole.volume_terms.items():
        assert inner.volume_terms[key] + outer.volume_terms[key] == pytest.approx(value, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("n, k", [(5, 2), (7, 3)])
def test_sampled_bubble_boundary_functional_error_covers_difference(n, k):
    dim = Dimension(n, k)
    spec = BubbleSpec(dim)
    c, w = float(spec.c_nk), float(dim.weight)
    sampled = SampledField(n, lambda pts: (1 + np.sum(pts**2, axis=1) / c) ** -w)
    exact = float(boundary_functional(PolyRadialField.radial(spec.profile(), n), 1.0, dim))
    integ = SurfaceIntegrator(dim, "quadrature", quadrature_degree=2)
    value, error = boundary_functional_with_error(sampled, 1.0, dim, integrator=integ)
    assert error > 0
    assert abs(float(value) - exact) <= error + 1e-12 * abs(exact)
    assert error <= 1e-3 * abs(exact)


def test_closed_form_boundary_functional_has_no_differentiation_error():
    value, error = boundary_functional_with_error(_gaussian(5), 1.0, Dimension(5, 2))
    assert error == 0.0
    assert float(value) == pytest.approx(float(boundary_functional(_gaussian(5), 1.0, Dimension(5, 2))))


def test_sampled_identity_residual_within_error_estimate():
    dim = Dimension(5, 2)
    sampled = SampledField(5, lambda pts: np.exp(-np.sum(pts**2, axis=1)))
    report = identity_residual(sampled, None, 2.0, 0.5, 1.5, dim, method="quadrature", quadrature_degree=2)
    exact = identity_residual(_gaussian(5), None, 2.0, 0.5, 1.5, dim)
    assert abs(report.residual) <= report.error_estimate
    assert report.error_estimate > exact.error_estimate
    assert report.boundary_outer == pytest.approx(exact.boundary_outer, rel=1e-3)
