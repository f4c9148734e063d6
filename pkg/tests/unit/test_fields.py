import math

import numpy as np
import pytest
import sympy

from fields import PolyRadialField, SampledField
from harmonic_poly import HomPoly
from radial_calculus import R, ClosedFormRadial, Dimension

pytestmark = pytest.mark.unit


def _gaussian(n):
    return PolyRadialField.radial(ClosedFormRadial.gaussian(1), n)


def test_terms_merge_and_cancel():
    field = _gaussian(3) + _gaussian(3)
    assert len(field.terms) == 1
    assert sympy.simplify(field.radial_profile().expr - 2 * sympy.exp(-(R**2))) == 0
    assert (field - field).is_zero


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        _gaussian(3) + _gaussian(4)
    with pytest.raises(ValueError):
        PolyRadialField(3, ((ClosedFormRadial.constant(1), HomPoly.coordinate(4, 0)),))


def test_radial_laplacian_matches_closed_form():
    dim = Dimension(5, 2)
    field = _gaussian(5).laplacian()
    expected = ClosedFormRadial.gaussian(1).laplacian(dim)
    assert sympy.simplify(field.radial_profile().expr - expected.expr) == 0


def test_polynomial_laplacian():
    x1 = HomPoly.coordinate(3, 0)
    field = PolyRadialField.polynomial(x1 * x1).laplacian()
    assert field.value_at_origin() == -2
    assert field.is_radial


def test_value_at_origin_ignores_positive_degree_terms():
    field = _gaussian(4) + PolyRadialField.polynomial(HomPoly.coordinate(4, 1)) + PolyRadialField.constant(4, 3)
    assert field.value_at_origin() == 4
    assert not field.is_radial
    with pytest.raises(ValueError):
        field.radial_profile()


def test_spherical_mean():
    x1 = HomPoly.coordinate(3, 0)
    field = PolyRadialField(3, ((ClosedFormRadial.gaussian(1), x1 * x1), (ClosedFormRadial.constant(5), x1)))
    mean = field.spherical_mean()
    assert sympy.simplify(mean.expr - R**2 * sympy.exp(-(R**2)) / 3) == 0


def test_values_and_gradients():
    x1 = HomPoly.coordinate(3, 0)
    field = PolyRadialField(3, ((ClosedFormRadial.gaussian(1), x1),))
    point = np.array([[1.0, 0.0, 0.0]])
    assert field.values(point)[0] == pytest.approx(math.exp(-1))
    # ∇(e^{-r²}x₁) = e^{-r²}(e₁ - 2x₁x)
    assert np.allclose(field.gradients(point)[0], [-math.exp(-1), 0.0, 0.0])
    other = np.array([[0.3, -0.4, 1.2]])
    r2 = float(np.sum(other**2))
    expected = math.exp(-r2) * (np.array([1.0, 0.0, 0.0]) - 2 * 0.3 * other[0])
    assert np.allclose(field.gradients(other)[0], expected)


def test_euler_operator():
    field = PolyRadialField(3, ((ClosedFormRadial.power(2), HomPoly.coordinate(3, 2)),))
    # x·∇(r²x₃) = 3r²x₃
    euler = field.euler()
    assert euler.terms[0][0].expr == 3 * R**2


def test_iterate_laplacian_of_fundamental_power():
    dim = Dimension(7, 3)
    field = PolyRadialField.radial(ClosedFormRadial.power(2 * dim.k - dim.n), dim.n)
    assert field.iterate_laplacian(3).is_zero


def test_sampled_field_derivatives():
    n = 3
    field = SampledField(n, lambda pts: np.sum(pts**2, axis=1))
    points = np.array([[0.5, 0.2, -0.7], [1.0, 1.0, 0.0]])
    assert np.allclose(field.laplacian().values(points), -2 * n, atol=1e-4)
    assert np.allclose(field.gradients(points), 2 * points, atol=1e-6)
    assert np.allclose(field.euler().values(points), 2 * np.sum(points**2, axis=1), atol=1e-6)
    combined = field.scale(2.0) + field
    assert np.allclose(combined.values(points), 3 * np.sum(points**2, axis=1))


def _sampled_gaussian(n):
    return SampledField(n, lambda pts: np.exp(-np.sum(pts**2, axis=1)))


def test_sampled_operators_commute_into_normal_form():
    field = _sampled_gaussian(5)
    # Δ₀(x·∇f) = (x·∇ + 2)Δ₀f
    assert field.euler().laplacian().terms == ((2.0, 0, 1), (1.0, 1, 1))
    assert field.laplacian().euler().terms == ((1.0, 1, 1),)
    assert (field.scale(3.0) + field.scale(-3.0)).terms == ()


@pytest.mark.parametrize(
    "n, build, ceiling",
    [
        (5, lambda f: f.iterate_laplacian(2), 1e-5),
        (5, lambda f: f.laplacian().euler(), 1e-6),
        (7, lambda f: f.euler().euler(), 1e-8),
        (7, lambda f: f.iterate_laplacian(3), 1e-3),
    ],
)
def test_sampled_derivatives_report_their_error(n, build, ceiling):
    rng = np.random.default_rng(3)
    points = rng.normal(size=(40, n))
    points *= (rng.uniform(0.3, 1.5, 40) / np.linalg.norm(points, axis=1))[:, None]
    exact = build(_gaussian(n)).values(points)
    values, errors = build(_sampled_gaussian(n)).values_with_error(points)
    assert np.all(np.abs(values - exact) <= errors + 1e-13)
    assert np.max(errors) <= ceiling * np.max(np.abs(exact))


def test_sampled_gradients_report_their_error():
    n = 5
    points = np.array([[0.4, -0.3, 0.2, 0.1, 0.5], [1.0, 0.0, 0.2, -0.6, 0.3]])
    exact = _gaussian(n).laplacian().gradients(points)
    grads, errors = _sampled_gaussian(n).laplacian().gradients_with_error(points)
    assert np.all(np.abs(grads - exact) <= errors + 1e-13)
    assert np.max(errors) <= 1e-5 * np.max(np.abs(exact))


def test_sampled_fields_with_different_samplers():
    first = _sampled_gaussian(3)
    second = SampledField(3, lambda pts: np.sum(pts**2, axis=1))
    points = np.array([[0.1, 0.2, 0.3]])
    assert (first + second).values(points)[0] == pytest.approx(math.exp(-0.14) + 0.14)
    with pytest.raises(ValueError):
        first.laplacian() + second
