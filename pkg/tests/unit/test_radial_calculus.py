import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy

from radial_calculus import (
    R,
    ClosedFamilyError,
    ClosedFormRadial,
    Dimension,
    QuadratureError,
    RadialJet,
    dilation_action,
    geometric_breakpoints,
    half_power,
    integrate_radial,
    integrate_segments,
    iterate_polyharmonic,
    radial_laplacian,
    sympy_to_fraction,
    to_rational,
)

pytestmark = pytest.mark.unit


def test_to_rational():
    assert to_rational(0.1) == sympy.Rational(1, 10)
    assert to_rational(Fraction(3, 4)) == sympy.Rational(3, 4)
    assert to_rational(7) == sympy.Integer(7)
    with pytest.raises(TypeError):
        to_rational(True)
    with pytest.raises(ValueError):
        to_rational(float("inf"))
    assert sympy_to_fraction(sympy.Rational(-5, 6)) == Fraction(-5, 6)
    with pytest.raises(ValueError):
        sympy_to_fraction(sympy.sqrt(2))


def test_dimension_constraints():
    dim = Dimension(5, 2)
    assert dim.crit_exp == Fraction(10)
    assert dim.weight == Fraction(1, 2)
    assert sympy.simplify(Dimension(3, 1).sphere_area - 4 * sympy.pi) == 0
    assert float(Dimension(5, 1).sphere_area_mp()) == pytest.approx(8 * math.pi**2 / 3, rel=1e-14)
    with pytest.raises(ValueError) as exc_info:
        Dimension(4, 2)
    assert "2k < n" in str(exc_info.value)
    with pytest.raises(ValueError):
        Dimension(5, 0)


def test_closed_family_rejects_other_factors():
    with pytest.raises(ClosedFamilyError):
        ClosedFormRadial(sympy.sin(R))
    with pytest.raises(ClosedFamilyError):
        ClosedFormRadial(sympy.exp(-R))
    with pytest.raises(ClosedFamilyError):
        ClosedFormRadial((1 + R) ** -2)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_laplacian_of_powers(n):
    """Δ₀r² = -2n and r^{2-n} is harmonic off the origin"""
    dim = Dimension(n, 1)
    assert ClosedFormRadial.power(2).laplacian(dim).expr == -2 * n
    assert ClosedFormRadial.power(2 - n).laplacian(dim).is_zero


def test_fundamental_power_is_polyharmonic():
    dim = Dimension(7, 3)
    g = ClosedFormRadial.power(2 * dim.k - dim.n)
    assert iterate_polyharmonic(g, 3, dim).is_zero
    assert not iterate_polyharmonic(g, 2, dim).is_zero


def test_gaussian_laplacian():
    """Δ₀e^{-r²} = (2n - 4r²)e^{-r²}"""
    dim = Dimension(5, 2)
    lap = ClosedFormRadial.gaussian(1).laplacian(dim)
    expected = (10 - 4 * R**2) * sympy.exp(-(R**2))
    assert sympy.simplify(lap.expr - expected) == 0


def test_radial_jet_matches_closed_form():
    dim = Dimension(5, 2)
    u = ClosedFormRadial.rational_profile(1, Fraction(1, 3), Fraction(1, 2))
    for radius in (0, 0.7):
        jet = RadialJet.from_closed_form(u, radius, 6)
        lap_jet = radial_laplacian(radial_laplacian(jet, dim), dim)
        exact = iterate_polyharmonic(u, 2, dim).evaluate_mp(radius)
        assert abs(lap_jet.values[0] - exact) < mpmath.mpf(10) ** -25
        assert lap_jet.order == 2


def test_radial_jet_validation():
    with pytest.raises(ValueError):
        RadialJet(radius=0, values=(1, 2, 3))
    with pytest.raises(ValueError):
        RadialJet(radius=-1, values=(1,))
    with pytest.raises(ValueError):
        radial_laplacian(RadialJet(radius=1, values=(1, 2)), Dimension(3, 1))


def test_gaussian_laplacian_at_origin():
    dim = Dimension(3, 1)
    jet = RadialJet.from_closed_form(ClosedFormRadial.gaussian(1), 0, 2)
    assert float(radial_laplacian(jet, dim).values[0]) == pytest.approx(6.0)


def test_evaluate_paths_agree():
    u = ClosedFormRadial.gaussian(2, coeff=3) + ClosedFormRadial.power(-1)
    radii = np.array([0.25, 1.0, 2.5])
    assert np.allclose(u.evaluate(radii), u.evaluate(radii, dps=30), rtol=1e-14)


def test_exact_values_and_singularity():
    u = ClosedFormRadial.rational_profile(1, 1, 1)
    assert u.at(1) == sympy.Rational(1, 2)
    with pytest.raises(ValueError):
        ClosedFormRadial.power(-1).at(0)


def test_arithmetic():
    u = ClosedFormRadial.power(2)
    v = 1 - u * 3 + 2
    assert sympy.simplify(v.expr - (3 - 3 * R**2)) == 0
    assert (u / 2).expr == R**2 / 2
    with pytest.raises(TypeError):
        u / u


def test_half_power_and_dilation():
    dim = Dimension(5, 2)
    u = ClosedFormRadial.gaussian(1)
    assert half_power(u, 2, dim) == iterate_polyharmonic(u, 1, dim)
    assert half_power(u, 1, dim) == u.derivative()
    # the dilation generator annihilates r^{-(n-2k)/2}
    assert dilation_action(ClosedFormRadial.power(Fraction(-1, 2)), dim).is_zero


def test_geometric_breakpoints():
    assert geometric_breakpoints(1.0, 10.0) == [1.0, 4.0, 10.0]
    assert geometric_breakpoints(1.0, 16.0) == [1.0, 4.0, 16.0]
    with pytest.raises(ValueError):
        geometric_breakpoints(0.0, 1.0)


def test_integration():
    value, err = integrate_radial(lambda x: x * x, 0.0, 1.0)
    assert value == pytest.approx(1 / 3, rel=1e-14)
    assert err < 1e-12
    total, _ = integrate_segments(math.exp, [0.0, 1.0, 2.0])
    assert total == pytest.approx(math.e**2 - 1, rel=1e-13)


def test_integration_failure_raises():
    with pytest.raises(QuadratureError):
        integrate_radial(lambda x: math.sin(1 / x) / x, 1e-8, 1.0, limit=5)


def test_integration_failure_ignores_warning_filters():
    before = list(warnings.filters)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(QuadratureError, match="did not converge"):
            integrate_radial(lambda x: math.sin(1 / x) / x, 1e-8, 1.0, limit=5)
    assert warnings.filters == before


def test_integration_in_threads():
    def job(index):
        if index % 2:
            try:
                integrate_radial(lambda x: math.sin(1 / x) / x, 1e-8, 1.0, limit=5)
            except QuadratureError:
                return "failed"
            return "converged"
        value, _ = integrate_radial(lambda x: x**index, 0.0, 1.0)
        return value

    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(job, range(32)))
    for index, result in enumerate(results):
        if index % 2:
            assert result == "failed"
        else:
            assert result == pytest.approx(1 / (index + 1), rel=1e-13)


@pytest.mark.parametrize("n, k", [(5, 2), (7, 3)])
def test_symbolic_laplacian_matches_numeric_jets(n, k):
    dim = Dimension(n, k)
    beta = Fraction(1, n * (n - 2))
    u = ClosedFormRadial.rational_profile(1, beta, dim.weight)
    rng = np.random.default_rng(7)
    for radius in rng.uniform(0.01, 10.0, 100):
        jet = RadialJet.from_closed_form(u, float(radius), 2 * k)
        for j in range(1, k + 1):
            jet = radial_laplacian(jet, dim)
            exact = iterate_polyharmonic(u, j, dim).evaluate_mp(float(radius))
            assert mpmath.almosteq(jet.values[0], exact, rel_eps=1e-12, abs_eps=1e-30)
