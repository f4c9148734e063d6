import random
from fractions import Fraction

import numpy as np
import pytest
import sympy

from harmonic_poly import (
    HomPoly,
    MeanZeroError,
    NonInvertibleError,
    brute_force_weighted_laplacian,
    coordinates,
    decompose,
    green_correction_pipeline,
    invert_weighted,
    r2_laplacian_eigenvalue,
    sphere_average,
    vanishing_sphere_integrals,
    weighted_factor,
    weighted_power_laplacian,
)
from radial_calculus import Dimension

pytestmark = pytest.mark.unit


def _random_poly(n, degree, rng, terms=3):
    coeffs = {}
    for _ in range(terms):
        exponents = [0] * n
        for _ in range(degree):
            exponents[rng.randrange(n)] += 1
        coeffs[tuple(exponents)] = coeffs.get(tuple(exponents), 0) + rng.choice([-2, -1, 1, 3])
    return HomPoly.from_dict(n, coeffs, degree)


def test_construction_and_validation():
    x1, x2, x3 = coordinates(3)
    psi = HomPoly.from_expr(3, x1 * x2 + x3**2)
    assert psi.degree == 2
    assert psi.coefficients() == {(0, 0, 2): Fraction(1), (1, 1, 0): Fraction(1)}
    with pytest.raises(ValueError):
        HomPoly.from_expr(3, x1 + x2**2)
    with pytest.raises(ValueError):
        HomPoly.from_expr(3, 0)
    with pytest.raises(ValueError):
        HomPoly.from_dict(3, {(1, 0): 1})
    with pytest.raises(ValueError):
        HomPoly.coordinate(3, 0) + HomPoly.r_squared(3)


def test_laplacian_sign_convention():
    """Δ₀ = -Σ∂ᵢ², so Δ₀r² = -2n"""
    assert HomPoly.r_squared(3).laplacian() == HomPoly.constant(3, -6)
    assert HomPoly.coordinate(4, 2).laplacian().is_zero


def test_evaluate_and_gradient():
    x1, x2 = coordinates(2)
    psi = HomPoly.from_expr(2, x1**2 * x2)
    points = np.array([[1.0, 2.0], [-1.0, 0.5]])
    assert np.allclose(psi.evaluate(points), [2.0, 0.5])
    grad = psi.gradient()
    assert grad[0] == HomPoly.from_expr(2, 2 * x1 * x2)
    assert grad[1] == HomPoly.from_expr(2, x1**2)
    assert psi.grad_dot(psi) == HomPoly.from_expr(2, 4 * x1**2 * x2**2 + x1**4)


def test_exact_division():
    r2 = HomPoly.r_squared(3)
    assert (r2 * r2 * HomPoly.coordinate(3, 1)).exact_div_r2(2) == HomPoly.coordinate(3, 1)
    with pytest.raises(ValueError):
        HomPoly.coordinate(3, 0).__mul__(HomPoly.coordinate(3, 1)).exact_div_r2()


@pytest.mark.parametrize(
    "n, monom, expected",
    [
        (3, (2, 0, 0), Fraction(1, 3)),
        (5, (2, 0, 0, 0, 0), Fraction(1, 5)),
        (3, (4, 0, 0), Fraction(1, 5)),
        (4, (2, 2, 0, 0), Fraction(1, 24)),
        (3, (1, 1, 0), Fraction(0)),
        (3, (3, 0, 0), Fraction(0)),
    ],
)
def test_sphere_average(n, monom, expected):
    assert sphere_average(HomPoly.from_dict(n, {monom: 1})) == expected


def test_decomposition_of_square():
    """x₁² = (x₁² - r²/3) + r²/3 in ℝ³"""
    x1, _, _ = coordinates(3)
    parts = decompose(HomPoly.from_expr(3, x1**2))
    r2 = HomPoly.r_squared(3)
    assert parts.component(1) == HomPoly.constant(3, Fraction(1, 3))
    assert parts.component(0) == HomPoly.from_expr(3, x1**2) - r2 / 3
    assert parts.component(0).laplacian().is_zero


@pytest.mark.parametrize("n", [3, 4, 6])
@pytest.mark.parametrize("ell", [0, 1, 2, 3, 4, 5, 6])
def test_decomposition_recombines(n, ell):
    psi = _random_poly(n, ell, random.Random(100 * n + ell), terms=4)
    parts = decompose(psi)
    assert parts.recombine() == psi
    for p, h in parts.components:
        assert h.degree == ell - 2 * p
        assert h.laplacian().is_zero


def test_r2_laplacian_eigenvalue():
    # r²Δ₀(r²) = -2n r²
    assert r2_laplacian_eigenvalue(5, 2, 1) == -10


def test_fundamental_power_kernel():
    """r^{2k-n} is annihilated by Δ₀ᵏ"""
    for n, k in [(5, 2), (7, 3), (9, 4)]:
        assert weighted_factor(Fraction(2 * k - n), n, 0, 0, k) == 0


@pytest.mark.parametrize("n, k, ell", [(5, 2, 2), (5, 2, 3), (7, 3, 2), (6, 1, 4)])
def test_weighted_laplacian_matches_brute_force(n, k, ell):
    psi = _random_poly(n, ell, random.Random(ell + 10 * n))
    q = 2 * k - n
    fast = weighted_power_laplacian(q, psi, k).poly.as_expr()
    brute = brute_force_weighted_laplacian(q, psi, k)
    assert sympy.expand(fast - brute) == 0


def test_weighted_power_bounds():
    dim = Dimension(5, 2)
    psi = HomPoly.coordinate(5, 0)
    result = weighted_power_laplacian(-1, psi, 2, dim)
    assert result.exponent == Fraction(-5)
    assert result.homogeneity == Fraction(-4)
    with pytest.raises(ValueError):
        weighted_power_laplacian(-1, psi, 3, dim)
    with pytest.raises(ValueError):
        weighted_power_laplacian(-1, psi, -1)


@pytest.mark.parametrize("n, k", [(5, 2), (7, 3), (6, 2)])
@pytest.mark.parametrize("ell", [1, 2, 3, 4])
def test_inversion_round_trip(n, k, ell):
    dim = Dimension(n, k)
    q = 2 * k - n
    T = weighted_power_laplacian(q, _random_poly(n, ell, random.Random(7 * ell + n)), k).poly
    psi = invert_weighted(q, T, dim)
    assert weighted_power_laplacian(q, psi, k).poly == T


def test_inversion_kernel_raises():
    """At n = 2k+4 the r⁴ component of degree four sits in the kernel"""
    dim = Dimension(8, 2)
    r2 = HomPoly.r_squared(8)
    with pytest.raises(NonInvertibleError) as exc_info:
        invert_weighted(-4, r2 * r2, dim)
    assert exc_info.value.p == 2
    assert exc_info.value.ell_prime == 0


def test_inversion_skips_zero_kernel_component(caplog):
    dim = Dimension(8, 2)
    x1, x2 = coordinates(8)[:2]
    T = HomPoly.from_expr(8, x1**3 * x2 - x1 * x2**3)
    psi = invert_weighted(-4, T, dim)
    assert weighted_power_laplacian(-4, psi, 2).poly == T
    assert "Kernel direction" in caplog.text


def _trace_free(n, rng):
    matrix = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            matrix[a][b] = matrix[b][a] = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
    matrix[n - 1][n - 1] -= sum(matrix[a][a] for a in range(n))
    return matrix


@pytest.mark.parametrize("n, k", [(8, 2), (9, 2)])
def test_correction_pipeline(n, k):
    dim = Dimension(n, k)
    rng = random.Random(n)
    s_hess, ric_lap = _trace_free(n, rng), _trace_free(n, rng)
    x1, x2 = coordinates(n)[:2]
    r5 = HomPoly.from_expr(n, x1**5 - 10 * x1**3 * x2**2 + 5 * x1 * x2**4)
    psi4, psi5 = green_correction_pipeline(s_hess, ric_lap, r5, dim)
    assert sphere_average(psi4) == 0
    assert sphere_average(psi5) == 0
    t1 = (HomPoly.quadratic_form(s_hess) + HomPoly.quadratic_form(ric_lap)) * HomPoly.r_squared(n)
    assert weighted_power_laplacian(2 * k - n, psi4, k).poly == t1
    assert weighted_power_laplacian(2 * k - n, psi5, k).poly == r5
    assert all(value == 0 for value in vanishing_sphere_integrals(psi4, dim).values())


def test_correction_pipeline_validation():
    dim = Dimension(8, 2)
    zero5 = HomPoly.zero(8, 5)
    identity = [[1 if a == b else 0 for b in range(8)] for a in range(8)]
    with pytest.raises(ValueError) as exc_info:
        green_correction_pipeline(identity, identity, zero5, Dimension(7, 2))
    assert "2k+4" in str(exc_info.value)
    skew = [row[:] for row in identity]
    skew[0][1] = 1
    with pytest.raises(ValueError) as exc_info:
        green_correction_pipeline(skew, identity, zero5, dim)
    assert "not symmetric" in str(exc_info.value)
    # identity has trace 8: r⁴ lands in the kernel
    with pytest.raises(NonInvertibleError):
        green_correction_pipeline(identity, identity, zero5, dim)


def test_mean_zero_error_carries_average():
    error = MeanZeroError("bad", Fraction(1, 3))
    assert error.average == Fraction(1, 3)
    assert isinstance(error, ValueError)


def test_vanishing_sphere_integrals_of_a_pure_power():
    """ψ = r⁴ in n = 9, k = 2: R₀ = r⁻¹, Δ₀r⁻¹ = 6r⁻³, x·∇ acts by the homogeneity"""
    dim = Dimension(9, 2)
    psi = HomPoly.r_squared(9) * HomPoly.r_squared(9)
    integrals = vanishing_sphere_integrals(psi, dim)
    assert integrals == {
        "lap0_R0": 1,
        "normal_lap0_R0": -1,
        "euler_lap0_R0": -1,
        "lap1_R0": 6,
        "normal_lap1_R0": -18,
        "euler_lap1_R0": -18,
        "lap0_euler_R0": -1,
        "normal_lap0_euler_R0": 1,
        "euler_lap0_euler_R0": 1,
        "lap1_euler_R0": -6,
        "normal_lap1_euler_R0": 18,
        "euler_lap1_euler_R0": 18,
    }


def test_vanishing_sphere_integrals_track_the_average():
    dim = Dimension(8, 2)
    x1 = HomPoly.coordinate(8, 0)
    psi = x1 * x1 * x1 * x1
    integrals = vanishing_sphere_integrals(psi, dim)
    assert integrals["lap0_R0"] == sphere_average(psi) != 0
    # R₀ = r⁻⁴x₁⁴ is homogeneous of degree 0
    assert integrals["euler_lap0_R0"] == 0
    assert integrals["normal_lap0_R0"] == 0
    # Δ₀ of a degree-0 function is r⁻² times a sphere Laplacian, which averages to 0
    assert integrals["lap1_R0"] == 0
