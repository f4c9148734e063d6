import math
from fractions import Fraction

import numpy as np
import pytest

from radial_calculus import Dimension
from sphere_gjms import (
    GjmsSphereSpec,
    PoleNotMaximumError,
    SpectralRadialField,
    apply_gjms,
    blowup_diagnostics,
    comparison_bubble,
    concentration_scale,
    constant_solution,
    continue_in_p,
    gjms_multiplier,
    laplacian_eigenvalue,
    solve_picard,
    solve_subcritical,
    spectral_residual,
    sphere_volume,
    stereographic_bubble,
    stereographic_profile,
    zonal_transform,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def spec31():
    return GjmsSphereSpec(Dimension(3, 1))


def test_constants_three_sphere(spec31):
    assert spec31.shift_constants == (Fraction(3, 4),)
    assert spec31.q_constant == Fraction(3, 2)
    assert gjms_multiplier(spec31, 1) == Fraction(15, 4)


def test_constants_five_sphere():
    spec = GjmsSphereSpec(Dimension(5, 2))
    assert spec.shift_constants == (Fraction(15, 4), Fraction(7, 4))
    assert spec.product_constant == Fraction(105, 16)
    assert spec.q_constant == Fraction(105, 8)


def test_laplacian_eigenvalue():
    assert laplacian_eigenvalue(3, 2) == 8
    with pytest.raises(ValueError):
        laplacian_eigenvalue(3, -1)


@pytest.mark.parametrize("n", [3, 5])
def test_zonal_basis_is_orthonormal(n):
    transform = zonal_transform(n, 12)
    gram = transform.basis.T @ (transform.weights[:, None] * transform.basis)
    assert np.allclose(gram, np.eye(13), atol=1e-12)


def test_zonal_transform_needs_positive_truncation():
    with pytest.raises(ValueError):
        zonal_transform(3, 0)


def test_constant_field():
    field = SpectralRadialField.constant(3, 8, 2.0)
    assert np.allclose(field.values([1.0, 0.3, -0.5]), 2.0)
    assert field.norm() == pytest.approx(2.0 * math.sqrt(2 * math.pi**2))
    assert field.tail_ratio() == 0.0


def test_gjms_is_self_adjoint():
    spec = GjmsSphereSpec(Dimension(5, 2))
    rng = np.random.default_rng(0)
    u = SpectralRadialField(5, rng.standard_normal(17))
    v = SpectralRadialField(5, rng.standard_normal(17))
    assert apply_gjms(spec, u).inner(v) == pytest.approx(u.inner(apply_gjms(spec, v)), rel=1e-12)
    with pytest.raises(ValueError):
        apply_gjms(spec, SpectralRadialField(3, np.ones(4)))


@pytest.mark.parametrize("mu", [1.0, 0.5, 2.0])
def test_stereographic_bubble_pole_value(spec31, mu):
    u = stereographic_bubble(spec31, mu, L=48)
    assert u.at_pole() == pytest.approx(mu**-0.5, rel=1e-10)


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2)])
def test_stereographic_bubble_solves_critical_equation(n, k):
    spec = GjmsSphereSpec(Dimension(n, k))
    assert spectral_residual(spec, stereographic_bubble(spec, 1.0, L=32)) < 1e-8


def test_stereographic_bubble_rejects_bad_scale(spec31):
    with pytest.raises(ValueError):
        stereographic_bubble(spec31, 0.0)


@pytest.mark.parametrize("mu", [0.2, 0.3])
def test_stereographic_residual_decays_geometrically(spec31, mu):
    r16, r32, r64 = (spectral_residual(spec31, stereographic_bubble(spec31, mu, L=L)) for L in (16, 32, 64))
    assert r32 <= r16 / 10
    assert r64 <= r32 / 100


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2), (7, 3)])
def test_energy_identity_for_constant_solution(n, k):
    spec = GjmsSphereSpec(Dimension(n, k))
    u = constant_solution(spec, 3.0, L=16)
    value = u.at_pole()
    expected = float(spec.product_constant) * value**2 * sphere_volume(n)
    assert u.inner(apply_gjms(spec, u)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n, k", [(3, 1), (5, 2)])
def test_energy_identity_for_stereographic_bubble(n, k):
    """∫u·Pu = ∫u^{2*} for a critical solution"""
    spec = GjmsSphereSpec(Dimension(n, k))
    p = float(spec.dim.crit_exp)
    u = stereographic_bubble(spec, 1.0, L=64)
    profile = stereographic_profile(spec, 1.0)
    power = SpectralRadialField.from_function(n, 64, lambda x: profile(x) ** p)
    total = power.coefficients[0] * math.sqrt(sphere_volume(n))
    assert u.inner(apply_gjms(spec, u)) == pytest.approx(total, rel=1e-10)


def test_constant_solution_needs_no_newton_steps(spec31):
    init = constant_solution(spec31, 4.0, L=16)
    result = solve_subcritical(spec31, 4.0, init)
    assert result.iterations <= 1
    assert result.field.at_pole() == pytest.approx(math.sqrt(0.75), rel=1e-12)
    with pytest.raises(ValueError):
        constant_solution(spec31, 2.0)


def test_newton_returns_to_constant(spec31):
    """Subcritical positive solutions on S³ are constant"""
    base = constant_solution(spec31, 4.0, L=16)
    bump = SpectralRadialField.from_function(3, 16, lambda x: 0.05 * x)
    result = solve_subcritical(spec31, 4.0, base + bump)
    assert result.residual <= 1e-10
    assert np.allclose(result.field.grid_values(), math.sqrt(0.75), rtol=1e-8)


def test_newton_and_picard_agree_with_weight(spec31):
    def weight(x):
        return 1 + 0.1 * x

    init = constant_solution(spec31, 2.5, L=24)
    newton = solve_subcritical(spec31, 2.5, init, f=weight)
    picard = solve_picard(spec31, 2.5, init, f=weight)
    assert (newton.field - picard.field).norm() <= 1e-8 * newton.field.norm()


def test_solver_validation(spec31):
    init = constant_solution(spec31, 4.0, L=16)
    with pytest.raises(ValueError):
        solve_subcritical(spec31, 7.0, init)
    with pytest.raises(ValueError):
        solve_subcritical(spec31, 2.0, init)
    with pytest.raises(ValueError) as exc_info:
        solve_subcritical(spec31, 4.0, SpectralRadialField.constant(3, 16, -1.0))
    assert "positive" in str(exc_info.value)
    with pytest.raises(ValueError):
        solve_subcritical(spec31, 4.0, init, f=lambda x: x)


def test_concentration_scale():
    assert concentration_scale(4.0, 4.0, Dimension(3, 1)) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        concentration_scale(0.0, 4.0, Dimension(3, 1))


def test_comparison_bubble_at_critical_exponent():
    dim = Dimension(3, 1)
    value = comparison_bubble(0.5, 6.0, dim, np.array([0.0]))
    assert value[0] == pytest.approx(math.sqrt(2))


def test_blowup_conformal_chart_recovers_scale(spec31):
    u = stereographic_bubble(spec31, 0.5, L=48)
    diagnostics = blowup_diagnostics(u, 6.0, Dimension(3, 1))
    assert diagnostics.mu == pytest.approx(0.5, rel=1e-9)
    assert diagnostics.profile_distance < 1e-8
    assert diagnostics.radius_of_influence == diagnostics.domain_radius
    assert diagnostics.chart == "conformal"


@pytest.mark.parametrize("n, k, mu", [(5, 2, 1.0), (5, 2, 0.5), (5, 2, 0.1), (3, 1, 1.0), (3, 1, 0.5)])
def test_blowup_recovers_scale_at_full_resolution(n, k, mu):
    dim = Dimension(n, k)
    u = stereographic_bubble(GjmsSphereSpec(dim), mu, L=128)
    diagnostics = blowup_diagnostics(u, float(dim.crit_exp), dim)
    assert abs(diagnostics.mu - mu) <= 1e-10 * mu
    assert diagnostics.profile_distance <= 1e-7


def test_blowup_round_chart(spec31):
    u = stereographic_bubble(spec31, 0.5, L=48)
    diagnostics = blowup_diagnostics(u, 6.0, Dimension(3, 1), chart="round")
    assert diagnostics.mu == pytest.approx(0.5, rel=1e-9)
    assert 0 < diagnostics.radius_of_influence <= diagnostics.domain_radius
    assert len(diagnostics.distances) == len(diagnostics.deviations)


def test_blowup_requires_maximum_at_pole():
    u = SpectralRadialField.from_function(3, 8, lambda x: 2 - x)
    with pytest.raises(PoleNotMaximumError):
        blowup_diagnostics(u, 6.0, Dimension(3, 1))


def test_blowup_validation(spec31):
    u = stereographic_bubble(spec31, 1.0, L=16)
    with pytest.raises(ValueError):
        blowup_diagnostics(u, 6.0, Dimension(3, 1), epsilon=1.5)
    with pytest.raises(ValueError):
        blowup_diagnostics(u, 6.0, Dimension(3, 1), chart="polar")
    with pytest.raises(ValueError):
        blowup_diagnostics(u, 6.0, Dimension(5, 2))


def test_continuation_from_constant(spec31):
    branch = continue_in_p(spec31, [2.5], L=16)
    assert len(branch) == 1
    assert branch[0].max_u == pytest.approx(0.5625, rel=1e-12)
    assert branch[0].iterations <= 1


def test_continuation_five_sphere():
    spec = GjmsSphereSpec(Dimension(5, 2))
    branch = continue_in_p(spec, [3.0, 3.5], L=16)
    assert branch[1].max_u == pytest.approx((105 / 16) ** (1 / 1.5), rel=1e-8)
    assert branch[1].mu == pytest.approx(concentration_scale(branch[1].max_u, 3.5, spec.dim), rel=1e-8)
