import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import sympy

from bubble import b_nk
from fields import PolyRadialField
from harmonic_poly import HomPoly, MeanZeroError, sphere_average
from pohozaev import (
    LimitResult,
    SphericalQuadrature,
    SurfaceIntegrator,
    bilinear_form,
    boundary_functional,
    halving_radii,
    richardson_limit,
    theta_constant,
)
from radial_calculus import ClosedFormRadial, Dimension, geometric_breakpoints, integrate_segments, to_rational

logger = logging.getLogger(__name__)


class CorrectionContributionError(RuntimeError):
    """Raised when the ψ₄/ψ₅ corrections leave a nonzero trace in the mass limit"""

    def __init__(self, message: str, contribution: float):
        super().__init__(message)
        self.contribution = contribution


def fundamental_solution(dim: Dimension) -> ClosedFormRadial:
    """G₀(r) = b_{n,k} r^{2k-n}"""
    return ClosedFormRadial.power(2 * dim.k - dim.n, b_nk(dim))


def mass_constant(dim: Dimension) -> sympy.Expr:
    """c_{n,k} = Θ(n,k) b_{n,k}, so that P_k(r;G) → c_{n,k}·mass"""
    return sympy.simplify(theta_constant(dim) * b_nk(dim))


@dataclass
class DiracCheck:
    """∫ G₀ Δ₀ᵏφ against φ(0)"""

    integral: float
    expected: float
    error_estimate: float

    @property
    def defect(self) -> float:
        return abs(self.integral - self.expected)


def dirac_check(phi: PolyRadialField, dim: Dimension, support_radius: float = 12.0) -> DiracCheck:
    """Integrates G₀Δ₀ᵏφ shell by shell: sphere averages first (exact), then
    b ω ∫₀^R ρ^{2k-1} mean(Δ₀ᵏφ)(ρ) dρ. φ must be negligible beyond `support_radius`."""
    if phi.n != dim.n:
        raise ValueError(f"Test function lives in n={phi.n}, expected n={dim.n}")
    mean = phi.iterate_laplacian(dim.k).spherical_mean()
    profile = mean.numpy_callable()
    k = dim.k

    def integrand(rho: float) -> float:
        return rho ** (2 * k - 1) * float(profile(rho))

    breakpoints = [0.0] + geometric_breakpoints(0.5, support_radius, ratio=2.0)
    value, err = integrate_segments(integrand, breakpoints, epsrel=1e-12)
    factor = float(b_nk(dim) * dim.sphere_area)
    expected = float(phi.value_at_origin())
    result = DiracCheck(integral=factor * value, expected=expected, error_estimate=factor * err)
    logger.debug(f"Dirac check {dim}: integral={result.integral:.15e} phi(0)={expected:.15e}")
    return result


def _require_mean_zero(psi: Optional[HomPoly], degree: int, dim: Dimension) -> None:
    if psi is None:
        return
    if psi.n != dim.n:
        raise ValueError(f"ψ{degree} lives in n={psi.n}, expected n={dim.n}")
    if psi.degree != degree and not psi.is_zero:
        raise ValueError(f"ψ{degree} must be homogeneous of degree {degree}, got degree {psi.degree}")
    average = sphere_average(psi) if not psi.is_zero else 0
    if average:
        raise MeanZeroError(f"ψ{degree} must have zero sphere average, got {average}", average)


@dataclass(frozen=True)
class GreenModel:
    """G = Λ r^{2k-n}(1 + ψ₄ + ψ₅) + A + h near the pole of a conformally flat chart,
    with Λ = b_{n,k}, constant mass A and a smooth remainder h"""

    dim: Dimension
    mass: object = 0
    psi4: Optional[HomPoly] = None
    psi5: Optional[HomPoly] = None
    remainder: Optional[PolyRadialField] = None

    def __post_init__(self):
        object.__setattr__(self, "mass", to_rational(self.mass))
        _require_mean_zero(self.psi4, 4, self.dim)
        _require_mean_zero(self.psi5, 5, self.dim)
        if self.remainder is not None and self.remainder.n != self.dim.n:
            raise ValueError(f"Remainder lives in n={self.remainder.n}, expected n={self.dim.n}")

    @property
    def lambda_coeff(self) -> sympy.Expr:
        return b_nk(self.dim)

    def _g0(self) -> PolyRadialField:
        return PolyRadialField.radial(fundamental_solution(self.dim), self.dim.n)

    def correction_part(self) -> PolyRadialField:
        n = self.dim.n
        field = PolyRadialField.zero(n)
        for psi in (self.psi4, self.psi5):
            if psi is not None:
                field = field + self._g0().times_poly(psi)
        return field

    def regular_part(self) -> PolyRadialField:
        field = PolyRadialField.constant(self.dim.n, self.mass)
        if self.remainder is not None:
            field = field + self.remainder
        return field

    def as_field(self) -> PolyRadialField:
        return self._g0() + self.correction_part() + self.regular_part()

    def regular_value_at_origin(self) -> sympy.Expr:
        """A + h(0)"""
        return self.regular_part().value_at_origin()

    def evaluate(self, points) -> np.ndarray:
        return self.as_field().values(points)


@dataclass
class MassLimitResult(LimitResult):
    correction_contribution: float = 0.0


def mass_limit(
    model: GreenModel,
    radii: Optional[Sequence[float]] = None,
    method: str = "exact",
    contribution_tol: float = 1e-9,
) -> MassLimitResult:
    """lim_{r→0} P_k(r;G), compared with c_{n,k}(A + h(0)).

    The cross term 2Φ(G₀ + A, G₀(ψ₄+ψ₅)) must vanish on every sampled radius,
    otherwise CorrectionContributionError is raised.
    """
    dim = model.dim
    radii = list(radii) if radii is not None else halving_radii()
    integ = SurfaceIntegrator(dim, method)
    u = model.as_field()
    values = [boundary_functional(u, r, dim, integrator=integ) for r in radii]
    limit, spread = richardson_limit(radii, values)

    contribution = 0.0
    correction = model.correction_part()
    if not correction.is_zero:
        leading = model._g0() + PolyRadialField.constant(dim.n, model.mass)
        for r in radii[-3:]:
            cross = 2 * bilinear_form(leading, correction, r, dim, integrator=integ)
            contribution = max(contribution, abs(float(cross)))
        if contribution > contribution_tol * max(1.0, abs(limit)):
            raise CorrectionContributionError(
                f"Corrections contribute {contribution:.3e} to the mass limit at {dim}", contribution
            )

    expected = float(mass_constant(dim) * model.regular_value_at_origin())
    logger.info(f"mass limit {dim}: numeric={limit:.12e} expected={expected:.12e} spread={spread:.3e}")
    return MassLimitResult(
        limit=limit,
        expected=expected,
        spread=spread,
        radii=radii,
        values=[float(v) for v in values],
        correction_contribution=contribution,
    )


def green_bound_constant(
    model: GreenModel,
    r0: float,
    radial_samples: int = 40,
    sphere_degree: int = 8,
) -> float:
    """Smallest C ≥ 1 with C⁻¹ r^{2k-n} ≤ G ≤ C r^{2k-n} on the sampled
    punctured ball 0 < |x| ≤ r0 (geometric radii times a spherical rule)"""
    if r0 <= 0:
        raise ValueError(f"Ball radius must be positive, got {r0}")
    dim = model.dim
    directions = SphericalQuadrature.product(dim.n, sphere_degree).nodes
    radii = r0 * np.geomspace(1e-4, 1.0, radial_samples)
    ratios: List[np.ndarray] = []
    for rho in radii:
        g = model.evaluate(rho * directions)
        ratios.append(g * rho ** (dim.n - 2 * dim.k))
    ratio = np.concatenate(ratios)
    if np.any(ratio <= 0):
        raise ValueError(f"Green function model is not positive on B(0,{r0})")
    constant = float(max(1.0, ratio.max(), 1.0 / ratio.min()))
    logger.debug(f"Green bound {dim} on B(0,{r0}): C={constant:.6e}")
    return constant

