import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Tuple

import mpmath
import sympy

from radial_calculus import (
    ClosedFormRadial,
    Dimension,
    Number,
    geometric_breakpoints,
    integrate_segments,
    iterate_polyharmonic,
    to_rational,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KthRoot:
    """The positive real radicand**(1/k), kept exact until evaluated"""

    radicand: int
    k: int

    def __post_init__(self):
        if self.radicand <= 0 or self.k < 1:
            raise ValueError(f"Need radicand > 0 and k >= 1, got {self.radicand}, {self.k}")

    def to_sympy(self) -> sympy.Expr:
        return sympy.Integer(self.radicand) ** sympy.Rational(1, self.k)

    def power(self, exponent) -> sympy.Expr:
        """(radicand**(1/k))**exponent, exact"""
        return sympy.Integer(self.radicand) ** (to_rational(exponent) / self.k)

    def evaluate(self, dps: int = 30) -> mpmath.mpf:
        with mpmath.workdps(dps):
            return mpmath.root(self.radicand, self.k)

    @property
    def is_rational(self) -> bool:
        return self.to_sympy().is_Rational

    def __float__(self) -> float:
        return float(self.evaluate())

    def __str__(self) -> str:
        if self.k == 1:
            return str(self.radicand)
        return f"{self.radicand}^(1/{self.k})"


def c_nk(dim: Dimension) -> KthRoot:
    """[∏_{j=-k}^{k-1} (n+2j)]^{1/k}"""
    product = math.prod(dim.n + 2 * j for j in range(-dim.k, dim.k))
    return KthRoot(product, dim.k)


def b_nk_inverse(dim: Dimension) -> sympy.Expr:
    """2^{k-1}(k-1)! ∏_{i=1}^k (n-2i) ω_{n-1}"""
    n, k = dim.n, dim.k
    chain = math.prod(n - 2 * i for i in range(1, k + 1))
    return sympy.Integer(2 ** (k - 1) * math.factorial(k - 1) * chain) * dim.sphere_area


def b_nk(dim: Dimension) -> sympy.Expr:
    """Constant of the fundamental solution b r^{2k-n} of Δ₀ᵏ"""
    return sympy.simplify(1 / b_nk_inverse(dim))


def b_nk_times_area(dim: Dimension) -> Fraction:
    """b_{n,k} ω_{n-1}, which is rational"""
    n, k = dim.n, dim.k
    chain = math.prod(n - 2 * i for i in range(1, k + 1))
    return Fraction(1, 2 ** (k - 1) * math.factorial(k - 1) * chain)


@dataclass(frozen=True)
class BubbleSpec:
    """Bubble Ũ_μ(r) = μ^{(n-2k)/2}(μ² + r²/𝔠)^{-(n-2k)/2} on flat ℝⁿ"""

    dim: Dimension
    mu: sympy.Expr = field(default=sympy.Integer(1))

    def __post_init__(self):
        mu = to_rational(self.mu)
        if not mu.is_positive:
            raise ValueError(f"Concentration scale must be positive, got mu={self.mu}")
        object.__setattr__(self, "mu", mu)

    @property
    def c_nk(self) -> KthRoot:
        return c_nk(self.dim)

    @property
    def b_nk(self) -> sympy.Expr:
        return b_nk(self.dim)

    def profile(self) -> ClosedFormRadial:
        weight = to_rational(self.dim.weight)
        beta = 1 / self.c_nk.to_sympy()
        return ClosedFormRadial.rational_profile(
            self.mu**2, beta, weight, coeff=self.mu**weight
        )

    def mu_mp(self) -> mpmath.mpf:
        return mpmath.mpf(self.mu.p) / self.mu.q


def bubble_value(spec: BubbleSpec, r: Number, dps: int = 30) -> float:
    """Ũ_μ(r), rounded from a `dps`-digit evaluation"""
    if r < 0:
        raise ValueError(f"Radius must be non-negative, got {r}")
    with mpmath.workdps(dps):
        c = spec.c_nk.evaluate(dps)
        mu = spec.mu_mp()
        w = spec.dim.weight
        b = mpmath.mpf(w.numerator) / w.denominator
        x = mpmath.mpf(r)
        return float(mu**b * (mu**2 + x**2 / c) ** (-b))


def bubble_pde_residual(spec: BubbleSpec, r_grid: Sequence[float], dps: int = 50) -> float:
    """max over the grid of |Δ₀ᵏŨ - Ũ^{2*-1}| / Ũ^{2*-1}, with exact differentiation"""
    dim = spec.dim
    profile = spec.profile()
    lhs = iterate_polyharmonic(profile, dim.k, dim).mp_callable()
    u = profile.mp_callable()
    p = dim.crit_exp
    worst = mpmath.mpf(0)
    with mpmath.workdps(dps):
        exponent = mpmath.mpf(p.numerator - p.denominator) / p.denominator
        for r in r_grid:
            if r < 0:
                raise ValueError(f"Grid radius must be non-negative, got {r}")
            x = mpmath.mpf(r)
            rhs = u(x) ** exponent
            worst = max(worst, abs(lhs(x) - rhs) / rhs)
    logger.debug(f"bubble residual {dim} mu={spec.mu}: {float(worst):.3e}")
    return float(worst)


def bubble_center_defect(spec: BubbleSpec) -> sympy.Expr:
    """Δ₀ᵏŨ(0) - Ũ(0)^{2*-1}, exact"""
    dim = spec.dim
    profile = spec.profile()
    lhs = iterate_polyharmonic(profile, dim.k, dim).at(0)
    rhs = profile.at(0) ** to_rational(dim.crit_exp - 1)
    return sympy.simplify(lhs - rhs)


def mass_integral_closed_form(dim: Dimension, dps: int = 30) -> mpmath.mpf:
    """∫_{ℝⁿ} U^{2*-1} dx = ω 𝔠^{n/2} B(n/2, k) / 2"""
    with mpmath.workdps(dps):
        c = c_nk(dim).evaluate(dps)
        half_n = mpmath.mpf(dim.n) / 2
        return dim.sphere_area_mp(dps) * c**half_n * mpmath.beta(half_n, dim.k) / 2


def mass_integral_quadrature(dim: Dimension, cutoff_factor: float = 1e4) -> Tuple[float, float]:
    """ω ∫₀^∞ U^{2*-1} r^{n-1} dr by adaptive quadrature to R = cutoff_factor·√𝔠
    plus the analytic tail of the leading power 𝔠^{(n+2k)/2} r^{-(n+2k)}.

    Returns (value, error estimate).
    """
    n, k = dim.n, dim.k
    c = float(c_nk(dim))
    decay = (n + 2 * k) / 2

    def integrand(r: float) -> float:
        return r ** (n - 1) * (1.0 + r * r / c) ** (-decay)

    cutoff = cutoff_factor * math.sqrt(c)
    breakpoints = [0.0] + geometric_breakpoints(math.sqrt(c), cutoff)
    body, error = integrate_segments(integrand, breakpoints, epsrel=1e-11)
    tail = c**decay * cutoff ** (-2 * k) / (2 * k)
    area = float(dim.sphere_area_mp())
    logger.debug(f"mass integral {dim}: body={body:.15e} tail={tail:.3e}")
    return area * (body + tail), area * error


def bubble_mass_identity(spec: BubbleSpec) -> float:
    """|𝔠^{(n-2k)/2} - b_{n,k} ∫U^{2*-1}| / 𝔠^{(n-2k)/2}"""
    if spec.mu != 1:
        raise ValueError(f"Mass identity is evaluated at mu=1, got mu={spec.mu}")
    dim = spec.dim
    integral, _ = mass_integral_quadrature(dim)
    target = float(spec.c_nk.power(dim.weight))
    value = float(spec.b_nk) * integral
    return abs(target - value) / target
