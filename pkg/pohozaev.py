import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import sympy
from scipy import special

from fields import Field, PolyRadialField, SampledField, mp_fraction, sample, sample_gradients
from harmonic_poly import sphere_average
from radial_calculus import ClosedFormRadial, Dimension, integrate_radial, to_rational

logger = logging.getLogger(__name__)

SURFACE_METHODS = ("radial", "exact", "quadrature")
# Gauss-Legendre nodes for the radial integral of the differentiation error
ERROR_NODES = 24


class ExtrapolationError(RuntimeError):
    """Raised when a Richardson table does not settle"""


@dataclass(frozen=True, eq=False)
class SphericalQuadrature:
    """Quadrature rule on the unit sphere S^{n-1} ⊂ ℝⁿ.

    `product` is the full Gauss-Gegenbauer x uniform-azimuth product rule;
    `axisymmetric` only resolves integrands that depend on x₁ alone.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    @classmethod
    def product(cls, n: int, degree: int) -> "SphericalQuadrature":
        if n < 2:
            raise ValueError(f"Sphere rule needs n >= 2, got {n}")
        gauss = degree // 2 + 1
        azimuth = max(degree + 1, 2)
        phi = 2 * np.pi * np.arange(azimuth) / azimuth
        nodes = np.column_stack([np.cos(phi), np.sin(phi)])
        weights = np.full(azimuth, 2 * np.pi / azimuth)
        # S^d from S^{d-1}: x = (t, sqrt(1-t²) y) with weight (1-t²)^{(d-2)/2}
        for d in range(2, n):
            t, wt = special.roots_gegenbauer(gauss, (d - 1) / 2)
            s = np.sqrt(1 - t**2)
            nodes = np.vstack(
                [np.column_stack([np.full(len(nodes), ti), si * nodes]) for ti, si in zip(t, s)]
            )
            weights = np.concatenate([wi * weights for wi in wt])
        return cls(n, nodes, weights, degree)

    @classmethod
    def axisymmetric(cls, n: int, degree: int) -> "SphericalQuadrature":
        gauss = degree // 2 + 1
        t, wt = special.roots_gegenbauer(gauss, (n - 2) / 2)
        nodes = np.zeros((gauss, n))
        nodes[:, 0] = t
        nodes[:, 1] = np.sqrt(1 - t**2)
        area = 2 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2)
        return cls(n, nodes, wt * area, degree)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


class SurfaceIntegrator:
    """Integrals over ∂B(0,r) of products and gradient pairings of fields.

    method="radial": radial fields, evaluated at one point in extended precision.
    method="exact": polynomial-times-radial fields, via exact sphere averages.
    method="quadrature": any field, via a product rule on the sphere.
    """

    def __init__(self, dim: Dimension, method: str = "radial", quadrature_degree: int = 16, dps: int = 30):
        if method not in SURFACE_METHODS:
            raise ValueError(f"Unknown surface method '{method}', expected one of {SURFACE_METHODS}")
        self.dim = dim
        self.method = method
        self.dps = dps
        self.area = dim.sphere_area_mp(dps)
        self.rule = SphericalQuadrature.product(dim.n, quadrature_degree) if method == "quadrature" else None
        self.last_error = 0.0

    def _require(self, *fields: Field) -> None:
        for f in fields:
            if self.method in ("radial", "exact") and not isinstance(f, PolyRadialField):
                raise ValueError(f"Method '{self.method}' needs closed-form fields, got {type(f).__name__}")
            if self.method == "radial" and not f.is_radial:
                raise ValueError("Method 'radial' needs radial fields; use 'exact' or 'quadrature'")

    def product(self, a: Field, b: Field, r):
        """∫_{∂B_r} a·b dσ; the differentiation error of sampled fields is left in `last_error`"""
        self._require(a, b)
        n = self.dim.n
        self.last_error = 0.0
        if self.method == "quadrature":
            pts = float(r) * self.rule.nodes
            va, ea = sample(a, pts)
            vb, eb = sample(b, pts)
            shell = float(r) ** (n - 1)
            self.last_error = shell * self.rule.integrate(np.abs(ea * vb) + np.abs(va * eb) + ea * eb)
            return shell * self.rule.integrate(va * vb)
        with mpmath.workdps(self.dps):
            x = mpmath.mpf(r)
            if self.method == "radial":
                va = a.radial_profile().evaluate_mp(x, self.dps)
                vb = b.radial_profile().evaluate_mp(x, self.dps)
                return self.area * x ** (n - 1) * va * vb
            total = mpmath.mpf(0)
            for g1, p1 in a.terms:
                for g2, p2 in b.terms:
                    avg = sphere_average(p1 * p2)
                    if avg == 0:
                        continue
                    total += (
                        g1.evaluate_mp(x, self.dps)
                        * g2.evaluate_mp(x, self.dps)
                        * x ** (p1.degree + p2.degree)
                        * mp_fraction(avg)
                    )
            return self.area * x ** (n - 1) * total

    def grad_dot(self, a: Field, b: Field, r):
        """∫_{∂B_r} ∇a·∇b dσ"""
        self._require(a, b)
        n = self.dim.n
        self.last_error = 0.0
        if self.method == "quadrature":
            pts = float(r) * self.rule.nodes
            ga, ea = sample_gradients(a, pts)
            gb, eb = sample_gradients(b, pts)
            shell = float(r) ** (n - 1)
            spread = np.abs(ea * gb) + np.abs(ga * eb) + ea * eb
            self.last_error = shell * self.rule.integrate(np.sum(spread, axis=1))
            return shell * self.rule.integrate(np.sum(ga * gb, axis=1))
        with mpmath.workdps(self.dps):
            x = mpmath.mpf(r)
            if self.method == "radial":
                da = a.radial_profile().derivative().evaluate_mp(x, self.dps)
                db = b.radial_profile().derivative().evaluate_mp(x, self.dps)
                return self.area * x ** (n - 1) * da * db
            total = mpmath.mpf(0)
            for g1, p1 in a.terms:
                for g2, p2 in b.terms:
                    l1, l2 = p1.degree, p2.degree
                    avg = sphere_average(p1 * p2)
                    avg_grad = sphere_average(p1.grad_dot(p2)) if l1 and l2 else Fraction(0)
                    if avg == 0 and avg_grad == 0:
                        continue
                    v1, v2 = g1.evaluate_mp(x, self.dps), g2.evaluate_mp(x, self.dps)
                    d1 = g1.derivative().evaluate_mp(x, self.dps)
                    d2 = g2.derivative().evaluate_mp(x, self.dps)
                    # ∇(gψ) = g' ψ x/r + g ∇ψ and x·∇ψ = ℓψ
                    radial = (d1 * d2 + (l2 * d1 * v2 + l1 * v1 * d2) / x) * x ** (l1 + l2)
                    total += radial * mp_fraction(avg)
                    if avg_grad:
                        total += v1 * v2 * x ** (l1 + l2 - 2) * mp_fraction(avg_grad)
            return self.area * x ** (n - 1) * total


def _as_mp(value, dps: int):
    with mpmath.workdps(dps):
        return mpmath.mpf(value)


def _bracket(a: Field, b: Field, i: int, r, dim: Dimension, integ: SurfaceIntegrator):
    """∫_{∂B_r} (∂_νΔ₀ⁱa · Δ₀^{k-1-i}b - Δ₀ⁱa · ∂_νΔ₀^{k-1-i}b) dσ, with ∂_ν = x·∇/r.

    Returns (value, differentiation error).
    """
    lap_a = a.iterate_laplacian(i)
    lap_b = b.iterate_laplacian(dim.k - 1 - i)
    with mpmath.workdps(integ.dps):
        first = integ.product(lap_a.euler(), lap_b, r)
        error = integ.last_error
        second = integ.product(lap_a, lap_b.euler(), r)
        error += integ.last_error
        return (first - second) / _as_mp(r, integ.dps), error / float(r)


def boundary_functional_with_error(
    u: Field, r, dim: Dimension, method: str = "radial", integrator: Optional[SurfaceIntegrator] = None
) -> Tuple[mpmath.mpf, float]:
    """P_k(r;u) and the propagated differentiation error of sampled fields (0 for closed forms)"""
    integ = integrator or SurfaceIntegrator(dim, method)
    if r <= 0:
        raise ValueError(f"Boundary radius must be positive, got {r}")
    k, n = dim.k, dim.n
    with mpmath.workdps(integ.dps):
        x = _as_mp(r, integ.dps)
        w = mp_fraction(dim.weight)
        xu = u.euler()
        total = mpmath.mpf(0)
        error = 0.0
        for i in range(k // 2):
            value, err = _bracket(xu, u, i, r, dim, integ)
            total += value
            error += err
            value, err = _bracket(u, u, i, r, dim, integ)
            total += w * value
            error += abs(float(w)) * err
        if k % 2 == 0:
            half = u.iterate_laplacian(k // 2)
            total += x / 2 * integ.product(half, half, r)
            error += float(r) / 2 * integ.last_error
        else:
            h = u.iterate_laplacian((k - 1) // 2)
            xh = h.euler()
            total += x / 2 * integ.grad_dot(h, h, r)
            error += float(r) / 2 * integ.last_error
            total -= integ.product(xh, xh, r) / x
            error += integ.last_error / float(r)
            total -= mpmath.mpf(n - 2) / 2 * integ.product(h, xh, r) / x
            error += (n - 2) / 2 * integ.last_error / float(r)
        return total, error


def boundary_functional(u: Field, r, dim: Dimension, method: str = "radial", integrator: Optional[SurfaceIntegrator] = None):
    """P_k(r;u): Σ_{i<[k/2]} [S_i(x·∇u, u) + (n-2k)/2 S_i(u, u)] + 𝓡_k(r;u).

    Even k: 𝓡 = (r/2)∫(Δ₀^{k/2}u)². Odd k, h = Δ₀^{(k-1)/2}u:
    𝓡 = ∫ (r/2)|∇h|² - (x·∇h)∂_νh - (n-2)/2 h∂_νh.

    The odd-k coefficient is (n-2)/2, not (n-2k)/2: it is the value for which
    P(r) - P(s) matches the annulus volume terms of `identity_residual`.
    """
    return boundary_functional_with_error(u, r, dim, method, integrator)[0]


def bilinear_form(a: Field, b: Field, r, dim: Dimension, method: str = "radial", integrator: Optional[SurfaceIntegrator] = None):
    """Φ_{k,r}(a, b), the symmetric bilinear form with Φ(u, u) = P_k(r;u)"""
    integ = integrator or SurfaceIntegrator(dim, method)
    if r <= 0:
        raise ValueError(f"Boundary radius must be positive, got {r}")
    k, n = dim.k, dim.n
    with mpmath.workdps(integ.dps):
        x = _as_mp(r, integ.dps)
        w = mp_fraction(dim.weight)
        xa, xb = a.euler(), b.euler()
        total = mpmath.mpf(0)
        for i in range(k // 2):
            total += (
                _bracket(xa, b, i, r, dim, integ)[0]
                + _bracket(xb, a, i, r, dim, integ)[0]
                + w * (_bracket(a, b, i, r, dim, integ)[0] + _bracket(b, a, i, r, dim, integ)[0])
            ) / 2
        if k % 2 == 0:
            m = k // 2
            total += x / 2 * integ.product(a.iterate_laplacian(m), b.iterate_laplacian(m), r)
        else:
            m = (k - 1) // 2
            ha, hb = a.iterate_laplacian(m), b.iterate_laplacian(m)
            xha, xhb = ha.euler(), hb.euler()
            total += x / 2 * integ.grad_dot(ha, hb, r)
            total -= integ.product(xha, xhb, r) / x
            total -= mpmath.mpf(n - 2) / 4 * (integ.product(ha, xhb, r) + integ.product(hb, xha, r)) / x
        return total


@dataclass
class PohozaevReport:
    """Both sides of the Pohozaev identity on the annulus s < |x| < r"""

    r: float
    s: float
    boundary_outer: float
    boundary_inner: float
    volume_terms: Dict[str, float]
    residual: float
    error_estimate: float

    @property
    def lhs(self) -> float:
        return self.boundary_outer - self.boundary_inner

    @property
    def scale(self) -> float:
        """Magnitude of the largest term of the identity"""
        terms = [abs(self.boundary_outer), abs(self.boundary_inner)]
        terms += [abs(v) for v in self.volume_terms.values()]
        return max(terms)


def _shell_rule(dim: Dimension, method: str, quadrature_degree: int) -> SphericalQuadrature:
    if method == "radial":
        nodes = np.zeros((1, dim.n))
        nodes[0, 0] = 1.0
        return SphericalQuadrature(dim.n, nodes, np.array([float(dim.sphere_area_mp())]), 0)
    return SphericalQuadrature.product(dim.n, quadrature_degree)


def identity_residual(
    u: Field,
    f: Optional[Field],
    p: float,
    s: float,
    r: float,
    dim: Dimension,
    method: str = "radial",
    quadrature_degree: int = 16,
    epsrel: float = 1e-11,
) -> PohozaevReport:
    """Every term of the Pohozaev identity on B(0,r) \\ B(0,s):

    P(r) - P(s) = ∫(x·∇u + (n-2k)/2 u) 𝓔(u) + ((n-2k)/2 - n/p)∫f|u|^p
                  - (1/p)∫(x·∇f)|u|^p + (r/p)∫_{∂B_r} f|u|^p - (s/p)∫_{∂B_s} f|u|^p

    with 𝓔(u) = Δ₀ᵏu - f|u|^{p-2}u.

    error_estimate includes the differentiation error of sampled fields on
    both spheres and in the shells.
    """
    if not 0 <= s < r:
        raise ValueError(f"Need 0 <= s < r, got s={s}, r={r}")
    if p < 2:
        raise ValueError(f"Exponent p must be >= 2, got {p}")
    n = dim.n
    if f is None:
        f = PolyRadialField.constant(n, 1)
    integ = SurfaceIntegrator(dim, method, quadrature_degree)
    outer, outer_error = boundary_functional_with_error(u, r, dim, integrator=integ)
    inner, inner_error = boundary_functional_with_error(u, s, dim, integrator=integ) if s > 0 else (0.0, 0.0)
    outer, inner = float(outer), float(inner)

    rule = _shell_rule(dim, method, quadrature_degree)
    weight = float(dim.weight)
    xu = u.euler()
    lap_k = u.iterate_laplacian(dim.k)
    xf = f.euler()

    def shell(t: float, kind: str, mode: str = "value") -> float:
        """mode: "value", "absolute" (∫|terms|) or "error" (differentiation error)"""
        pts = t * rule.nodes
        uv = u.values(pts)
        fv = f.values(pts)
        power = np.abs(uv) ** p
        if kind == "error_term":
            lap_v, lap_err = sample(lap_k, pts)
            xu_v, xu_err = sample(xu, pts)
            source = fv * np.abs(uv) ** (p - 2) * uv
            factor = xu_v + weight * uv
            if mode == "absolute":
                integrand = np.abs(factor) * (np.abs(lap_v) + np.abs(source))
            elif mode == "error":
                integrand = xu_err * np.abs(lap_v - source) + (np.abs(factor) + xu_err) * lap_err
            else:
                integrand = factor * (lap_v - source)
        elif kind == "exponent_defect":
            integrand = fv * power
        elif kind == "grad_f":
            xf_v, xf_err = sample(xf, pts)
            integrand = (xf_err if mode == "error" else xf_v) * power
        else:
            raise ValueError(f"Unknown shell integrand '{kind}'")
        if mode == "absolute":
            integrand = np.abs(integrand)
        return t ** (n - 1) * rule.integrate(integrand)

    sampled = isinstance(u, SampledField) or isinstance(f, SampledField)
    nodes, node_weights = np.polynomial.legendre.leggauss(ERROR_NODES)
    radii = s + (r - s) * (nodes + 1) / 2

    def drift(kind: str) -> float:
        """∫ of the differentiation error of the integrand over the annulus"""
        if not sampled or kind == "exponent_defect":
            return 0.0
        return (r - s) / 2 * sum(wt * shell(t, kind, "error") for t, wt in zip(radii, node_weights))

    total_error = outer_error + inner_error
    raw: Dict[str, float] = {}
    for kind in ("error_term", "exponent_defect", "grad_f"):
        # epsabs tracks ∫|integrand|; for a solution the error term is pure cancellation noise
        magnitude, _ = integrate_radial(
            lambda t, kind=kind: shell(t, kind, "absolute"), s, r, epsrel=1e-3, limit=400
        )
        spread = drift(kind)
        value, err = integrate_radial(
            lambda t, kind=kind: shell(t, kind),
            s,
            r,
            epsabs=max(epsrel * magnitude, 10 * spread),
            epsrel=epsrel,
            limit=400,
        )
        raw[kind] = value
        total_error += err + (spread if kind == "error_term" else spread / p)

    def surface(radius: float) -> float:
        if radius == 0:
            return 0.0
        return radius * shell(radius, "exponent_defect") / p

    volume_terms = {
        "error_term": raw["error_term"],
        "exponent_defect": (weight - n / p) * raw["exponent_defect"],
        "grad_f": -raw["grad_f"] / p,
        "surface_f": surface(r) - surface(s),
    }
    rhs = sum(volume_terms.values())
    residual = (outer - inner) - rhs
    magnitudes = [abs(outer), abs(inner)] + [abs(v) for v in volume_terms.values()]
    estimate = total_error + 64 * np.finfo(float).eps * sum(magnitudes)
    logger.debug(
        f"Pohozaev {dim} on ({s}, {r}): lhs={outer - inner:.12e} rhs={rhs:.12e} residual={residual:.3e}"
    )
    return PohozaevReport(
        r=r,
        s=s,
        boundary_outer=outer,
        boundary_inner=inner,
        volume_terms=volume_terms,
        residual=residual,
        error_estimate=float(estimate),
    )


def theta_constant(dim: Dimension) -> sympy.Expr:
    """Θ(n,k) = ω 2^{k-2}(k-1)!(n-2k)(n-2)∏_{j=2}^{k}(n-2j)"""
    n, k = dim.n, dim.k
    chain = math.prod(n - 2 * j for j in range(2, k + 1))
    factor = sympy.Rational(2) ** (k - 2) * math.factorial(k - 1) * (n - 2 * k) * (n - 2) * chain
    return sympy.simplify(factor * dim.sphere_area)


@dataclass
class LimitResult:
    """Richardson-extrapolated r → 0 limit of a boundary functional"""

    limit: float
    expected: float
    spread: float
    radii: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    @property
    def relative_error(self) -> float:
        if self.expected == 0:
            return abs(self.limit)
        return abs(self.limit - self.expected) / abs(self.expected)


def richardson_limit(radii: Sequence[float], values: Sequence, rtol: float = 1e-5, atol: float = 1e-12) -> Tuple[float, float]:
    """Linear-in-r extrapolation 2P(r/2) - P(r) over halving radii; returns (limit, spread)"""
    if len(values) < 4:
        raise ExtrapolationError(f"Need at least 4 radii for extrapolation, got {len(values)}")
    for a, b in zip(radii[:-1], radii[1:]):
        if not math.isclose(a, 2 * b, rel_tol=1e-12):
            raise ExtrapolationError(f"Radii must halve at each step, got {a} then {b}")
    table = [2 * values[j + 1] - values[j] for j in range(len(values) - 1)]
    limit = table[-1]
    spread = max(abs(t - limit) for t in table[-3:])
    logger.debug("Richardson table: " + ", ".join(f"{float(t):.12e}" for t in table))
    if spread > max(rtol * abs(limit), atol):
        raise ExtrapolationError(
            f"Extrapolated values did not settle: limit={float(limit):.6e}, spread={float(spread):.3e}"
        )
    return float(limit), float(spread)


def halving_radii(first: int = 3, last: int = 12) -> List[float]:
    return [2.0 ** (-j) for j in range(first, last + 1)]


def singular_mass_limit(
    lam,
    h: PolyRadialField,
    dim: Dimension,
    method: str = "exact",
    radii: Optional[Sequence[float]] = None,
) -> LimitResult:
    """lim_{r→0} P_k(r; Λ r^{2k-n} + H), compared with Θ(n,k) Λ H(0)"""
    if lam <= 0:
        raise ValueError(f"Singular coefficient must be positive, got {lam}")
    radii = list(radii) if radii is not None else halving_radii()
    singular = PolyRadialField.radial(ClosedFormRadial.power(2 * dim.k - dim.n, lam), dim.n)
    u = singular + h
    integ = SurfaceIntegrator(dim, method)
    values = [boundary_functional(u, r, dim, integrator=integ) for r in radii]
    limit, spread = richardson_limit(radii, values)
    expected = float(theta_constant(dim) * to_rational(lam) * h.value_at_origin()) if not h.is_zero else 0.0
    logger.info(f"singular mass limit {dim}: numeric={limit:.12e} closed form={expected:.12e}")
    return LimitResult(limit, expected, spread, radii, [float(v) for v in values])
