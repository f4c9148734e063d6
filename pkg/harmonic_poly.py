import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from radial_calculus import Dimension, sympy_to_fraction, to_rational

logger = logging.getLogger(__name__)

Scalar = Union[int, Fraction]


class NonInvertibleError(ValueError):
    """Raised when a weighted polyharmonic power cannot be inverted on a component"""

    def __init__(self, message: str, p: int, ell_prime: int):
        super().__init__(message)
        self.p = p
        self.ell_prime = ell_prime


class MeanZeroError(ValueError):
    """Raised when a correction polynomial has nonzero sphere average"""

    def __init__(self, message: str, average: Fraction):
        super().__init__(message)
        self.average = average


@lru_cache(maxsize=None)
def coordinates(n: int) -> Tuple[sympy.Symbol, ...]:
    """x1, ..., xn"""
    return tuple(sympy.symbols(f"x1:{n + 1}"))


@dataclass(frozen=True)
class HomPoly:
    """Homogeneous polynomial of degree `degree` in n variables over the rationals"""

    n: int
    degree: int
    poly: sympy.Poly

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"Degree must be non-negative, got {self.degree}")
        if len(self.poly.gens) != self.n:
            raise ValueError(
                f"Polynomial has {len(self.poly.gens)} generators, expected n={self.n}"
            )
        if not self.poly.is_zero:
            bad = [m for m in self.poly.monoms() if sum(m) != self.degree]
            if bad:
                raise ValueError(f"Monomials {bad} do not have degree {self.degree}")

    @classmethod
    def from_expr(cls, n: int, expr, degree: Optional[int] = None) -> "HomPoly":
        poly = sympy.Poly(sympy.sympify(expr), *coordinates(n), domain="QQ")
        if degree is None:
            if poly.is_zero:
                raise ValueError("Degree must be given for the zero polynomial")
            degree = poly.total_degree()
        return cls(n, degree, poly)

    @classmethod
    def from_dict(cls, n: int, coeffs: Dict[Tuple[int, ...], Scalar], degree: Optional[int] = None) -> "HomPoly":
        """Build from {multi-index: coefficient}"""
        gens = coordinates(n)
        expr = sympy.Integer(0)
        for monom, c in coeffs.items():
            if len(monom) != n:
                raise ValueError(f"Multi-index {monom} does not have {n} entries")
            term = to_rational(c)
            for g, e in zip(gens, monom):
                term *= g**e
            expr += term
        if degree is None and coeffs:
            degree = sum(next(iter(coeffs)))
        return cls.from_expr(n, expr, degree)

    @classmethod
    def zero(cls, n: int, degree: int) -> "HomPoly":
        return cls.from_expr(n, 0, degree)

    @classmethod
    def constant(cls, n: int, value: Scalar = 1) -> "HomPoly":
        return cls.from_expr(n, to_rational(value), 0)

    @classmethod
    def coordinate(cls, n: int, index: int) -> "HomPoly":
        """x_{index+1}"""
        return cls.from_expr(n, coordinates(n)[index], 1)

    @classmethod
    def r_squared(cls, n: int) -> "HomPoly":
        return cls.from_expr(n, sum(g**2 for g in coordinates(n)), 2)

    @classmethod
    def quadratic_form(cls, matrix) -> "HomPoly":
        """sum_ab M_ab x_a x_b for a square matrix of rationals"""
        rows = [list(row) for row in matrix]
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("Quadratic form needs a square matrix")
        gens = coordinates(n)
        expr = sum(
            to_rational(rows[a][b]) * gens[a] * gens[b] for a in range(n) for b in range(n)
        )
        return cls.from_expr(n, expr, 2)

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def coefficients(self) -> Dict[Tuple[int, ...], Fraction]:
        """Nonzero coefficients keyed by multi-index, in lexicographic order"""
        return {
            monom: sympy_to_fraction(c) for monom, c in sorted(self.poly.terms())
        }

    def as_expr(self) -> sympy.Expr:
        return self.poly.as_expr()

    def _check_compatible(self, other: "HomPoly") -> None:
        if other.n != self.n:
            raise ValueError(f"Dimension mismatch: n={self.n} vs n={other.n}")

    def __add__(self, other: "HomPoly") -> "HomPoly":
        self._check_compatible(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        if other.degree != self.degree:
            raise ValueError(f"Cannot add degrees {self.degree} and {other.degree}")
        return HomPoly(self.n, self.degree, self.poly + other.poly)

    def __neg__(self) -> "HomPoly":
        return HomPoly(self.n, self.degree, -self.poly)

    def __sub__(self, other: "HomPoly") -> "HomPoly":
        return self + (-other)

    def __mul__(self, other) -> "HomPoly":
        if isinstance(other, HomPoly):
            self._check_compatible(other)
            return HomPoly(self.n, self.degree + other.degree, self.poly * other.poly)
        return HomPoly(self.n, self.degree, self.poly.mul_ground(to_rational(other)))

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "HomPoly":
        return self * (1 / to_rational(other))

    def laplacian(self) -> "HomPoly":
        """Δ₀ψ = -Σ ∂ᵢ²ψ, of degree ℓ-2 (zero below degree 2)"""
        if self.degree < 2:
            return HomPoly.zero(self.n, 0)
        result = self.poly * 0
        for g in coordinates(self.n):
            result -= self.poly.diff(g).diff(g)
        return HomPoly(self.n, self.degree - 2, result)

    def gradient(self) -> Tuple["HomPoly", ...]:
        degree = max(self.degree - 1, 0)
        return tuple(
            HomPoly(self.n, degree, self.poly.diff(g)) for g in coordinates(self.n)
        )

    def grad_dot(self, other: "HomPoly") -> "HomPoly":
        """∇ψ·∇φ"""
        self._check_compatible(other)
        degree = max(self.degree + other.degree - 2, 0)
        total = HomPoly.zero(self.n, degree)
        for a, b in zip(self.gradient(), other.gradient()):
            product = a * b
            if not product.is_zero:
                total = total + product
        return total

    def exact_div_r2(self, times: int = 1) -> "HomPoly":
        """ψ / r^{2·times}, which must divide exactly"""
        if times == 0:
            return self
        divisor = HomPoly.r_squared(self.n).poly ** times
        quotient, remainder = self.poly.div(divisor)
        if not remainder.is_zero:
            raise ValueError(f"{self.as_expr()} is not divisible by r^{2 * times}")
        return HomPoly(self.n, self.degree - 2 * times, quotient)

    def evaluate(self, points) -> np.ndarray:
        """Evaluate at an (m, n) array of points"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        result = np.zeros(pts.shape[0])
        for monom, c in self.coefficients().items():
            result += float(c) * np.prod(pts ** np.array(monom), axis=1)
        return result

    def __str__(self) -> str:
        return str(self.as_expr())


@dataclass(frozen=True)
class HarmonicDecomposition:
    """ψ = Σ_p r^{2p} h_p with h_p harmonic of degree ℓ-2p; zero components omitted"""

    n: int
    degree: int
    components: Tuple[Tuple[int, HomPoly], ...]

    def component(self, p: int) -> HomPoly:
        for q, h in self.components:
            if q == p:
                return h
        return HomPoly.zero(self.n, self.degree - 2 * p)

    def recombine(self) -> HomPoly:
        total = HomPoly.zero(self.n, self.degree)
        r2 = HomPoly.r_squared(self.n)
        for p, h in self.components:
            term = h
            for _ in range(p):
                term = term * r2
            total = total + term
        return total


def r2_laplacian_eigenvalue(n: int, ell: int, p: int) -> int:
    """Eigenvalue of r²Δ₀ on r^{2p}H_{ℓ-2p} inside P_ℓ"""
    return -2 * p * (n - 2 + 2 * ell - 2 * p)


def sphere_eigenvalue(n: int, ell: int) -> int:
    """Eigenvalue ℓ(ℓ+n-2) of the round Laplacian of S^{n-1} on H_ℓ"""
    return ell * (ell + n - 2)


@lru_cache(maxsize=4096)
def decompose(psi: HomPoly) -> HarmonicDecomposition:
    """Harmonic decomposition by Lagrange projection onto the eigenspaces of r²Δ₀"""
    n, ell = psi.n, psi.degree
    if psi.is_zero:
        return HarmonicDecomposition(n, ell, ())
    top = ell // 2
    eigen = [r2_laplacian_eigenvalue(n, ell, p) for p in range(top + 1)]
    r2 = HomPoly.r_squared(n)

    def r2_laplacian(f: HomPoly) -> HomPoly:
        lap = f.laplacian()
        if lap.is_zero:
            return HomPoly.zero(n, ell)
        return r2 * lap

    components = []
    for p in range(top + 1):
        projected = psi
        for q in range(top + 1):
            if q == p:
                continue
            shifted = r2_laplacian(projected) - projected * eigen[q]
            projected = shifted / (eigen[p] - eigen[q])
        if projected.is_zero:
            continue
        components.append((p, projected.exact_div_r2(p)))
    return HarmonicDecomposition(n, ell, tuple(components))


@lru_cache(maxsize=4096)
def sphere_average(psi: HomPoly) -> Fraction:
    """c with ∫_{S^{n-1}} ψ dσ = c·ω_{n-1}, exactly"""
    if psi.is_zero or psi.degree % 2 == 1:
        return Fraction(0)
    if psi.degree == 0:
        return sympy_to_fraction(psi.poly.coeff_monomial(1))
    ell, n = psi.degree, psi.n
    return -sphere_average(psi.laplacian()) / (ell * (n + ell - 2))


def weighted_factor(q: Fraction, n: int, ell: int, ell_prime: int, j: int) -> Fraction:
    """∏_{i<j} [λ - a(a+n-2)], λ = ℓ'(ℓ'+n-2), a = q+ℓ-2i: the scalar by which
    Δ₀ʲ(r^q ·) acts on the r^{2p}H_{ℓ'} component of P_ℓ"""
    lam = sphere_eigenvalue(n, ell_prime)
    factor = Fraction(1)
    for i in range(j):
        a = Fraction(q) + ell - 2 * i
        factor *= lam - a * (a + n - 2)
    return factor


@dataclass(frozen=True)
class WeightedPower:
    """r^exponent · poly, a homogeneous function off the origin"""

    exponent: Fraction
    poly: HomPoly

    @property
    def homogeneity(self) -> Fraction:
        return self.exponent + self.poly.degree


def weighted_power_laplacian(q, psi: HomPoly, j: int, dim: Optional[Dimension] = None) -> WeightedPower:
    """Δ₀ʲ(r^q ψ) = r^{q-2j} T, computed on the harmonic decomposition of ψ"""
    q = Fraction(q)
    if j < 0:
        raise ValueError(f"Iteration count must be non-negative, got {j}")
    if dim is not None:
        if dim.n != psi.n:
            raise ValueError(f"Polynomial lives in n={psi.n}, dimension says n={dim.n}")
        if j > dim.k:
            raise ValueError(f"Iteration count j={j} exceeds k={dim.k}")
    n, ell = psi.n, psi.degree
    total = HomPoly.zero(n, ell)
    r2 = HomPoly.r_squared(n)
    for p, h in decompose(psi).components:
        factor = weighted_factor(q, n, ell, ell - 2 * p, j)
        if factor == 0:
            continue
        term = h * factor
        for _ in range(p):
            term = term * r2
        total = total + term
    return WeightedPower(q - 2 * j, total)


def invert_weighted(q, T: HomPoly, dim: Dimension) -> HomPoly:
    """The ψ ∈ P_ℓ with Δ₀ᵏ(r^q ψ) = r^{q-2k} T.

    A component of T on which the eigenfactor vanishes must itself be zero;
    that kernel direction is then left out of ψ.
    """
    q = Fraction(q)
    n, ell, k = T.n, T.degree, dim.k
    if dim.n != n:
        raise ValueError(f"Polynomial lives in n={n}, dimension says n={dim.n}")
    psi = HomPoly.zero(n, ell)
    r2 = HomPoly.r_squared(n)
    for p, h in decompose(T).components:
        factor = weighted_factor(q, n, ell, ell - 2 * p, k)
        if factor == 0:
            raise NonInvertibleError(
                f"Eigenfactor vanishes on component (p={p}, ell'={ell - 2 * p}) "
                f"for q={q}, {dim}, and T has a nonzero component there",
                p=p,
                ell_prime=ell - 2 * p,
            )
        term = h / factor
        for _ in range(p):
            term = term * r2
        psi = psi + term
    for p in range(ell // 2 + 1):
        if weighted_factor(q, n, ell, ell - 2 * p, k) == 0:
            logger.warning(
                f"Kernel direction (p={p}, ell'={ell - 2 * p}) of r^{q} on P_{ell} left out, {dim}"
            )
    return psi


def _scaled_quadratic_form(matrix, scale) -> HomPoly:
    arr = [[to_rational(v) * to_rational(scale) for v in row] for row in matrix]
    return HomPoly.quadratic_form(arr)


def green_correction_pipeline(
    s_hess,
    ric_lap,
    r5: HomPoly,
    dim: Dimension,
    c2: Scalar = 1,
    c3: Scalar = 1,
    trace_target: Optional[Scalar] = 0,
) -> Tuple[HomPoly, HomPoly]:
    """ψ⁽⁴⁾, ψ⁽⁵⁾ with Δ₀ᵏ(r^{2k-n}ψ⁽⁴⁾) = r^{-n}T₁ and Δ₀ᵏ(r^{2k-n}ψ⁽⁵⁾) = r^{-n}R5.

    T₁ = r²[c₂ S_hess + c₃ ric_lap]_ab x^a x^b. With trace_target set, the trace of
    S_hess is compared against it and a mismatch is logged.
    """
    n, k = dim.n, dim.k
    if n not in (2 * k + 4, 2 * k + 5):
        raise ValueError(f"Correction pipeline needs n in {{2k+4, 2k+5}}, got {dim}")
    s_hess = [list(row) for row in s_hess]
    ric_lap = [list(row) for row in ric_lap]
    for name, matrix in (("S_hess", s_hess), ("ric_lap", ric_lap)):
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ValueError(f"{name} must be {n}x{n}")
        for a in range(n):
            for b in range(a + 1, n):
                if to_rational(matrix[a][b]) != to_rational(matrix[b][a]):
                    raise ValueError(f"{name} is not symmetric at ({a}, {b})")
    if r5.n != n or (not r5.is_zero and r5.degree != 5):
        raise ValueError(f"R5 must be a degree-5 polynomial in n={n}")

    if trace_target is not None:
        trace = sum(to_rational(s_hess[a][a]) for a in range(n))
        if trace != to_rational(trace_target):
            logger.warning(f"Trace of S_hess is {trace}, expected {trace_target}")

    form = _scaled_quadratic_form(s_hess, c2) + _scaled_quadratic_form(ric_lap, c3)
    t1 = form * HomPoly.r_squared(n) if not form.is_zero else HomPoly.zero(n, 4)
    t2 = r5 if not r5.is_zero else HomPoly.zero(n, 5)

    q = Fraction(2 * k - n)
    psi4 = invert_weighted(q, t1, dim)
    psi5 = invert_weighted(q, t2, dim)

    for label, psi in (("psi4", psi4), ("psi5", psi5)):
        average = sphere_average(psi)
        if average != 0:
            raise MeanZeroError(f"{label} has sphere average {average}·ω, expected 0", average)
    return psi4, psi5


def _unit_sphere_average(expr: sympy.Expr, gens: Tuple[sympy.Symbol, ...], S: sympy.Symbol) -> Fraction:
    """Average over S^{n-1} of a polynomial in x times powers of S = |x|², at S = 1"""
    poly = sympy.Poly(sympy.expand(expr.subs(S, 1)), *gens, domain="QQ")
    by_degree: Dict[int, Dict[Tuple[int, ...], sympy.Expr]] = {}
    for monom, coeff in poly.terms():
        by_degree.setdefault(sum(monom), {})[monom] = coeff
    total = Fraction(0)
    for degree, coeffs in by_degree.items():
        total += sphere_average(HomPoly.from_dict(len(gens), coeffs, degree))
    return total


def vanishing_sphere_integrals(psi4: HomPoly, dim: Dimension) -> Dict[str, Fraction]:
    """Exact sphere averages of Δ₀ⁱR₀, ∂_νΔ₀ⁱR₀, x·∇Δ₀ⁱR₀ and the same with x·∇R₀,
    for R₀ = r^{2k-n}ψ and i < k.

    Each entry is differentiated on its own in the variables (x, S = |x|²), with
    ∂_a = ∂/∂x_a + 2x_a ∂/∂S. ∂_ν is the ray derivative d/dt f(tx, t²S) at t = 1
    divided by r, and S = 1 restricts to the unit sphere.
    """
    n = psi4.n
    gens = coordinates(n)
    S, t = sympy.symbols("S t", positive=True)

    def d(expr: sympy.Expr, a: int) -> sympy.Expr:
        return sympy.diff(expr, gens[a]) + 2 * gens[a] * sympy.diff(expr, S)

    def laplacian(expr: sympy.Expr) -> sympy.Expr:
        return sympy.expand(-sum(d(d(expr, a), a) for a in range(n)))

    def euler(expr: sympy.Expr) -> sympy.Expr:
        return sympy.expand(sum(g * d(expr, a) for a, g in enumerate(gens)))

    def normal(expr: sympy.Expr) -> sympy.Expr:
        along_ray = expr.subs({**{g: t * g for g in gens}, S: t**2 * S}, simultaneous=True)
        return sympy.diff(along_ray, t).subs(t, 1) / sympy.sqrt(S)

    r0 = S ** sympy.Rational(2 * dim.k - dim.n, 2) * psi4.as_expr()
    out: Dict[str, Fraction] = {}
    for label, field in (("R0", r0), ("euler_R0", euler(r0))):
        power = field
        for i in range(dim.k):
            out[f"lap{i}_{label}"] = _unit_sphere_average(power, gens, S)
            out[f"normal_lap{i}_{label}"] = _unit_sphere_average(normal(power), gens, S)
            out[f"euler_lap{i}_{label}"] = _unit_sphere_average(euler(power), gens, S)
            power = laplacian(power)
    return out


def brute_force_weighted_laplacian(q, psi: HomPoly, j: int) -> sympy.Expr:
    """Δ₀ʲ(r^q ψ) by direct multivariate differentiation, divided by r^{q-2j}"""
    gens = coordinates(psi.n)
    s = sum(g**2 for g in gens)
    half_q = to_rational(Fraction(q) / 2)
    expr = s**half_q * psi.as_expr()
    for _ in range(j):
        expr = -sum(sympy.diff(expr, g, 2) for g in gens)
    # every term now carries s**(q/2 - m); dividing leaves integer powers of s
    ratio = sympy.expand(expr * s ** (j - half_q))
    return sympy.cancel(sympy.together(ratio))
