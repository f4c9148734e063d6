import logging
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import sympy
from scipy import integrate

logger = logging.getLogger(__name__)

# Radial variable shared by every closed-form expression
R = sympy.Symbol("r", positive=True)

Number = Union[int, Fraction, float]


class ClosedFamilyError(ValueError):
    """Raised when an expression leaves the closed radial family"""


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature does not converge"""


def to_rational(value) -> sympy.Expr:
    """Convert int, Fraction, float or sympy number into an exact sympy number.

    Floats go through their shortest decimal representation, so 0.1 becomes 1/10.
    """
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, bool):
        raise TypeError(f"Expected a number, got {value!r}")
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, numbers.Integral):
        return sympy.Integer(int(value))
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"Cannot convert non-finite value {value} to a rational")
        return sympy.Rational(repr(value))
    raise TypeError(f"Expected a number, got {type(value).__name__}")


def sympy_to_fraction(value: sympy.Expr) -> Fraction:
    """Convert a sympy rational into a Fraction"""
    value = sympy.sympify(value)
    if not value.is_Rational:
        raise ValueError(f"{value} is not rational")
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True)
class Dimension:
    """The pair (n, k): ambient dimension and operator order, with 2k < n"""

    n: int
    k: int

    def __post_init__(self):
        if not isinstance(self.n, int) or not isinstance(self.k, int):
            raise ValueError(f"Dimension entries must be integers, got n={self.n!r}, k={self.k!r}")
        if self.k < 1:
            raise ValueError(f"Operator order must be at least 1, got k={self.k}")
        if self.n < 3:
            raise ValueError(f"Ambient dimension must be at least 3, got n={self.n}")
        if 2 * self.k >= self.n:
            raise ValueError(
                f"Invalid dimension pair (n={self.n}, k={self.k}): requires 2k < n"
            )

    @property
    def crit_exp(self) -> Fraction:
        """Critical Sobolev exponent 2n/(n-2k)"""
        return Fraction(2 * self.n, self.n - 2 * self.k)

    @property
    def weight(self) -> Fraction:
        """(n-2k)/2, the homogeneity weight of the conformal dilation"""
        return Fraction(self.n - 2 * self.k, 2)

    @property
    def sphere_area(self) -> sympy.Expr:
        """Exact area of the unit (n-1)-sphere"""
        half = sympy.Rational(self.n, 2)
        return sympy.simplify(2 * sympy.pi**half / sympy.gamma(half))

    def sphere_area_mp(self, dps: int = 30) -> mpmath.mpf:
        with mpmath.workdps(dps):
            half = mpmath.mpf(self.n) / 2
            return 2 * mpmath.pi**half / mpmath.gamma(half)

    def __str__(self) -> str:
        return f"(n={self.n}, k={self.k})"


@dataclass(frozen=True)
class RadialJet:
    """Value and radial derivatives (u, u', ..., u^(m)) of a radial function at one radius"""

    radius: Union[float, mpmath.mpf]
    values: Tuple
    dps: int = 30

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.radius < 0:
            raise ValueError(f"Jet radius must be non-negative, got {self.radius}")
        if not self.values:
            raise ValueError("A radial jet needs at least the function value")
        if self.radius == 0:
            odd = [i for i in range(1, len(self.values), 2) if self.values[i] != 0]
            if odd:
                raise ValueError(
                    f"Jet at radius 0 must come from an even function; "
                    f"nonzero odd-order entries at orders {odd}"
                )

    @property
    def order(self) -> int:
        return len(self.values) - 1

    @classmethod
    def from_closed_form(
        cls, u: "ClosedFormRadial", radius: Number, order: int, dps: int = 40
    ) -> "RadialJet":
        """Evaluate u and its first `order` derivatives at `radius` with `dps` digits"""
        values = []
        with mpmath.workdps(dps):
            x = mpmath.mpf(radius)
            for i in range(order + 1):
                if x == 0 and i % 2 == 1:
                    values.append(mpmath.mpf(0))
                else:
                    values.append(u.derivative(i).evaluate_mp(x, dps=dps))
        return cls(radius=x, values=tuple(values), dps=dps)


def radial_laplacian(jet: RadialJet, dim: Dimension) -> RadialJet:
    """Jet of Δ₀u = -(u'' + (n-1)/r u') to order jet.order - 2.

    At r = 0 the even-extension rule w^(i)(0) = -(i+n)/(i+1) u^(i+2)(0) applies.
    """
    m = jet.order
    if m < 2:
        raise ValueError(f"radial_laplacian needs a jet of order >= 2, got order {m}")
    u = jet.values
    n = dim.n
    out = []
    with mpmath.workdps(jet.dps):
        r = jet.radius
        if r == 0:
            for i in range(m - 1):
                if i % 2:
                    out.append(0 * u[0])
                else:
                    out.append(-(u[i + 2] * (i + n)) / (i + 1))
        else:
            for i in range(m - 1):
                # i-th derivative of u'/r by the Leibniz rule
                tail = 0 * u[0]
                for j in range(i + 1):
                    d = i - j
                    tail += (
                        math.comb(i, j)
                        * u[1 + j]
                        * (-1) ** d
                        * math.factorial(d)
                        * r ** (-(1 + d))
                    )
                out.append(-(u[i + 2] + (n - 1) * tail))
    return RadialJet(radius=jet.radius, values=tuple(out), dps=jet.dps)


def _is_pure_quadratic(arg: sympy.Expr) -> bool:
    if not arg.is_polynomial(R):
        return False
    poly = sympy.Poly(arg, R)
    return poly.monoms() == [(2,)]


def _is_two_term_quadratic(base: sympy.Expr) -> bool:
    if not base.is_polynomial(R):
        return False
    poly = sympy.Poly(base, R)
    monoms = set(poly.monoms())
    return poly.degree() == 2 and monoms <= {(2,), (0,)}


def _check_closed_family(expr: sympy.Expr) -> None:
    for term in sympy.Add.make_args(expr):
        for factor in sympy.Mul.make_args(term):
            if not factor.has(R):
                continue
            if isinstance(factor, sympy.exp):
                if not _is_pure_quadratic(factor.args[0]):
                    raise ClosedFamilyError(
                        f"Exponential factor {factor} is not of the form exp(-gamma r**2)"
                    )
                continue
            base, exponent = factor.as_base_exp()
            if exponent.has(R) or not exponent.is_Rational:
                raise ClosedFamilyError(f"Factor {factor} has a non-rational exponent")
            if base == R or _is_two_term_quadratic(base):
                continue
            raise ClosedFamilyError(
                f"Factor {factor} is outside the family r**a (mu2 + beta r**2)**(-b)"
            )


def _normalize(expr) -> sympy.Expr:
    # multinomial=False keeps (mu2 + beta r**2)**(-b) from being rewritten as 1/expanded(...)
    return sympy.expand(sympy.sympify(expr), multinomial=False)


@lru_cache(maxsize=2048)
def _derivative_expr(expr: sympy.Expr, order: int) -> sympy.Expr:
    if order == 0:
        return expr
    return _normalize(sympy.diff(_derivative_expr(expr, order - 1), R))


@lru_cache(maxsize=2048)
def _laplacian_expr(expr: sympy.Expr, n: int) -> sympy.Expr:
    first = _derivative_expr(expr, 1)
    second = _derivative_expr(expr, 2)
    return _normalize(-(second + (n - 1) * first / R))


@lru_cache(maxsize=2048)
def _mp_function(expr: sympy.Expr) -> Callable:
    return sympy.lambdify(R, expr, modules="mpmath")


@lru_cache(maxsize=2048)
def _np_function(expr: sympy.Expr) -> Callable:
    return sympy.lambdify(R, expr, modules="numpy")


@dataclass(frozen=True)
class ClosedFormRadial:
    """Finite sum of terms c r**a (mu2 + beta r**2)**(-b) exp(-gamma r**2) in the radial variable r.

    The family is closed under d/dr and under the radial Laplacian, so every
    polyharmonic iterate of a member is again a member.
    """

    expr: sympy.Expr

    def __post_init__(self):
        expr = _normalize(self.expr)
        _check_closed_family(expr)
        object.__setattr__(self, "expr", expr)

    @classmethod
    def constant(cls, value: Number = 1) -> "ClosedFormRadial":
        return cls(to_rational(value))

    @classmethod
    def power(cls, exponent: Number, coeff: Number = 1) -> "ClosedFormRadial":
        return cls(to_rational(coeff) * R ** to_rational(exponent))

    @classmethod
    def rational_profile(
        cls, mu2, beta, b: Number, coeff=1
    ) -> "ClosedFormRadial":
        """coeff * (mu2 + beta r**2)**(-b)"""
        return cls(to_rational(coeff) * (to_rational(mu2) + to_rational(beta) * R**2) ** (-to_rational(b)))

    @classmethod
    def gaussian(cls, gamma: Number = 1, coeff: Number = 1) -> "ClosedFormRadial":
        return cls(to_rational(coeff) * sympy.exp(-to_rational(gamma) * R**2))

    @staticmethod
    def _coerce(other) -> sympy.Expr:
        if isinstance(other, ClosedFormRadial):
            return other.expr
        return to_rational(other)

    def __add__(self, other) -> "ClosedFormRadial":
        return ClosedFormRadial(self.expr + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> "ClosedFormRadial":
        return ClosedFormRadial(self.expr - self._coerce(other))

    def __rsub__(self, other) -> "ClosedFormRadial":
        return ClosedFormRadial(self._coerce(other) - self.expr)

    def __neg__(self) -> "ClosedFormRadial":
        return ClosedFormRadial(-self.expr)

    def __mul__(self, other) -> "ClosedFormRadial":
        return ClosedFormRadial(self.expr * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ClosedFormRadial":
        if isinstance(other, ClosedFormRadial):
            raise TypeError("Division by a radial expression is not supported")
        return ClosedFormRadial(self.expr / to_rational(other))

    @property
    def is_zero(self) -> bool:
        return self.expr == 0

    def derivative(self, order: int = 1) -> "ClosedFormRadial":
        if order < 0:
            raise ValueError(f"Derivative order must be non-negative, got {order}")
        return ClosedFormRadial(_derivative_expr(self.expr, order))

    def laplacian(self, dim: Dimension) -> "ClosedFormRadial":
        return ClosedFormRadial(_laplacian_expr(self.expr, dim.n))

    def euler(self) -> "ClosedFormRadial":
        """r u', the action of x·∇ on a radial function"""
        return ClosedFormRadial(R * _derivative_expr(self.expr, 1))

    def at(self, radius: Number) -> sympy.Expr:
        """Exact value at a rational radius"""
        value = sympy.simplify(self.expr.subs(R, to_rational(radius)))
        if value.has(sympy.zoo, sympy.nan, sympy.oo):
            raise ValueError(f"{self.expr} is singular at r={radius}")
        return value

    def evaluate_mp(self, radius, dps: int = 40) -> mpmath.mpf:
        with mpmath.workdps(dps):
            return mpmath.mpf(_mp_function(self.expr)(mpmath.mpf(radius)))

    def evaluate(self, radii, dps: Optional[int] = None) -> np.ndarray:
        """Evaluate on an array of radii.

        With `dps` the evaluation runs in mpmath at that precision and is rounded
        to float64; without it the expression is compiled to numpy.
        """
        x = np.asarray(radii, dtype=float)
        if dps is not None:
            flat = [float(self.evaluate_mp(v, dps=dps)) for v in x.ravel()]
            return np.array(flat, dtype=float).reshape(x.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            result = np.asarray(_np_function(self.expr)(x), dtype=float)
        if result.shape != x.shape:
            result = np.full(x.shape, float(result))
        return result

    def mp_callable(self) -> Callable:
        """mpmath-callable r -> value; caller controls precision"""
        return _mp_function(self.expr)

    def numpy_callable(self) -> Callable:
        return _np_function(self.expr)

    def __str__(self) -> str:
        return str(self.expr)


def iterate_polyharmonic(u: ClosedFormRadial, j: int, dim: Dimension) -> ClosedFormRadial:
    """Exact Δ₀ʲu"""
    if j < 0:
        raise ValueError(f"Iteration count must be non-negative, got {j}")
    expr = u.expr
    for _ in range(j):
        expr = _laplacian_expr(expr, dim.n)
    return ClosedFormRadial(expr)


def half_power(u: ClosedFormRadial, j: int, dim: Dimension) -> ClosedFormRadial:
    """Δ₀^{j/2}u for even j; ∂_r Δ₀^{(j-1)/2}u for odd j (its modulus is the gradient norm)"""
    if j % 2 == 0:
        return iterate_polyharmonic(u, j // 2, dim)
    return iterate_polyharmonic(u, (j - 1) // 2, dim).derivative()


def dilation_action(u: ClosedFormRadial, dim: Dimension) -> ClosedFormRadial:
    """(n-2k)/2 u + r u'"""
    return u * dim.weight + u.euler()


def geometric_breakpoints(start: float, stop: float, ratio: float = 4.0) -> List[float]:
    """start, start*ratio, ... up to stop (inclusive); start must be positive"""
    if start <= 0 or stop <= start:
        raise ValueError(f"Need 0 < start < stop, got start={start}, stop={stop}")
    points = [start]
    while points[-1] * ratio < stop:
        points.append(points[-1] * ratio)
    points.append(stop)
    return points


def integrate_radial(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    points: Optional[Sequence[float]] = None,
    epsabs: float = 0.0,
    epsrel: float = 1e-12,
    limit: int = 200,
) -> Tuple[float, float]:
    """Adaptive quadrature of func on [a, b]; returns (value, abserr).

    A QUADPACK diagnostic (ier != 0) is raised as QuadratureError. The
    diagnostic is read from the full_output tuple; warning filters are
    left untouched.
    """
    result = integrate.quad(
        func,
        a,
        b,
        points=points,
        epsabs=epsabs,
        epsrel=epsrel,
        limit=limit,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3:
        message = str(result[3]).strip().splitlines()[0]
        raise QuadratureError(f"Quadrature on [{a}, {b}] did not converge: {message}")
    logger.debug(f"quad [{a:.4g}, {b:.4g}] -> {value:.6e} (err {abserr:.2e})")
    return value, abserr


def integrate_segments(
    func: Callable[[float], float], breakpoints: Sequence[float], **kwargs
) -> Tuple[float, float]:
    """Sum of integrate_radial over consecutive breakpoint intervals"""
    total, error = 0.0, 0.0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        value, abserr = integrate_radial(func, a, b, **kwargs)
        total += value
        error += abserr
    return total, error
