import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple, Union

import mpmath
import numpy as np
import sympy
from sympy.functions.combinatorial.numbers import stirling

from harmonic_poly import HomPoly, sphere_average
from radial_calculus import R, ClosedFormRadial, Number, to_rational

logger = logging.getLogger(__name__)


def _divide_by_r(g: ClosedFormRadial) -> ClosedFormRadial:
    return ClosedFormRadial(g.expr / R)


@dataclass(frozen=True)
class PolyRadialField:
    """Field Σ g_j(|x|) ψ_j(x) on ℝⁿ with closed-form radial factors g_j and
    homogeneous polynomials ψ_j. Terms sharing a polynomial are merged."""

    n: int
    terms: Tuple[Tuple[ClosedFormRadial, HomPoly], ...] = ()

    def __post_init__(self):
        merged: Dict[HomPoly, ClosedFormRadial] = {}
        for g, psi in self.terms:
            if psi.n != self.n:
                raise ValueError(f"Polynomial in n={psi.n} added to a field in n={self.n}")
            if psi.is_zero or g.is_zero:
                continue
            merged[psi] = merged[psi] + g if psi in merged else g
        kept = tuple((g, psi) for psi, g in merged.items() if not g.is_zero)
        object.__setattr__(self, "terms", kept)

    @classmethod
    def radial(cls, g: ClosedFormRadial, n: int) -> "PolyRadialField":
        return cls(n, ((g, HomPoly.constant(n, 1)),))

    @classmethod
    def polynomial(cls, psi: HomPoly) -> "PolyRadialField":
        return cls(psi.n, ((ClosedFormRadial.constant(1), psi),))

    @classmethod
    def constant(cls, n: int, value: Number) -> "PolyRadialField":
        return cls.radial(ClosedFormRadial.constant(value), n)

    @classmethod
    def zero(cls, n: int) -> "PolyRadialField":
        return cls(n, ())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_radial(self) -> bool:
        return all(psi.degree == 0 for _, psi in self.terms)

    def _check(self, other: "PolyRadialField") -> None:
        if other.n != self.n:
            raise ValueError(f"Dimension mismatch: n={self.n} vs n={other.n}")

    def __add__(self, other: "PolyRadialField") -> "PolyRadialField":
        self._check(other)
        return PolyRadialField(self.n, self.terms + other.terms)

    def __neg__(self) -> "PolyRadialField":
        return self.scale(-1)

    def __sub__(self, other: "PolyRadialField") -> "PolyRadialField":
        return self + (-other)

    def scale(self, factor) -> "PolyRadialField":
        return PolyRadialField(self.n, tuple((g * factor, psi) for g, psi in self.terms))

    def times_radial(self, h: ClosedFormRadial) -> "PolyRadialField":
        return PolyRadialField(self.n, tuple((g * h, psi) for g, psi in self.terms))

    def times_poly(self, phi: HomPoly) -> "PolyRadialField":
        return PolyRadialField(self.n, tuple((g, psi * phi) for g, psi in self.terms))

    def laplacian(self) -> "PolyRadialField":
        """Δ₀(gψ) = -(g'' + (n-1+2ℓ)g'/r)ψ + g Δ₀ψ"""
        out = []
        for g, psi in self.terms:
            ell = psi.degree
            radial_part = -(g.derivative(2) + _divide_by_r(g.derivative()) * (self.n - 1 + 2 * ell))
            out.append((radial_part, psi))
            if ell >= 2:
                out.append((g, psi.laplacian()))
        return PolyRadialField(self.n, tuple(out))

    def iterate_laplacian(self, j: int) -> "PolyRadialField":
        field = self
        for _ in range(j):
            field = field.laplacian()
        return field

    def euler(self) -> "PolyRadialField":
        """x·∇(gψ) = (r g' + ℓ g)ψ"""
        return PolyRadialField(
            self.n,
            tuple((g.euler() + g * psi.degree, psi) for g, psi in self.terms),
        )

    def radial_profile(self) -> ClosedFormRadial:
        """The field as a function of r alone; only for radial fields"""
        if not self.is_radial:
            raise ValueError("Field has non-radial terms")
        total = ClosedFormRadial.constant(0)
        for g, psi in self.terms:
            total = total + g * to_rational(psi.coefficients()[(0,) * self.n])
        return total

    def value_at_origin(self) -> sympy.Expr:
        """Exact value at x = 0 (terms with ψ of positive degree vanish there)"""
        total = sympy.Integer(0)
        for g, psi in self.terms:
            if psi.degree == 0:
                total += g.at(0) * to_rational(psi.coefficients()[(0,) * self.n])
        return sympy.simplify(total)

    def spherical_mean(self) -> ClosedFormRadial:
        """ρ ↦ average of the field over ∂B(0,ρ), exact"""
        total = ClosedFormRadial.constant(0)
        for g, psi in self.terms:
            avg = sphere_average(psi)
            if avg:
                total = total + g * ClosedFormRadial.power(psi.degree, avg)
        return total

    def values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        radii = np.linalg.norm(pts, axis=1)
        result = np.zeros(pts.shape[0])
        for g, psi in self.terms:
            result += g.evaluate(radii) * psi.evaluate(pts)
        return result

    def gradients(self, points) -> np.ndarray:
        """∇(gψ) = g'(r) ψ x/r + g ∇ψ, as an (m, n) array"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        radii = np.linalg.norm(pts, axis=1)
        result = np.zeros_like(pts)
        for g, psi in self.terms:
            gr = g.evaluate(radii)
            dg = g.derivative().evaluate(radii)
            result += (dg * psi.evaluate(pts) / radii)[:, None] * pts
            if psi.degree >= 1:
                grad = np.column_stack([d.evaluate(pts) for d in psi.gradient()])
                result += gr[:, None] * grad
        return result

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({g})*({psi})" for g, psi in self.terms)


EPS = float(np.finfo(float).eps)
LADDER_RUNGS = 5
SAMPLE_CHUNK = 512


@lru_cache(maxsize=None)
def _central_weights(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the narrowest O(h²) central difference for the order-th derivative"""
    half = (order + 1) // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    rhs = np.zeros(len(offsets))
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(np.vander(offsets, increasing=True).T, rhs)


def _convolve(left: Dict[Tuple[int, ...], float], right: Dict[Tuple[int, ...], float]) -> Dict[Tuple[int, ...], float]:
    combined: Dict[Tuple[int, ...], float] = defaultdict(float)
    for o1, w1 in left.items():
        for o2, w2 in right.items():
            combined[tuple(a + b for a, b in zip(o1, o2))] += w1 * w2
    return {o: w for o, w in combined.items() if w != 0}


@lru_cache(maxsize=None)
def _spatial_stencil(n: int, power: int, component: int) -> Tuple[np.ndarray, np.ndarray]:
    """Offsets (K, n) and weights of Δ₀^power, then ∂_component when component >= 0"""

    def unit(axis: int, sign: int) -> Tuple[int, ...]:
        return tuple(sign if a == axis else 0 for a in range(n))

    laplacian = {(0,) * n: 2.0 * n}
    for axis in range(n):
        laplacian[unit(axis, 1)] = -1.0
        laplacian[unit(axis, -1)] = -1.0
    stencil = {(0,) * n: 1.0}
    for _ in range(power):
        stencil = _convolve(stencil, laplacian)
    if component >= 0:
        stencil = _convolve(stencil, {unit(component, 1): 0.5, unit(component, -1): -0.5})
    return np.array(list(stencil), dtype=float), np.array(list(stencil.values()))


@lru_cache(maxsize=None)
def _ray_terms(a: int) -> Tuple[Tuple[int, int], ...]:
    """(t d/dt)^a = Σ_m S(a, m) t^m (d/dt)^m as (m, S(a, m)) pairs"""
    return tuple((m, int(stirling(a, m))) for m in range(a + 1) if stirling(a, m))


@dataclass(frozen=True)
class SampledField:
    """Field given by a vectorized callable on (m, n) point arrays, carried as
    Σ c·Eᵃ Δ₀ᵇ func with E = x·∇ in `terms` = ((c, a, b), ...).

    Each Eᵃ Δ₀ᵇ (or ∇ of it) is one combined stencil on func: the spatial
    step is s·|x| and Eᵃ is a difference along the ray t ↦ f(t x) with step s.
    Steps s halve down a ladder of LADDER_RUNGS rungs starting at `step`
    (default: 4·eps^{1/(order+4)}). Neighbouring rungs are Richardson
    extrapolated; the error of an extrapolate is its distance to the previous
    one plus round-off, and each point keeps the extrapolate with the smallest
    error. The *_with_error methods return that error with the values.
    """

    n: int
    func: Callable[[np.ndarray], np.ndarray]
    step: Optional[float] = None
    terms: Tuple[Tuple[float, int, int], ...] = ((1.0, 0, 0),)

    def _with_terms(self, terms) -> "SampledField":
        merged: Dict[Tuple[int, int], float] = {}
        for c, a, b in terms:
            merged[(a, b)] = merged.get((a, b), 0.0) + c
        return replace(self, terms=tuple((c, a, b) for (a, b), c in sorted(merged.items()) if c != 0))

    def _rung(self, pts: np.ndarray, a: int, b: int, component: int, s: float) -> Tuple[np.ndarray, np.ndarray]:
        offsets, weights = _spatial_stencil(self.n, b, component)
        ray: Dict[float, float] = defaultdict(float)
        for m, count in _ray_terms(a):
            qs, vs = _central_weights(m)
            for q, v in zip(qs, vs):
                ray[q] += count * v / s**m
        qs = np.array(list(ray))
        ray_weights = np.array(list(ray.values()))
        h = s * np.maximum(np.linalg.norm(pts, axis=1), 1e-3)
        grid = (
            pts[:, None, None, :] * (1 + s * qs)[None, :, None, None]
            + h[:, None, None, None] * offsets[None, None, :, :]
        )
        samples = np.asarray(self.func(grid.reshape(-1, self.n)), dtype=float)
        samples = samples.reshape(len(pts), len(qs), len(offsets))
        scale = h ** (2 * b + (component >= 0))
        value = np.einsum("pqk,q,k->p", samples, ray_weights, weights) / scale
        noise = np.einsum("pqk,q,k->p", np.abs(samples), np.abs(ray_weights), np.abs(weights)) / scale
        # a few ulps per sample
        return value, 4 * EPS * noise

    def _adaptive(self, pts: np.ndarray, a: int, b: int, component: int = -1) -> Tuple[np.ndarray, np.ndarray]:
        order = a + 2 * b + (component >= 0)
        if order == 0:
            return np.asarray(self.func(pts), dtype=float), np.zeros(len(pts))
        top = self.step if self.step is not None else 4 * EPS ** (1 / (order + 4))
        rungs = [self._rung(pts, a, b, component, top / 2**j) for j in range(LADDER_RUNGS)]
        values = np.array([v for v, _ in rungs])
        noise = np.array([e for _, e in rungs])
        extrapolated = (4 * values[1:] - values[:-1]) / 3
        spread = (4 * noise[1:] + noise[:-1]) / 3
        errors = np.abs(extrapolated[1:] - extrapolated[:-1]) + spread[1:] + spread[:-1]
        best = np.argmin(errors, axis=0)
        index = np.arange(len(pts))
        return extrapolated[1:][best, index], errors[best, index]

    def values_with_error(self, points) -> Tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.zeros(len(pts))
        errors = np.zeros(len(pts))
        for start in range(0, len(pts), SAMPLE_CHUNK):
            chunk = slice(start, start + SAMPLE_CHUNK)
            for c, a, b in self.terms:
                v, e = self._adaptive(pts[chunk], a, b)
                values[chunk] += c * v
                errors[chunk] += abs(c) * e
        return values, errors

    def values(self, points) -> np.ndarray:
        return self.values_with_error(points)[0]

    def gradients_with_error(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """∇Eᵃ Δ₀ᵇ f = (E + 1)ᵃ ∇Δ₀ᵇ f, as (m, n) values and errors"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        result = np.zeros_like(pts)
        errors = np.zeros_like(pts)
        for start in range(0, len(pts), SAMPLE_CHUNK):
            chunk = slice(start, start + SAMPLE_CHUNK)
            for component in range(self.n):
                for c, a, b in self.terms:
                    for i in range(a + 1):
                        coeff = c * math.comb(a, i)
                        v, e = self._adaptive(pts[chunk], i, b, component)
                        result[chunk, component] += coeff * v
                        errors[chunk, component] += abs(coeff) * e
        return result, errors

    def gradients(self, points) -> np.ndarray:
        return self.gradients_with_error(points)[0]

    def laplacian(self) -> "SampledField":
        """Δ₀Eᵃ = (E + 2)ᵃ Δ₀"""
        return self._with_terms(
            (c * math.comb(a, i) * 2 ** (a - i), i, b + 1) for c, a, b in self.terms for i in range(a + 1)
        )

    def euler(self) -> "SampledField":
        return self._with_terms((c, a + 1, b) for c, a, b in self.terms)

    def scale(self, factor: float) -> "SampledField":
        return self._with_terms((factor * c, a, b) for c, a, b in self.terms)

    def __add__(self, other: "SampledField") -> "SampledField":
        if other.n != self.n:
            raise ValueError(f"Dimension mismatch: n={self.n} vs n={other.n}")
        if other.func is self.func:
            return self._with_terms(self.terms + other.terms)
        if self.terms == other.terms == ((1.0, 0, 0),):
            first, second = self.func, other.func
            return SampledField(self.n, lambda pts: first(pts) + second(pts), self.step)
        raise ValueError("Sampled fields with different samplers add only before differentiation")

    def iterate_laplacian(self, j: int) -> "SampledField":
        field = self
        for _ in range(j):
            field = field.laplacian()
        return field


Field = Union[PolyRadialField, SampledField]


def mp_fraction(value: Fraction) -> mpmath.mpf:
    return mpmath.mpf(value.numerator) / value.denominator


def sample(field: Field, points) -> Tuple[np.ndarray, np.ndarray]:
    """Values and absolute error estimates; closed-form fields carry no differentiation error"""
    if isinstance(field, SampledField):
        return field.values_with_error(points)
    values = field.values(points)
    return values, np.zeros_like(values)


def sample_gradients(field: Field, points) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(field, SampledField):
        return field.gradients_with_error(points)
    grads = field.gradients(points)
    return grads, np.zeros_like(grads)
