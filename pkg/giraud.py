import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from radial_calculus import geometric_breakpoints, integrate_radial, integrate_segments

logger = logging.getLogger(__name__)

GIRAUD_EXEMPLARS: Tuple[Tuple[int, int, int], ...] = ((3, 2, 2), (3, 2, 1), (5, 2, 1), (5, 2, 0), (5, 2, -1))
DEFAULT_RHOS: Tuple[float, ...] = (10.0, 100.0, 1000.0)
DEFAULT_XI_FRACTIONS: Tuple[float, ...] = (0.0, 0.3, 0.9)


class Regime(str, Enum):
    GROWTH = "n<p+q"
    LOGARITHMIC = "n=p+q"
    DECAY = "n>p+q,q>0"
    DECAY_LOG = "n>p+q,q=0"
    DECAY_SINGULAR = "n>p+q,q<0"


@dataclass(frozen=True)
class GiraudParams:
    """∫_{B(0,ρ)} (1+|z|)^{q-n} |ξ-z|^{p-n} dz with 1 ≤ p < n, q < n and |ξ| ≤ ρ"""

    n: int
    p: int
    q: int
    rho: float
    xi_norm: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"Dimension must be at least 2, got n={self.n}")
        if not 1 <= self.p < self.n:
            raise ValueError(f"Need 1 <= p < n, got p={self.p}, n={self.n}")
        if self.q >= self.n:
            raise ValueError(f"Need q < n, got q={self.q}, n={self.n}")
        if self.rho <= 0:
            raise ValueError(f"Outer radius must be positive, got rho={self.rho}")
        if not 0 <= self.xi_norm <= self.rho:
            raise ValueError(f"Need 0 <= |xi| <= rho, got |xi|={self.xi_norm}, rho={self.rho}")

    @property
    def regime(self) -> Regime:
        n, p, q = self.n, self.p, self.q
        if n < p + q:
            return Regime.GROWTH
        if n == p + q:
            return Regime.LOGARITHMIC
        if q > 0:
            return Regime.DECAY
        if q == 0:
            return Regime.DECAY_LOG
        return Regime.DECAY_SINGULAR

    def split_radius(self) -> float:
        """Radius of the inner disc around ξ handled with the s = t^{1/p} substitution"""
        if self.xi_norm == 0:
            return min(1.0, self.rho / 10)
        return min(1.0, self.xi_norm / 2, self.rho / 10)


def envelope(params: GiraudParams) -> float:
    n, p, q = params.n, params.p, params.q
    rho, xi = params.rho, params.xi_norm
    regime = params.regime
    if regime is Regime.GROWTH:
        return rho ** (p + q - n)
    if regime is Regime.LOGARITHMIC:
        return math.log(2 + rho)
    if regime is Regime.DECAY:
        return (1 + xi) ** (p + q - n)
    if regime is Regime.DECAY_LOG:
        return (1 + xi) ** (p - n) * math.log(2 + xi)
    if regime is Regime.DECAY_SINGULAR:
        return (1 + xi) ** (p - n)
    raise RuntimeError(f"Unclassified Giraud regime for n={n}, p={p}, q={q}")


def _subsphere_area(n: int) -> float:
    """Area of S^{n-2}"""
    return 2 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2)


def radial_giraud_integral(params: GiraudParams, epsrel: float = 1e-12) -> Tuple[float, float]:
    """ξ = 0 case: ω_{n-1} ∫₀^ρ r^{p-1}(1+r)^{q-n} dr"""
    n, p, q = params.n, params.p, params.q
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)

    def integrand(r: float) -> float:
        return r ** (p - 1) * (1 + r) ** (q - n)

    breakpoints = [0.0] + geometric_breakpoints(1.0, params.rho) if params.rho > 1 else [0.0, params.rho]
    value, err = integrate_segments(integrand, breakpoints, epsrel=epsrel)
    return area * value, area * err


def axisymmetric_giraud_integral(params: GiraudParams, epsrel: float = 1e-7) -> Tuple[float, float]:
    """Polar coordinates centred at ξ: z = ξ + sω, angle φ between ω and ξ.

    ω_{n-2} ∫₀^π sin^{n-2}φ ∫₀^{s_max(φ)} s^{p-1} (1+|z|)^{q-n} ds dφ, the inner
    disc s < δ taken in the variable t = s^p. Returns (value, error estimate).
    """
    n, p, q = params.n, params.p, params.q
    rho, xi = params.rho, params.xi_norm
    delta = params.split_radius()
    inner_rel = epsrel / 10
    errors: List[float] = []

    def weight(s: float, cos_phi: float) -> float:
        z2 = xi * xi + s * s + 2 * xi * s * cos_phi
        return (1 + math.sqrt(max(z2, 0.0))) ** (q - n)

    def ray(phi: float) -> float:
        c, sn = math.cos(phi), math.sin(phi)
        s_max = -xi * c + math.sqrt(max(rho * rho - (xi * sn) ** 2, 0.0))
        cut = min(delta, s_max)
        near, near_err = integrate_radial(
            lambda t: weight(t ** (1.0 / p), c) / p, 0.0, cut**p, epsrel=inner_rel
        )
        total, err = near, near_err
        if s_max > cut:
            # |z| is smallest at s = -|ξ|cos φ
            points = set(geometric_breakpoints(cut, s_max))
            closest = -xi * c
            if cut < closest < s_max:
                points.add(closest)
            far, far_err = integrate_segments(
                lambda s: s ** (p - 1) * weight(s, c), sorted(points | {cut}), epsrel=inner_rel
            )
            total += far
            err += far_err
        errors.append(err)
        return math.sin(phi) ** (n - 2) * total

    value, outer_err = integrate_radial(ray, 0.0, math.pi, epsrel=epsrel, limit=400)
    area = _subsphere_area(n)
    estimate = area * (outer_err + math.pi * max(errors, default=0.0))
    return area * value, estimate


def giraud_integral(params: GiraudParams) -> Tuple[float, float]:
    """Value and error estimate of the Giraud integral"""
    if params.xi_norm == 0:
        value, err = radial_giraud_integral(params)
    else:
        value, err = axisymmetric_giraud_integral(params)
    logger.debug(
        f"Giraud n={params.n} p={params.p} q={params.q} rho={params.rho:g} |xi|={params.xi_norm:g}: "
        f"{value:.10e} (err {err:.2e})"
    )
    return value, err


@dataclass
class SweepPoint:
    rho: float
    xi_norm: float
    value: float
    error: float
    envelope: float

    @property
    def ratio(self) -> float:
        return self.value / self.envelope


@dataclass
class EnvelopeSweep:
    n: int
    p: int
    q: int
    regime: Regime
    points: List[SweepPoint] = field(default_factory=list)

    @property
    def min_ratio(self) -> float:
        return min(pt.ratio for pt in self.points)

    @property
    def max_ratio(self) -> float:
        return max(pt.ratio for pt in self.points)

    def within(self, lower: float = 1 / 50, upper: float = 50.0) -> bool:
        return lower <= self.min_ratio and self.max_ratio <= upper


def _evaluate(params: GiraudParams) -> SweepPoint:
    value, err = giraud_integral(params)
    return SweepPoint(params.rho, params.xi_norm, value, err, envelope(params))


def envelope_ratio_sweep(
    n: int,
    p: int,
    q: int,
    rhos: Sequence[float] = DEFAULT_RHOS,
    xi_fractions: Sequence[float] = DEFAULT_XI_FRACTIONS,
    workers: int = 1,
) -> EnvelopeSweep:
    """Ratios of the integral to its regime envelope over the (ρ, |ξ|/ρ) grid"""
    grid = [GiraudParams(n, p, q, float(rho), float(frac) * float(rho)) for rho in rhos for frac in xi_fractions]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_evaluate, grid))
    else:
        points = [_evaluate(params) for params in grid]
    sweep = EnvelopeSweep(n, p, q, grid[0].regime, points)
    logger.info(
        f"Giraud sweep n={n} p={p} q={q} ({sweep.regime.value}): "
        f"ratio in [{sweep.min_ratio:.4g}, {sweep.max_ratio:.4g}]"
    )
    return sweep


def is_monotone_in_rho(n: int, p: int, q: int, xi_norm: float, rhos: Sequence[float]) -> bool:
    """The integrand is positive, so the integral cannot decrease as the ball grows"""
    rhos = sorted(rhos)
    values = [giraud_integral(GiraudParams(n, p, q, rho, xi_norm))[0] for rho in rhos]
    return all(b >= a * (1 - 1e-8) for a, b in zip(values[:-1], values[1:]))


@dataclass
class MonteCarloEstimate:
    mean: float
    standard_error: float
    samples: int


def monte_carlo_giraud(
    params: GiraudParams,
    samples: int = 10_000_000,
    seed: int = 0,
    chunk: int = 1_000_000,
    rng: Optional[np.random.Generator] = None,
) -> MonteCarloEstimate:
    """Direct estimate from points uniform in B(0,ρ) ⊂ ℝ³; ξ along the first axis"""
    if params.n != 3:
        raise ValueError(f"Monte-Carlo cross-check is implemented for n=3, got n={params.n}")
    if params.p < 2:
        raise ValueError(f"Need p >= 2 for a finite-variance estimate, got p={params.p}")
    rng = rng or np.random.default_rng(seed)
    n, p, q, rho = params.n, params.p, params.q, params.rho
    xi = np.zeros(n)
    xi[0] = params.xi_norm
    total, total_sq, drawn = 0.0, 0.0, 0
    while drawn < samples:
        m = min(chunk, samples - drawn)
        directions = rng.standard_normal((m, n))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        radii = rho * rng.random(m) ** (1.0 / n)
        z = directions * radii[:, None]
        values = (1 + radii) ** (q - n) * np.linalg.norm(xi - z, axis=1) ** (p - n)
        total += values.sum()
        total_sq += np.square(values).sum()
        drawn += m
    volume = 4 / 3 * math.pi * rho**3
    mean = total / drawn
    variance = max(total_sq / drawn - mean**2, 0.0)
    estimate = MonteCarloEstimate(volume * mean, volume * math.sqrt(variance / drawn), drawn)
    logger.debug(f"Monte-Carlo Giraud {params}: {estimate.mean:.6e} ± {estimate.standard_error:.2e}")
    return estimate
