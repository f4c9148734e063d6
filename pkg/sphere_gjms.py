import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import linalg, special

from bubble import c_nk
from radial_calculus import Dimension

logger = logging.getLogger(__name__)

CHARTS = ("conformal", "round")
RESOLUTION_THRESHOLD = 1e-8

ZonalFunction = Callable[[np.ndarray], np.ndarray]


class NewtonDivergenceError(RuntimeError):
    """Raised when the Newton iteration stalls or runs out of iterations"""


class PositivityError(RuntimeError):
    def __init__(self, message: str, node_index: int, x: float, value: float):
        super().__init__(message)
        self.node_index = node_index
        self.x = x
        self.value = value


class PoleNotMaximumError(ValueError):
    """Raised when the diagnosed solution does not peak at the pole"""


@dataclass(frozen=True)
class GjmsSphereSpec:
    """P = ∏_{i=1}^k (Δ + K_i) on the unit round Sⁿ, K_i = (n+2i-2)(n-2i)/4"""

    dim: Dimension

    @property
    def shift_constants(self) -> Tuple[Fraction, ...]:
        n = self.dim.n
        return tuple(Fraction((n + 2 * i - 2) * (n - 2 * i), 4) for i in range(1, self.dim.k + 1))

    @property
    def product_constant(self) -> Fraction:
        """P(1) = ∏K_i"""
        return math.prod(self.shift_constants, start=Fraction(1))

    @property
    def q_constant(self) -> Fraction:
        return q_curvature_constant(self)


def laplacian_eigenvalue(n: int, ell: int) -> int:
    """Eigenvalue ℓ(ℓ+n-1) of the round Laplacian on degree-ℓ harmonics of Sⁿ"""
    if ell < 0:
        raise ValueError(f"Harmonic degree must be non-negative, got {ell}")
    return ell * (ell + n - 1)


def gjms_multiplier(spec: GjmsSphereSpec, ell: int) -> Fraction:
    lam = laplacian_eigenvalue(spec.dim.n, ell)
    return math.prod((lam + K for K in spec.shift_constants), start=Fraction(1))


def q_curvature_constant(spec: GjmsSphereSpec) -> Fraction:
    """Q = 2/(n-2k) P(1)"""
    return Fraction(2, spec.dim.n - 2 * spec.dim.k) * spec.product_constant


def multipliers(spec: GjmsSphereSpec, L: int) -> np.ndarray:
    return np.array([float(gjms_multiplier(spec, ell)) for ell in range(L + 1)])


def sphere_volume(n: int) -> float:
    """Volume of the unit Sⁿ"""
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


GRID_DPS = 32
NODE_POLISH_STEPS = 2


@lru_cache(maxsize=64)
def _zonal_scales(n: int, L: int) -> Tuple[float, ...]:
    """1/√(ω_{n-1} h_ℓ) for the Gegenbauer norms h_ℓ with α = (n-1)/2, ℓ = 0..L"""
    with mpmath.workdps(GRID_DPS):
        alpha = mpmath.mpf(n - 1) / 2
        area = 2 * mpmath.pi ** (mpmath.mpf(n) / 2) / mpmath.gamma(mpmath.mpf(n) / 2)
        lead = mpmath.pi * mpmath.mpf(2) ** (1 - 2 * alpha) / mpmath.gamma(alpha) ** 2
        scales = []
        for ell in range(L + 1):
            h = lead * mpmath.gamma(ell + 2 * alpha) / (mpmath.factorial(ell) * (ell + alpha))
            scales.append(float(1 / mpmath.sqrt(area * h)))
    return tuple(scales)


@lru_cache(maxsize=64)
def _pole_values(n: int, L: int) -> np.ndarray:
    """Y_ℓ(1) = scale_ℓ · C_ℓ^α(1), with C_ℓ^α(1) = Γ(ℓ+2α)/(Γ(2α) ℓ!)"""
    scales = _zonal_scales(n, L)
    with mpmath.workdps(GRID_DPS):
        alpha = mpmath.mpf(n - 1) / 2
        at_one = [mpmath.gamma(ell + 2 * alpha) / (mpmath.gamma(2 * alpha) * mpmath.factorial(ell)) for ell in range(L + 1)]
        return np.array([float(scales[ell] * value) for ell, value in enumerate(at_one)])


def zonal_basis(n: int, L: int, x) -> np.ndarray:
    """Orthonormal zonal harmonics Y_ℓ(cos θ) on Sⁿ, ℓ = 0..L, as a (len(x), L+1) array"""
    alpha = (n - 1) / 2
    x = np.atleast_1d(np.asarray(x, dtype=float))
    columns = [special.eval_gegenbauer(ell, alpha, x) for ell in range(L + 1)]
    return np.column_stack(columns) * np.array(_zonal_scales(n, L))


def zonal_basis_derivative_at_pole(n: int, L: int) -> np.ndarray:
    """d/dx Y_ℓ at x = 1, from d/dx C_ℓ^α = 2α C_{ℓ-1}^{α+1}"""
    scales = _zonal_scales(n, L)
    values = np.zeros(L + 1)
    with mpmath.workdps(GRID_DPS):
        alpha = mpmath.mpf(n - 1) / 2
        for ell in range(1, L + 1):
            shifted = mpmath.gamma(ell + 2 * alpha + 1) / (mpmath.gamma(2 * alpha + 2) * mpmath.factorial(ell - 1))
            values[ell] = float(2 * alpha * shifted * scales[ell])
    return values


def _gegenbauer_table(alpha, x, degree: int) -> List:
    """C_0^α(x), ..., C_degree^α(x) by the three-term recurrence"""
    table = [mpmath.mpf(1), 2 * alpha * x]
    for m in range(1, degree):
        table.append((2 * (m + alpha) * x * table[m] - (m + 2 * alpha - 1) * table[m - 1]) / (m + 1))
    return table[: degree + 1]


def _polished_node(alpha, count: int, guess: float) -> Tuple:
    """Newton-polished root of C_count^α with the table and derivative at the root"""
    x = mpmath.mpf(guess)
    for step in range(NODE_POLISH_STEPS + 1):
        table = _gegenbauer_table(alpha, x, count)
        # (1 - x²) C_N' = -N x C_N + (N + 2α - 1) C_{N-1}
        derivative = (-count * x * table[count] + (count + 2 * alpha - 1) * table[count - 1]) / (1 - x * x)
        if step == NODE_POLISH_STEPS:
            return x, table, derivative
        x -= table[count] / derivative


@dataclass(frozen=True, eq=False)
class ZonalTransform:
    """Gauss-Gegenbauer grid on the polar angle of Sⁿ with the forward/inverse zonal transform"""

    n: int
    L: int
    nodes: np.ndarray
    weights: np.ndarray
    basis: np.ndarray

    def forward(self, values: np.ndarray) -> np.ndarray:
        return self.basis.T @ (self.weights * values)

    def forward_compensated(self, values: np.ndarray) -> np.ndarray:
        """forward() with each coefficient summed by math.fsum"""
        terms = self.basis * (self.weights * values)[:, None]
        return np.array([math.fsum(column) for column in terms.T])

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        return self.basis @ coefficients


@lru_cache(maxsize=64)
def zonal_transform(n: int, L: int, oversample: float = 3.0) -> ZonalTransform:
    """Grid of ⌈oversample·L⌉ nodes; 2L is enough for band-limited products, 3L dealiases.

    scipy's nodes are polished by Newton steps in mpmath; weights and basis values
    are then taken at the polished roots, so the grid stays exact to double precision
    next to the poles where the zonal harmonics peak.
    """
    if L < 1:
        raise ValueError(f"Truncation must be at least 1, got L={L}")
    count = max(int(math.ceil(oversample * L)), L + 1)
    guesses = np.sort(special.roots_gegenbauer(count, (n - 1) / 2)[0])
    scales = np.array(_zonal_scales(n, L))
    nodes = np.zeros(count)
    raw_weights = [None] * count
    basis = np.zeros((count, L + 1))
    parity = (-1.0) ** np.arange(L + 1)
    with mpmath.workdps(GRID_DPS):
        alpha = mpmath.mpf(n - 1) / 2
        for j in range(count // 2, count):
            x, table, derivative = _polished_node(alpha, count, abs(guesses[j]))
            mirror = count - 1 - j
            raw_weights[j] = raw_weights[mirror] = 1 / ((1 - x * x) * derivative**2)
            nodes[j], nodes[mirror] = float(x), -float(x)
            row = np.array([float(value) for value in table[: L + 1]]) * scales
            basis[j], basis[mirror] = row, row * parity
        total = mpmath.fsum(raw_weights)
        mass = mpmath.sqrt(mpmath.pi) * mpmath.gamma(alpha + mpmath.mpf(1) / 2) / mpmath.gamma(alpha + 1)
        area = 2 * mpmath.pi ** (mpmath.mpf(n) / 2) / mpmath.gamma(mpmath.mpf(n) / 2)
        weights = np.array([float(w * mass * area / total) for w in raw_weights])
    return ZonalTransform(n, L, nodes, weights, basis)


@dataclass(frozen=True, eq=False)
class SpectralRadialField:
    """Rotationally symmetric function on Sⁿ as coefficients on the orthonormal zonal harmonics"""

    n: int
    coefficients: np.ndarray

    @property
    def L(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def from_function(cls, n: int, L: int, func: ZonalFunction) -> "SpectralRadialField":
        """Project func(cos θ) onto degrees 0..L"""
        transform = zonal_transform(n, L)
        return cls(n, transform.forward_compensated(np.asarray(func(transform.nodes), dtype=float)))

    @classmethod
    def constant(cls, n: int, L: int, value: float) -> "SpectralRadialField":
        coefficients = np.zeros(L + 1)
        coefficients[0] = value * math.sqrt(sphere_volume(n))
        return cls(n, coefficients)

    def values(self, x) -> np.ndarray:
        """Field at polar points x = cos θ"""
        return zonal_basis(self.n, self.L, x) @ self.coefficients

    def grid_values(self) -> np.ndarray:
        return zonal_transform(self.n, self.L).inverse(self.coefficients)

    def at_pole(self) -> float:
        return math.fsum(_pole_values(self.n, self.L) * self.coefficients)

    def x_derivative_at_pole(self) -> float:
        return float(zonal_basis_derivative_at_pole(self.n, self.L) @ self.coefficients)

    def inner(self, other: "SpectralRadialField") -> float:
        """L² pairing on Sⁿ"""
        return float(np.dot(self.coefficients, other.coefficients))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def tail_ratio(self, width: int = 8) -> float:
        """Largest of the last `width` coefficients relative to the largest coefficient"""
        peak = np.max(np.abs(self.coefficients))
        if peak == 0:
            return 0.0
        return float(np.max(np.abs(self.coefficients[-width:])) / peak)

    def __add__(self, other: "SpectralRadialField") -> "SpectralRadialField":
        return SpectralRadialField(self.n, self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralRadialField") -> "SpectralRadialField":
        return SpectralRadialField(self.n, self.coefficients - other.coefficients)

    def scale(self, factor: float) -> "SpectralRadialField":
        return SpectralRadialField(self.n, factor * self.coefficients)


def apply_gjms(spec: GjmsSphereSpec, u: SpectralRadialField) -> SpectralRadialField:
    if u.n != spec.dim.n:
        raise ValueError(f"Field lives on S^{u.n}, operator on S^{spec.dim.n}")
    return SpectralRadialField(u.n, multipliers(spec, u.L) * u.coefficients)


def _check_resolution(u: SpectralRadialField, label: str) -> None:
    ratio = u.tail_ratio()
    if ratio > RESOLUTION_THRESHOLD:
        logger.warning(
            f"{label}: truncation L={u.L} does not resolve the profile "
            f"(tail/peak coefficient ratio {ratio:.2e} > {RESOLUTION_THRESHOLD:.0e})"
        )


def stereographic_profile(spec: GjmsSphereSpec, mu: float) -> ZonalFunction:
    """u(cos θ) = [μ'/(μ'²(1+x) + (1-x)/𝔠)]^{(n-2k)/2}, μ' = μ/2"""
    if mu <= 0:
        raise ValueError(f"Concentration scale must be positive, got mu={mu}")
    c = float(c_nk(spec.dim))
    b = float(spec.dim.weight)
    half = mu / 2

    def profile(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (half / (half * half * (1 + x) + (1 - x) / c)) ** b

    return profile


def stereographic_bubble(spec: GjmsSphereSpec, mu: float, L: int = 64) -> SpectralRadialField:
    """Flat bubble pulled back to Sⁿ by stereographic projection; u(pole) = μ^{-(n-2k)/2}"""
    u = SpectralRadialField.from_function(spec.dim.n, L, stereographic_profile(spec, mu))
    _check_resolution(u, f"stereographic bubble {spec.dim} mu={mu}")
    return u


def constant_solution(spec: GjmsSphereSpec, p: float, L: int = 64) -> SpectralRadialField:
    """u ≡ (∏K_i)^{1/(p-2)}, the constant solution of Pu = u^{p-1}"""
    if p <= 2:
        raise ValueError(f"Exponent must exceed 2, got p={p}")
    value = float(spec.product_constant) ** (1 / (p - 2))
    return SpectralRadialField.constant(spec.dim.n, L, value)


def _weight_on_grid(spec: GjmsSphereSpec, p: float, f: Optional[ZonalFunction], nodes: np.ndarray) -> np.ndarray:
    if f is None:
        return np.ones_like(nodes)
    fv = np.asarray(f(nodes), dtype=float)
    if np.any(fv <= 0):
        raise ValueError("Weight f must be positive on the grid")
    return fv ** (p - float(spec.dim.crit_exp))


def spectral_residual(
    spec: GjmsSphereSpec, u: SpectralRadialField, p: Optional[float] = None, f: Optional[ZonalFunction] = None
) -> float:
    """‖Pu - f^{p-2*}u^{p-1}‖ / ‖f^{p-2*}u^{p-1}‖ in coefficient norm; p defaults to 2*"""
    p = float(spec.dim.crit_exp) if p is None else p
    transform = zonal_transform(u.n, u.L)
    values = transform.inverse(u.coefficients)
    g = _weight_on_grid(spec, p, f, transform.nodes)
    rhs = transform.forward(g * np.abs(values) ** (p - 2) * values)
    lhs = multipliers(spec, u.L) * u.coefficients
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))


@dataclass
class SolveResult:
    field: SpectralRadialField
    p: float
    iterations: int
    residual: float


def _check_positive(u: SpectralRadialField) -> None:
    transform = zonal_transform(u.n, u.L)
    values = transform.inverse(u.coefficients)
    negative = np.flatnonzero(values <= 0)
    if negative.size:
        j = int(negative[0])
        raise PositivityError(
            f"Solution is not positive at grid node {j} (x={transform.nodes[j]:.6f}, u={values[j]:.3e})",
            j,
            float(transform.nodes[j]),
            float(values[j]),
        )


def solve_subcritical(
    spec: GjmsSphereSpec,
    p: float,
    init: SpectralRadialField,
    f: Optional[ZonalFunction] = None,
    tol: float = 1e-10,
    max_iterations: int = 50,
    max_halvings: int = 30,
) -> SolveResult:
    """Newton on the coefficients of Pu - f^{p-2*}u^{p-1} = 0, the nonlinearity
    evaluated on the dealiasing grid. Positivity is checked once, at acceptance."""
    if not 2 < p <= float(spec.dim.crit_exp) + 1e-12:
        raise ValueError(f"Exponent must lie in (2, {float(spec.dim.crit_exp)}], got p={p}")
    if init.n != spec.dim.n:
        raise ValueError(f"Initial field lives on S^{init.n}, operator on S^{spec.dim.n}")
    transform = zonal_transform(init.n, init.L)
    g = _weight_on_grid(spec, p, f, transform.nodes)
    diag = multipliers(spec, init.L)
    if np.any(transform.inverse(init.coefficients) <= 0):
        raise ValueError("Initial guess must be positive on the grid")

    def residual(a: np.ndarray) -> Tuple[np.ndarray, float]:
        u = transform.inverse(a)
        F = diag * a - transform.forward(g * np.abs(u) ** (p - 2) * u)
        scale = max(np.linalg.norm(diag * a), np.finfo(float).tiny)
        return F, float(np.linalg.norm(F) / scale)

    a = init.coefficients.copy()
    F, rel = residual(a)
    iterations = 0
    while rel > tol:
        if iterations >= max_iterations:
            raise NewtonDivergenceError(
                f"Newton did not converge in {max_iterations} iterations (residual {rel:.3e})"
            )
        u = transform.inverse(a)
        derivative = (p - 1) * g * np.abs(u) ** (p - 2)
        J = np.diag(diag) - transform.basis.T @ ((transform.weights * derivative)[:, None] * transform.basis)
        step = linalg.lstsq(J, -F)[0]
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = a + t * step
            F_trial, rel_trial = residual(trial)
            if rel_trial < rel:
                break
            t /= 2
        else:
            raise NewtonDivergenceError(
                f"Line search failed after {max_halvings} halvings at iteration {iterations} (residual {rel:.3e})"
            )
        a, F, rel = trial, F_trial, rel_trial
        iterations += 1
        logger.debug(f"Newton p={p}: iteration {iterations}, step {t:g}, residual {rel:.3e}")
    solution = SpectralRadialField(init.n, a)
    _check_positive(solution)
    logger.debug(f"Newton p={p} converged in {iterations} iterations (residual {rel:.3e})")
    return SolveResult(solution, p, iterations, rel)


def solve_picard(
    spec: GjmsSphereSpec,
    p: float,
    init: SpectralRadialField,
    f: Optional[ZonalFunction] = None,
    damping: float = 0.7,
    tol: float = 1e-13,
    max_iterations: int = 5000,
) -> SolveResult:
    """Normalized damped fixed-point iteration w ↦ P⁻¹(f^{p-2*}w^{p-1}).

    The map is homogeneous of degree p-1, so the iteration runs on the unit
    sphere of coefficients; the fixed direction w with T(w) = σw is rescaled
    by σ^{-1/(p-2)} at the end.
    """
    if p <= 2:
        raise ValueError(f"Exponent must exceed 2, got p={p}")
    transform = zonal_transform(init.n, init.L)
    g = _weight_on_grid(spec, p, f, transform.nodes)
    inverse_diag = 1 / multipliers(spec, init.L)

    def T(w: np.ndarray) -> np.ndarray:
        u = transform.inverse(w)
        return inverse_diag * transform.forward(g * np.abs(u) ** (p - 2) * u)

    w = init.coefficients / np.linalg.norm(init.coefficients)
    for iteration in range(1, max_iterations + 1):
        image = T(w)
        blended = (1 - damping) * w + damping * image / np.linalg.norm(image)
        blended /= np.linalg.norm(blended)
        change = np.linalg.norm(blended - w)
        w = blended
        if change <= tol:
            break
    else:
        raise NewtonDivergenceError(f"Picard iteration did not settle in {max_iterations} iterations")
    sigma = float(np.dot(T(w), w))
    solution = SpectralRadialField(init.n, sigma ** (-1 / (p - 2)) * w)
    _check_positive(solution)
    rel = spectral_residual(spec, solution, p, f)
    logger.debug(f"Picard p={p} settled in {iteration} iterations (residual {rel:.3e})")
    return SolveResult(solution, p, iteration, rel)


@dataclass
class BranchPoint:
    p: float
    max_u: float
    mu: float
    iterations: int


def continue_in_p(
    spec: GjmsSphereSpec,
    p_values: Sequence[float],
    f: Optional[ZonalFunction] = None,
    L: int = 64,
    init: Optional[SpectralRadialField] = None,
) -> List[BranchPoint]:
    """Natural continuation: each solve starts from the previous solution"""
    current = init or constant_solution(spec, p_values[0], L)
    branch: List[BranchPoint] = []
    for p in p_values:
        result = solve_subcritical(spec, p, current, f)
        current = result.field
        peak = current.at_pole()
        max_u = float(max(peak, np.max(current.grid_values())))
        branch.append(BranchPoint(p, max_u, concentration_scale(peak, p, spec.dim), result.iterations))
        logger.info(f"branch {spec.dim} p={p:.6g}: max u={max_u:.8g}, {result.iterations} Newton steps")
    return branch


def concentration_scale(peak: float, p: float, dim: Dimension) -> float:
    """μ = u(pole)^{-(p-2)/(2k)}"""
    if peak <= 0:
        raise ValueError(f"Peak value must be positive, got {peak}")
    return peak ** (-(p - 2) / (2 * dim.k))


@dataclass
class BlowupDiagnostics:
    mu: float
    radius_of_influence: float
    epsilon: float
    profile_distance: float
    domain_radius: float
    chart: str = "conformal"
    distances: List[float] = field(default_factory=list, repr=False)
    deviations: List[float] = field(default_factory=list, repr=False)


def comparison_bubble(mu: float, p: float, dim: Dimension, distance: np.ndarray) -> np.ndarray:
    """B(d) = μ^{n-2k-2k/(p-2)}(μ² + d²/𝔠)^{-(n-2k)/2}"""
    c = float(c_nk(dim))
    b = float(dim.weight)
    n, k = dim.n, dim.k
    return mu ** (n - 2 * k - 2 * k / (p - 2)) * (mu * mu + distance**2 / c) ** (-b)


def _chart(chart: str, theta: np.ndarray, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """Chart distance to the pole and the factor dividing u, at polar angles θ"""
    if chart == "conformal":
        z = 2 * np.tan(theta / 2)
        return z, (1 + z * z / 4) ** b
    if chart == "round":
        return theta, np.ones_like(theta)
    raise ValueError(f"Unknown chart '{chart}', expected one of {CHARTS}")


def _chart_angle(chart: str, distance: np.ndarray) -> np.ndarray:
    if chart == "conformal":
        return 2 * np.arctan(distance / 2)
    return distance


def blowup_diagnostics(
    u: SpectralRadialField,
    p: float,
    dim: Dimension,
    epsilon: float = 0.1,
    chart: str = "conformal",
    samples: int = 2000,
    profile_radius: float = 10.0,
) -> BlowupDiagnostics:
    """Concentration scale, radius of influence and rescaled-profile distance at the pole"""
    if not 0 < epsilon < 1:
        raise ValueError(f"Need 0 < epsilon < 1, got {epsilon}")
    if u.n != dim.n:
        raise ValueError(f"Field lives on S^{u.n}, expected S^{dim.n}")
    peak = u.at_pole()
    if peak <= 0:
        raise ValueError(f"Field must be positive at the pole, got {peak}")
    grid = u.grid_values()
    slope = u.x_derivative_at_pole()
    if slope < -1e-9 * abs(peak) or np.max(grid) > peak * (1 + 1e-9):
        raise PoleNotMaximumError(
            f"Pole is not a maximum: u(pole)={peak:.6e}, du/dx(pole)={slope:.3e}, max on grid={np.max(grid):.6e}"
        )
    b = float(dim.weight)
    mu = concentration_scale(peak, p, dim)

    theta = np.linspace(0.0, 0.999 * math.pi, samples + 1)[1:]
    distance, factor = _chart(chart, theta, b)
    v = u.values(np.cos(theta)) / factor
    bubble = comparison_bubble(mu, p, dim, distance)
    deviation = np.abs(v - bubble) / bubble
    outside = np.flatnonzero(deviation > epsilon)
    if outside.size == 0:
        radius = float(distance[-1])
    elif outside[0] == 0:
        radius = 0.0
    else:
        radius = float(distance[outside[0] - 1])

    scaled = np.linspace(0.0, profile_radius, samples + 1)
    angle = _chart_angle(chart, mu * scaled)
    keep = angle <= 0.999 * math.pi
    angle, scaled = angle[keep], scaled[keep]
    _, scaled_factor = _chart(chart, angle, b)
    rescaled = mu ** (2 * dim.k / (p - 2)) * u.values(np.cos(angle)) / scaled_factor
    flat = (1 + scaled**2 / float(c_nk(dim))) ** (-b)
    profile_distance = float(np.max(np.abs(rescaled - flat)))

    logger.info(
        f"blow-up {dim} ({chart} chart): mu={mu:.10g}, radius of influence={radius:.6g}, "
        f"profile distance={profile_distance:.3e}"
    )
    return BlowupDiagnostics(
        mu=mu,
        radius_of_influence=radius,
        epsilon=epsilon,
        profile_distance=profile_distance,
        domain_radius=float(distance[-1]),
        chart=chart,
        distances=distance.tolist(),
        deviations=deviation.tolist(),
    )
