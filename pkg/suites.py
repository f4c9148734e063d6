import logging
import math
import random
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from bubble import (
    BubbleSpec,
    bubble_center_defect,
    bubble_mass_identity,
    bubble_pde_residual,
    mass_integral_closed_form,
    mass_integral_quadrature,
)
from config import COMMANDS, RunConfig
from fields import PolyRadialField
from giraud import (
    DEFAULT_RHOS,
    DEFAULT_XI_FRACTIONS,
    GIRAUD_EXEMPLARS,
    GiraudParams,
    axisymmetric_giraud_integral,
    envelope_ratio_sweep,
    giraud_integral,
    is_monotone_in_rho,
    monte_carlo_giraud,
    radial_giraud_integral,
)
from green_flat import GreenModel, dirac_check, green_bound_constant, mass_constant, mass_limit
from harmonic_poly import (
    HarmonicDecomposition,
    HomPoly,
    brute_force_weighted_laplacian,
    decompose,
    green_correction_pipeline,
    invert_weighted,
    sphere_average,
    vanishing_sphere_integrals,
    weighted_factor,
    weighted_power_laplacian,
)
from pohozaev import boundary_functional, identity_residual, singular_mass_limit
from radial_calculus import ClosedFormRadial, Dimension
from sphere_gjms import (
    GjmsSphereSpec,
    SpectralRadialField,
    apply_gjms,
    blowup_diagnostics,
    constant_solution,
    continue_in_p,
    gjms_multiplier,
    q_curvature_constant,
    solve_picard,
    solve_subcritical,
    spectral_residual,
    stereographic_bubble,
)

logger = logging.getLogger(__name__)

BUBBLE_PAIRS = ((3, 1), (5, 1), (5, 2), (7, 2), (7, 3), (9, 3), (9, 4))
POHOZAEV_PAIRS = ((5, 2), (7, 3))
GREEN_PAIRS = ((5, 2), (7, 3))
MASS_PAIRS = ((8, 2),)
SPHERE_PAIRS = ((3, 1), (5, 2))
BLOWUP_PAIRS = ((5, 2),)
BLOWUP_MU_TOL = 1e-10
POLY_PAIRS = ((5, 2), (7, 3), (9, 4))
PIPELINE_PAIRS = ((8, 2), (9, 2))

KNOWN_SPHERE_CONSTANTS = {
    (3, 1): {"Q": Fraction(3, 2), "P_0": Fraction(3, 4), "P_1": Fraction(15, 4), "P_2": Fraction(35, 4)},
    (5, 2): {"Q": Fraction(105, 8), "P_0": Fraction(105, 16)},
}


@dataclass
class CheckOutcome:
    value: Any
    passed: bool
    series: Optional[Dict[str, Any]] = None


@dataclass
class Check:
    """One verification: a name, the identity it verifies and a picklable computation"""

    name: str
    anchor: str
    inputs: Dict[str, Any]
    tolerance: Optional[float]
    compute: Callable[[], CheckOutcome]


@dataclass
class CheckResult:
    name: str
    anchor: str
    inputs: Dict[str, Any]
    value: Any
    tolerance: Optional[float]
    passed: bool
    runtime_ms: float
    series: Optional[Dict[str, Any]] = field(default=None, repr=False)

    def to_record(self, timings: bool = False) -> Dict[str, Any]:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "inputs": self.inputs,
            "value": self.value,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "runtime_ms": round(self.runtime_ms, 3) if timings else None,
        }


def _within(value: float, tol: float) -> bool:
    return bool(math.isfinite(value) and value <= tol)


def _relative(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else abs(a)


def _gaussian_field(n: int) -> PolyRadialField:
    return PolyRadialField.radial(ClosedFormRadial.gaussian(1), n)


def _random_poly(n: int, degree: int, rng: random.Random, terms: int = 3) -> HomPoly:
    """Sparse random homogeneous polynomial with small integer coefficients"""
    coeffs: Dict[Tuple[int, ...], int] = {}
    for _ in range(terms):
        exponents = [0] * n
        for _ in range(degree):
            exponents[rng.randrange(n)] += 1
        coeffs[tuple(exponents)] = coeffs.get(tuple(exponents), 0) + rng.choice([-3, -2, -1, 1, 2, 3])
    poly = HomPoly.from_dict(n, coeffs, degree)
    if poly.is_zero and degree == 0:
        return HomPoly.constant(n, 1)
    return poly


def _random_trace_free(n: int, rng: random.Random) -> List[List[Fraction]]:
    matrix = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            value = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
            matrix[a][b] = matrix[b][a] = value
    trace = sum(matrix[a][a] for a in range(n))
    matrix[n - 1][n - 1] -= trace
    return matrix


def _without_kernel(T: HomPoly, q: int, dim: Dimension) -> HomPoly:
    """T minus its components on which Δ₀ᵏ(r^q ·) vanishes"""
    kept = tuple(
        (p, h)
        for p, h in decompose(T).components
        if weighted_factor(Fraction(q), T.n, T.degree, T.degree - 2 * p, dim.k) != 0
    )
    return HarmonicDecomposition(T.n, T.degree, kept).recombine()


# bubble


def bubble_pde_check(n: int, k: int, tol: float) -> CheckOutcome:
    spec = BubbleSpec(Dimension(n, k))
    grid = np.concatenate([[0.0], np.logspace(-3, math.log10(50.0), 199)])
    residuals = [bubble_pde_residual(spec, [r]) for r in grid]
    worst = max(residuals)
    series = {"kind": "residual", "label": f"n={n}, k={k}", "x": grid[1:].tolist(), "y": residuals[1:]}
    return CheckOutcome(worst, _within(worst, tol), series)


def bubble_mass_check(n: int, k: int, tol: float) -> CheckOutcome:
    defect = bubble_mass_identity(BubbleSpec(Dimension(n, k)))
    return CheckOutcome(defect, _within(defect, tol))


def bubble_mass_closed_form_check(n: int, k: int, tol: float) -> CheckOutcome:
    dim = Dimension(n, k)
    quadrature, _ = mass_integral_quadrature(dim)
    closed = float(mass_integral_closed_form(dim))
    error = _relative(quadrature, closed)
    return CheckOutcome({"closed_form": closed, "quadrature": quadrature, "relative_error": error}, _within(error, tol))


def bubble_center_check(n: int, k: int) -> CheckOutcome:
    defect = bubble_center_defect(BubbleSpec(Dimension(n, k)))
    exact_zero = defect == 0 or abs(sympy.N(defect, 60)) < 1e-45
    return CheckOutcome(float(defect), bool(exact_zero))


# pohozaev


def pohozaev_identity_check(n: int, k: int, tol: float) -> CheckOutcome:
    dim = Dimension(n, k)
    report = identity_residual(_gaussian_field(n), None, 2.0, 0.5, 1.5, dim)
    relative = abs(report.residual) / report.scale
    value = {
        "residual": report.residual,
        "relative_residual": relative,
        "boundary_outer": report.boundary_outer,
        "boundary_inner": report.boundary_inner,
        "error_estimate": report.error_estimate,
    }
    return CheckOutcome(value, _within(relative, tol))


def pohozaev_bubble_check(n: int, k: int, tol: float) -> CheckOutcome:
    """u = Ũ₁, f ≡ 1, p = 2*: the error term vanishes and only round-off remains"""
    dim = Dimension(n, k)
    bubble = PolyRadialField.radial(BubbleSpec(dim).profile(), n)
    report = identity_residual(bubble, None, float(dim.crit_exp), 0.5, 1.5, dim)
    relative = abs(report.residual) / report.scale
    value = {
        "residual": report.residual,
        "relative_residual": relative,
        "error_term": report.volume_terms["error_term"],
        "error_estimate": report.error_estimate,
    }
    return CheckOutcome(value, _within(relative, tol))


def fundamental_boundary_check(n: int, k: int, tol: float) -> CheckOutcome:
    dim = Dimension(n, k)
    g0 = PolyRadialField.radial(ClosedFormRadial.power(2 * k - n), n)
    radii = np.geomspace(1e-2, 10.0, 25)
    values = [float(boundary_functional(g0, r, dim)) for r in radii]
    worst = max(abs(v) for v in values)
    return CheckOutcome(worst, _within(worst, tol))


def singular_mass_check(n: int, k: int, tol: float) -> CheckOutcome:
    dim = Dimension(n, k)
    h = _gaussian_field(n) + PolyRadialField.polynomial(HomPoly.coordinate(n, 0))
    result = singular_mass_limit(1, h, dim, method="exact")
    value = {"limit": result.limit, "expected": result.expected, "relative_error": result.relative_error}
    return CheckOutcome(value, _within(result.relative_error, tol))


# green


def dirac_property_check(n: int, k: int, tol: float) -> CheckOutcome:
    dim = Dimension(n, k)
    x1 = HomPoly.coordinate(n, 0)
    phi = _gaussian_field(n) + PolyRadialField(n, ((ClosedFormRadial.gaussian(1), x1 * x1),))
    result = dirac_check(phi, dim)
    relative = result.defect / abs(result.expected)
    return CheckOutcome({"integral": result.integral, "phi_0": result.expected, "defect": relative}, _within(relative, tol))


def green_bound_check(n: int, k: int) -> CheckOutcome:
    constant = green_bound_constant(GreenModel(Dimension(n, k), mass=1), r0=1.0)
    return CheckOutcome(constant, math.isfinite(constant) and constant >= 1)


def mass_constant_check(n: int, k: int, tol: float) -> CheckOutcome:
    dim = Dimension(n, k)
    model = GreenModel(dim, mass=1, remainder=_gaussian_field(n))
    result = mass_limit(model)
    value = {
        "limit": result.limit,
        "expected": result.expected,
        "c_nk": float(mass_constant(dim)),
        "relative_error": result.relative_error,
    }
    return CheckOutcome(value, _within(result.relative_error, tol))


def correction_polynomials(dim: Dimension, seed: int) -> Tuple[HomPoly, HomPoly]:
    """ψ₄, ψ₅ from the correction pipeline when n ∈ {2k+4, 2k+5}, harmonic examples otherwise"""
    n, k = dim.n, dim.k
    if n in (2 * k + 4, 2 * k + 5):
        rng = random.Random(seed)
        r5 = _without_kernel(_random_poly(n, 5, rng, terms=4), 2 * k - n, dim)
        return green_correction_pipeline(_random_trace_free(n, rng), _random_trace_free(n, rng), r5, dim)
    # real parts of (x1 + i x2)^4 and (x1 + i x2)^5: harmonic, zero sphere average
    e1, e2 = (1,) + (0,) * (n - 1), (0, 1) + (0,) * (n - 2)

    def monomial(a: int, b: int) -> Tuple[int, ...]:
        return tuple(a * u + b * v for u, v in zip(e1, e2))

    psi4 = HomPoly.from_dict(n, {monomial(4, 0): 1, monomial(2, 2): -6, monomial(0, 4): 1}, 4)
    psi5 = HomPoly.from_dict(n, {monomial(5, 0): 1, monomial(3, 2): -10, monomial(1, 4): 5}, 5)
    return psi4, psi5


def mass_correction_check(n: int, k: int, tol: float, seed: int) -> CheckOutcome:
    dim = Dimension(n, k)
    psi4, psi5 = correction_polynomials(dim, seed)
    corrected = mass_limit(GreenModel(dim, mass=1, psi4=psi4, psi5=psi5))
    plain = mass_limit(GreenModel(dim, mass=1))
    difference = _relative(corrected.limit, plain.limit)
    value = {
        "corrected": corrected.limit,
        "uncorrected": plain.limit,
        "relative_difference": difference,
        "correction_contribution": corrected.correction_contribution,
    }
    return CheckOutcome(value, _within(difference, tol))


# polynomial identities


def weighted_laplacian_check(n: int, k: int, ell: int, seed: int) -> CheckOutcome:
    rng = random.Random(f"{seed}-{n}-{k}-{ell}")
    psi = _random_poly(n, ell, rng)
    q = 2 * k - n
    fast = weighted_power_laplacian(q, psi, k).poly.as_expr()
    brute = brute_force_weighted_laplacian(q, psi, k)
    difference = sympy.expand(fast - brute)
    return CheckOutcome(str(difference), difference == 0)


def decomposition_check(n: int, ell: int, seed: int) -> CheckOutcome:
    rng = random.Random(f"{seed}-{n}-{ell}")
    psi = _random_poly(n, ell, rng, terms=4)
    parts = decompose(psi)
    harmonic = all(h.laplacian().is_zero for _, h in parts.components)
    return CheckOutcome(len(parts.components), harmonic and parts.recombine() == psi)


def inversion_check(n: int, k: int, ell: int, seed: int) -> CheckOutcome:
    rng = random.Random(f"{seed}-{n}-{k}-{ell}-inv")
    dim = Dimension(n, k)
    q = 2 * k - n
    T = weighted_power_laplacian(q, _random_poly(n, ell, rng), k).poly
    psi = invert_weighted(q, T, dim)
    return CheckOutcome(ell, weighted_power_laplacian(q, psi, k).poly == T)


def pipeline_check(n: int, k: int, seed: int) -> CheckOutcome:
    dim = Dimension(n, k)
    rng = random.Random(seed)
    s_hess, ric_lap = _random_trace_free(n, rng), _random_trace_free(n, rng)
    q = 2 * k - n
    r5 = _without_kernel(_random_poly(n, 5, rng, terms=4), q, dim)
    psi4, psi5 = green_correction_pipeline(s_hess, ric_lap, r5, dim)
    form = HomPoly.quadratic_form(s_hess) + HomPoly.quadratic_form(ric_lap)
    t1 = form * HomPoly.r_squared(n)
    integrals = vanishing_sphere_integrals(psi4, dim)
    nonzero = sorted(key for key, value in integrals.items() if value != 0)
    ok = (
        weighted_power_laplacian(q, psi4, k).poly == t1
        and weighted_power_laplacian(q, psi5, k).poly == r5
        and sphere_average(psi4) == 0
        and not nonzero
    )
    return CheckOutcome({"nonzero_integrals": nonzero, "integrals_checked": len(integrals)}, ok)


# giraud


def giraud_envelope_check(n: int, p: int, q: int, rhos: Sequence[float], xis: Sequence[float]) -> CheckOutcome:
    sweep = envelope_ratio_sweep(n, p, q, rhos, xis)
    series = {
        "kind": "ratio",
        "label": f"n={n}, p={p}, q={q}",
        "x": [pt.rho for pt in sweep.points],
        "y": [pt.ratio for pt in sweep.points],
        "group": [pt.xi_norm / pt.rho for pt in sweep.points],
    }
    value = {"regime": sweep.regime.value, "min_ratio": sweep.min_ratio, "max_ratio": sweep.max_ratio}
    return CheckOutcome(value, sweep.within(1 / 50, 50), series)


def giraud_radial_check(n: int, p: int, q: int, rho: float, tol: float) -> CheckOutcome:
    params = GiraudParams(n, p, q, rho, 0.0)
    radial, _ = radial_giraud_integral(params)
    reduced, _ = axisymmetric_giraud_integral(params)
    error = _relative(reduced, radial)
    return CheckOutcome({"radial": radial, "axisymmetric": reduced, "relative_error": error}, _within(error, tol))


def giraud_monotone_check(n: int, p: int, q: int, xi_norm: float, rhos: Sequence[float]) -> CheckOutcome:
    monotone = is_monotone_in_rho(n, p, q, xi_norm, rhos)
    return CheckOutcome(monotone, monotone)


def giraud_monte_carlo_check(seed: int, samples: int = 10_000_000) -> CheckOutcome:
    params = GiraudParams(3, 2, 2, 10.0, 3.0)
    value, _ = giraud_integral(params)
    estimate = monte_carlo_giraud(params, samples=samples, seed=seed)
    gap = abs(estimate.mean - value) / estimate.standard_error
    result = {"quadrature": value, "monte_carlo": estimate.mean, "standard_error": estimate.standard_error, "gap_in_se": gap}
    return CheckOutcome(result, gap <= 3.0)


# sphere


def sphere_constants_check(n: int, k: int) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    values = {"Q": q_curvature_constant(spec)}
    values.update({f"P_{ell}": gjms_multiplier(spec, ell) for ell in range(3)})
    ok = values["Q"] == Fraction(2, n - 2 * k) * values["P_0"]
    ok = ok and values["P_0"] == Fraction(math.prod(n + 2 * j for j in range(-k, k)), 4**k)
    for key, expected in KNOWN_SPHERE_CONSTANTS.get((n, k), {}).items():
        ok = ok and values[key] == expected
    return CheckOutcome({key: str(v) for key, v in values.items()}, bool(ok))


def stereographic_residual_check(n: int, k: int, mu: float, L: int, tol: float) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    u = stereographic_bubble(spec, mu, L)
    residual = spectral_residual(spec, u)
    pole_error = _relative(u.at_pole(), mu ** (-float(spec.dim.weight)))
    return CheckOutcome({"residual": residual, "pole_error": pole_error}, _within(residual, tol) and pole_error <= 1e-12)


def constant_branch_check(n: int, k: int, p: float, L: int) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    init = constant_solution(spec, p, L)
    result = solve_subcritical(spec, p, init)
    target = float(spec.product_constant) ** (1 / (p - 2))
    deviation = float(np.max(np.abs(result.field.grid_values() - target))) / target
    value = {"iterations": result.iterations, "residual": result.residual, "deviation": deviation}
    return CheckOutcome(value, result.iterations <= 2 and result.residual <= 1e-10 and deviation <= 1e-12)


def _tilted_weight(x: np.ndarray) -> np.ndarray:
    return 1 + 0.1 * x


def newton_picard_check(n: int, k: int, p: float, L: int, tol: float) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    init = constant_solution(spec, p, L)
    newton = solve_subcritical(spec, p, init, f=_tilted_weight)
    picard = solve_picard(spec, p, init, f=_tilted_weight)
    distance = (newton.field - picard.field).norm() / newton.field.norm()
    value = {"newton_residual": newton.residual, "picard_residual": picard.residual, "relative_distance": distance}
    return CheckOutcome(value, newton.residual <= 1e-10 and _within(distance, tol))


def bubble_fixed_point_check(n: int, k: int, mu: float, L: int) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    p = float(spec.dim.crit_exp)
    result = solve_subcritical(spec, p, stereographic_bubble(spec, mu, L))
    return CheckOutcome({"iterations": result.iterations, "residual": result.residual}, result.residual <= 1e-9)


def continuation_check(n: int, k: int, p_values: Sequence[float], L: int) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    branch = continue_in_p(spec, p_values, f=_tilted_weight, L=L)
    series = {
        "kind": "branch",
        "label": f"n={n}, k={k}",
        "x": [pt.p for pt in branch],
        "y": [pt.max_u for pt in branch],
    }
    value = {"points": len(branch), "max_iterations": max(pt.iterations for pt in branch)}
    return CheckOutcome(value, all(pt.max_u > 0 for pt in branch), series)


def self_adjoint_check(n: int, k: int, L: int, seed: int) -> CheckOutcome:
    spec = GjmsSphereSpec(Dimension(n, k))
    rng = np.random.default_rng(seed)
    u = SpectralRadialField(n, rng.standard_normal(L + 1))
    v = SpectralRadialField(n, rng.standard_normal(L + 1))
    left, right = apply_gjms(spec, u).inner(v), u.inner(apply_gjms(spec, v))
    gap = abs(left - right) / max(abs(left), 1.0)
    return CheckOutcome(gap, gap <= 1e-12)


# blow-up


def blowup_check(n: int, k: int, mu: float, L: int, chart: str) -> CheckOutcome:
    dim = Dimension(n, k)
    spec = GjmsSphereSpec(dim)
    p = float(dim.crit_exp)
    diagnostics = blowup_diagnostics(stereographic_bubble(spec, mu, L), p, dim, chart=chart)
    mu_error = _relative(diagnostics.mu, mu)
    value = {
        "mu": diagnostics.mu,
        "mu_error": mu_error,
        "radius_of_influence": diagnostics.radius_of_influence,
        "profile_distance": diagnostics.profile_distance,
    }
    if chart == "round":
        return CheckOutcome(value, diagnostics.radius_of_influence <= diagnostics.domain_radius)
    return CheckOutcome(value, mu_error <= BLOWUP_MU_TOL and diagnostics.profile_distance <= 5e-2)


class SuiteBuilder:
    """Turns a RunConfig into the ordered list of checks for its command"""

    def __init__(self, config: RunConfig):
        self.config = config

    def _pairs(self, defaults: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
        return [tuple(pair) for pair in self.config.dimensions] or list(defaults)

    def _tol(self, default: float) -> float:
        return self.config.tol if self.config.tol is not None else default

    def _sweep(self, key: str, defaults: Sequence[float]) -> List[float]:
        return list(self.config.sweep.get(key, defaults))

    def build(self) -> List[Check]:
        command = self.config.command
        if command == "all":
            checks: List[Check] = []
            for name in COMMANDS[:-1]:
                checks.extend(self._build_command(name))
            return checks
        return self._build_command(command)

    def _build_command(self, command: str) -> List[Check]:
        builders = {
            "verify-bubble": self.verify_bubble,
            "verify-pohozaev": self.verify_pohozaev,
            "mass-limit": self.mass_limit,
            "green-check": self.green_check,
            "poly-identities": self.poly_identities,
            "giraud-sweep": self.giraud_sweep,
            "sphere-solve": self.sphere_solve,
            "blowup-demo": self.blowup_demo,
        }
        if command not in builders:
            raise ValueError(f"Unknown command '{command}'")
        return builders[command]()

    def verify_bubble(self) -> List[Check]:
        checks = []
        for n, k in self._pairs(BUBBLE_PAIRS):
            inputs = {"n": n, "k": k}
            checks += [
                Check(f"bubble.pde_residual[{n},{k}]", "bubble.pde", inputs, self._tol(1e-9), partial(bubble_pde_check, n, k, self._tol(1e-9))),
                Check(f"bubble.mass_identity[{n},{k}]", "bubble.mass_identity", inputs, self._tol(1e-8), partial(bubble_mass_check, n, k, self._tol(1e-8))),
                Check(f"bubble.mass_closed_form[{n},{k}]", "bubble.mass_integral", inputs, self._tol(1e-8), partial(bubble_mass_closed_form_check, n, k, self._tol(1e-8))),
                Check(f"bubble.center_defect[{n},{k}]", "bubble.pde", inputs, 0.0, partial(bubble_center_check, n, k)),
            ]
        return checks

    def verify_pohozaev(self) -> List[Check]:
        checks = []
        for n, k in self._pairs(POHOZAEV_PAIRS):
            inputs = {"n": n, "k": k}
            annulus = {**inputs, "u": "exp(-r^2)", "f": 1, "p": 2, "s": 0.5, "r": 1.5}
            checks += [
                Check(f"pohozaev.identity[{n},{k}]", "pohozaev.identity", annulus, self._tol(1e-7), partial(pohozaev_identity_check, n, k, self._tol(1e-7))),
                Check(f"pohozaev.bubble_identity[{n},{k}]", "pohozaev.identity", {**inputs, "u": "bubble", "f": 1, "p": "2*", "s": 0.5, "r": 1.5}, self._tol(1e-7), partial(pohozaev_bubble_check, n, k, self._tol(1e-7))),
                Check(f"pohozaev.fundamental_zero[{n},{k}]", "pohozaev.singular_harmonic", inputs, self._tol(1e-9), partial(fundamental_boundary_check, n, k, self._tol(1e-9))),
                Check(f"pohozaev.singular_mass_limit[{n},{k}]", "pohozaev.singular_harmonic", {**inputs, "H": "exp(-r^2) + x1"}, self._tol(1e-6), partial(singular_mass_check, n, k, self._tol(1e-6))),
            ]
        return checks

    def mass_limit(self) -> List[Check]:
        checks = []
        for n, k in self._pairs(MASS_PAIRS):
            inputs = {"n": n, "k": k, "mass": 1}
            checks += [
                Check(f"mass.corrections_vanish[{n},{k}]", "green.mass_boundary_term", {**inputs, "seed": self.config.seed}, self._tol(1e-6), partial(mass_correction_check, n, k, self._tol(1e-6), self.config.seed)),
                Check(f"mass.constant[{n},{k}]", "green.mass_constant", {**inputs, "h": "exp(-r^2)"}, self._tol(1e-6), partial(mass_constant_check, n, k, self._tol(1e-6))),
            ]
        return checks

    def green_check(self) -> List[Check]:
        checks = []
        for n, k in self._pairs(GREEN_PAIRS):
            inputs = {"n": n, "k": k}
            checks += [
                Check(f"green.dirac[{n},{k}]", "green.fundamental_solution", {**inputs, "phi": "exp(-r^2)(1 + x1^2)"}, self._tol(1e-6), partial(dirac_property_check, n, k, self._tol(1e-6))),
                Check(f"green.bound_constant[{n},{k}]", "green.bounds", {**inputs, "r0": 1.0, "mass": 1}, None, partial(green_bound_check, n, k)),
            ]
        return checks

    def poly_identities(self) -> List[Check]:
        seed = self.config.seed
        checks = []
        for n, k in POLY_PAIRS:
            for ell in range(0, 5 if n < 9 else 3):
                inputs = {"n": n, "k": k, "ell": ell, "seed": seed}
                checks.append(Check(f"poly.weighted_laplacian[{n},{k},{ell}]", "poly.weighted_laplacian", inputs, None, partial(weighted_laplacian_check, n, k, ell, seed)))
        for n in range(3, 10):
            for ell in range(0, 7):
                checks.append(Check(f"poly.decomposition[{n},{ell}]", "poly.harmonic_decomposition", {"n": n, "ell": ell, "seed": seed}, None, partial(decomposition_check, n, ell, seed)))
        for n, k in [(n, k) for n in range(3, 10) for k in range(1, 5) if 2 * k < n]:
            for ell in range(0, 7):
                checks.append(Check(f"poly.inversion[{n},{k},{ell}]", "poly.inversion", {"n": n, "k": k, "ell": ell, "seed": seed}, None, partial(inversion_check, n, k, ell, seed)))
        pipeline_pairs = [(n, k) for n, k in self._pairs(PIPELINE_PAIRS) if n in (2 * k + 4, 2 * k + 5)]
        for n, k in pipeline_pairs or PIPELINE_PAIRS:
            checks.append(Check(f"poly.correction_pipeline[{n},{k}]", "green.correction_pipeline", {"n": n, "k": k, "seed": seed}, None, partial(pipeline_check, n, k, seed)))
        return checks

    def giraud_sweep(self) -> List[Check]:
        rhos = self._sweep("rho", DEFAULT_RHOS)
        xis = self._sweep("xi", DEFAULT_XI_FRACTIONS)
        checks = []
        for n, p, q in GIRAUD_EXEMPLARS:
            inputs = {"n": n, "p": p, "q": q}
            checks += [
                Check(f"giraud.envelope[{n},{p},{q}]", "giraud.envelope", {**inputs, "rho": rhos, "xi_over_rho": xis}, 50.0, partial(giraud_envelope_check, n, p, q, rhos, xis)),
                Check(f"giraud.radial_reduction[{n},{p},{q}]", "giraud.integral", {**inputs, "rho": rhos[0]}, self._tol(1e-8), partial(giraud_radial_check, n, p, q, rhos[0], self._tol(1e-8))),
                Check(f"giraud.monotone[{n},{p},{q}]", "giraud.integral", {**inputs, "xi": 5.0, "rho": rhos}, None, partial(giraud_monotone_check, n, p, q, 5.0, [r for r in rhos if r >= 5.0])),
            ]
        checks.append(Check("giraud.monte_carlo[3,2,2]", "giraud.integral", {"rho": 10.0, "xi": 3.0, "seed": self.config.seed}, 3.0, partial(giraud_monte_carlo_check, self.config.seed)))
        return checks

    def sphere_solve(self) -> List[Check]:
        mus = self._sweep("mu", (0.5, 1.0))
        L = int(self._sweep("L", (64,))[0])
        checks = []
        for n, k in self._pairs(SPHERE_PAIRS):
            inputs = {"n": n, "k": k}
            crit = float(Dimension(n, k).crit_exp)
            checks.append(Check(f"sphere.constants[{n},{k}]", "sphere.gjms_factorization", inputs, None, partial(sphere_constants_check, n, k)))
            for mu in mus:
                checks.append(Check(f"sphere.stereographic_residual[{n},{k},mu={mu:g}]", "sphere.conformal_covariance", {**inputs, "mu": mu, "L": L}, self._tol(1e-6), partial(stereographic_residual_check, n, k, mu, L, self._tol(1e-6))))
            p_sub = 2 + (crit - 2) / 2
            checks += [
                Check(f"sphere.constant_branch[{n},{k}]", "sphere.subcritical_equation", {**inputs, "p": p_sub, "L": L}, 2.0, partial(constant_branch_check, n, k, p_sub, L)),
                Check(f"sphere.bubble_fixed_point[{n},{k}]", "sphere.subcritical_equation", {**inputs, "mu": 0.8, "L": L}, 1e-9, partial(bubble_fixed_point_check, n, k, 0.8, L)),
                Check(f"sphere.self_adjoint[{n},{k}]", "sphere.gjms_factorization", {**inputs, "L": L, "seed": self.config.seed}, 1e-12, partial(self_adjoint_check, n, k, L, self.config.seed)),
            ]
        p_values = self._sweep("p", (2.5, 3.0, 3.5, 4.0, 4.5, 5.0))
        checks += [
            Check("sphere.newton_vs_picard[3,1]", "sphere.subcritical_equation", {"n": 3, "k": 1, "p": 2.5, "L": 32, "f": "1 + 0.1 cos(theta)"}, self._tol(1e-8), partial(newton_picard_check, 3, 1, 2.5, 32, self._tol(1e-8))),
            Check("sphere.continuation[3,1]", "sphere.subcritical_equation", {"n": 3, "k": 1, "p": p_values, "L": 32, "f": "1 + 0.1 cos(theta)"}, None, partial(continuation_check, 3, 1, p_values, 32)),
        ]
        return checks

    def blowup_demo(self) -> List[Check]:
        mus = self._sweep("mu", (1.0, 0.5, 0.1))
        L = int(self._sweep("L", (128,))[0])
        checks = []
        for n, k in self._pairs(BLOWUP_PAIRS):
            for mu in mus:
                inputs = {"n": n, "k": k, "mu": mu, "L": L}
                checks.append(Check(f"blowup.conformal[{n},{k},mu={mu:g}]", "blowup.concentration_scale", {**inputs, "chart": "conformal"}, 5e-2, partial(blowup_check, n, k, mu, L, "conformal")))
                checks.append(Check(f"blowup.round[{n},{k},mu={mu:g}]", "blowup.radius_of_influence", {**inputs, "chart": "round"}, None, partial(blowup_check, n, k, mu, L, "round")))
        return checks


def execute_check(check: Check) -> CheckResult:
    """Run one check; an exception marks it failed with the message as its value"""
    start = time.perf_counter()
    try:
        outcome = check.compute()
    except Exception as e:
        logger.error(f"Check {check.name} raised {type(e).__name__}: {str(e)}")
        logger.error(traceback.format_exc())
        outcome = CheckOutcome(f"{type(e).__name__}: {e}", False)
    runtime_ms = (time.perf_counter() - start) * 1000
    status = "pass" if outcome.passed else "FAIL"
    logger.info(f"{check.name}: {status} ({runtime_ms:.0f} ms)")
    return CheckResult(
        name=check.name,
        anchor=check.anchor,
        inputs=check.inputs,
        value=outcome.value,
        tolerance=check.tolerance,
        passed=bool(outcome.passed),
        runtime_ms=runtime_ms,
        series=outcome.series,
    )


def run_checks(checks: List[Check], workers: int = 1) -> List[CheckResult]:
    """Results in the order of `checks`; workers > 1 fans out to a process pool"""
    if workers <= 1 or len(checks) <= 1:
        return [execute_check(check) for check in checks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(execute_check, checks))
