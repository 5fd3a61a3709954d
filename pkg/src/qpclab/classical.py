"""Classical (Landau-style) analysis of the mapped potentials.

The classical ground energy is E~0(gamma) = min_x V(x).  Both potentials
undergo a supercritical pitchfork of the global minimum:

AM sextic: single well at the origin for gamma > gamma_c = sqrt(2N+3),
otherwise minima at

    x0^2 = (4/3) sqrt(4 gamma^2 - 3 (gamma^2 - 3 - 2N)) - 8 gamma / 3.

BH double Morse: single well for 2 gamma > N+1, otherwise minima at
x0 = +-acosh((N+1)/(2 gamma)), gamma_c = (N+1)/2.

E~0 and dE~0/dgamma are continuous across gamma_c while d2E~0/dgamma2
jumps, so both models show a second-order crossover.  The numerical
bifurcation detector tracks the sign of V''(0): the pitchfork is exactly
where the origin destabilises.  (A detector based on well depths is
hopeless in double precision -- the depth difference grows only
quadratically in gamma_c - gamma.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, NoCrossoverError, QuarticInstabilityError
from .hamiltonians import Model
from .qes import PotentialSpec, potential_value

BISECT_TOL = 1e-8
AGREE_TOL = 1e-6
CURVATURE_H = 1e-2       # 5-point stencil step for V''(0)
JUMP_H = 1e-4            # one-sided stencil spacing for derivative jumps
JUMP_FACTOR = 10.0       # jump = limits differ by > factor * noise floor
GOLDEN_AGREE = 1e-10


def _spec(model, n_particles, gamma):
    chi = 1.0 if model == Model.AM else 0.5
    return PotentialSpec(Model(model), float(gamma), int(n_particles), chi)


def crossover_gamma_closed_form(model, n_particles):
    if Model(model) == Model.AM:
        return math.sqrt(2.0 * n_particles + 3.0)
    return (n_particles + 1.0) / 2.0


def broken_minimum_position(model, n_particles, gamma):
    """|x0| of the off-origin minima on the broken branch (0 if none)."""
    if Model(model) == Model.AM:
        s = (4.0 / 3.0) * math.sqrt(
            4.0 * gamma**2 - 3.0 * (gamma**2 - 3.0 - 2.0 * n_particles)
        ) - 8.0 * gamma / 3.0
        return math.sqrt(s) if s > 0 else 0.0
    ratio = (n_particles + 1.0) / (2.0 * gamma)
    return math.acosh(ratio) if ratio > 1.0 else 0.0


@dataclass(frozen=True)
class ClassicalMinimum:
    x0_list: tuple          # (0.0,) or (-x0, +x0)
    e_tilde0: float


def _golden_section(f, a, b, tol=1e-12, max_iter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol * (1.0 + abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _numeric_minimum(spec, x_hi):
    """Coarse scan plus golden-section refinement on x >= 0."""
    xs = np.linspace(0.0, x_hi, 2001)
    vals = potential_value(spec, xs)
    i = int(np.argmin(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, xs.size - 1)]
    f = lambda x: float(potential_value(spec, np.array([x]))[0])
    if lo == hi:
        return lo, f(lo)
    return _golden_section(f, lo, hi)


def global_minima(spec: PotentialSpec, numeric_check=True) -> ClassicalMinimum:
    """Global minima of V: closed-form branch logic, optionally
    cross-checked by scan + golden-section minimisation."""
    g, n = spec.gamma, spec.n_particles
    candidates = [0.0]
    x0 = broken_minimum_position(spec.model, n, g)
    if x0 > 0.0:
        candidates.append(x0)
    vals = [float(potential_value(spec, np.array([x]))[0]) for x in candidates]
    i = int(np.argmin(vals))
    best_x, e0 = candidates[i], vals[i]
    if numeric_check:
        x_hi = max(2.0, 2.0 * x0 + 2.0)
        _, e_num = _numeric_minimum(spec, x_hi)
        if abs(e_num - e0) > GOLDEN_AGREE * (1.0 + abs(e0)):
            raise ConsistencyError(
                f"closed-form minimum {e0!r} vs numeric {e_num!r}"
            )
    x0_list = (0.0,) if best_x == 0.0 else (-best_x, best_x)
    return ClassicalMinimum(x0_list=x0_list, e_tilde0=e0)


def e_tilde(model, n_particles, gamma, numeric_check=False):
    return global_minima(_spec(model, n_particles, gamma), numeric_check).e_tilde0


def e_tilde_derivative(model, n_particles, gamma):
    """dE~0/dgamma by the envelope theorem (dV/dgamma at the minimiser)."""
    model = Model(model)
    x0 = abs(global_minima(_spec(model, n_particles, gamma), False).x0_list[-1])
    if model == Model.AM:
        s = x0 * x0
        return -0.25 + gamma * s / 8.0 + s * s / 32.0
    return 2.0 * gamma * math.sinh(x0) ** 2 - (n_particles + 1.0) * math.cosh(x0)


def classical_theta(model, n_particles, gamma, unit=1.0):
    """Classical coherence correlator.

    AM: theta~ = gamma E~0'(gamma) - E~0(gamma), from -d(Omega E~0)/dOmega;
    dimensionless, so ``unit`` is ignored.  BH: theta~ = -(k/2) E~0'(gamma)
    with ``unit`` = k; it grows linearly below the crossover and saturates
    at k gamma_c above it.
    """
    model = Model(model)
    if model == Model.AM:
        return gamma * e_tilde_derivative(model, n_particles, gamma) - e_tilde(
            model, n_particles, gamma
        )
    return -0.5 * unit * e_tilde_derivative(model, n_particles, gamma)


def _origin_curvature(model, n_particles, gamma, h=CURVATURE_H):
    """V''(0) by the 5-point central stencil (evenness halves the work)."""
    spec = _spec(model, n_particles, gamma)
    v0, v1, v2 = potential_value(spec, np.array([0.0, h, 2.0 * h]))
    return (-2.0 * v2 + 32.0 * v1 - 30.0 * v0) / (12.0 * h * h)


@dataclass(frozen=True)
class CrossoverCoupling:
    closed_form: float
    numeric: float
    agreed: bool            # |closed - numeric| <= AGREE_TOL


def crossover_coupling(model, n_particles, scan=None,
                       bisect_tol=BISECT_TOL, agree_tol=AGREE_TOL) -> CrossoverCoupling:
    """Closed-form crossover coupling plus an independent numerical
    bifurcation point (origin-curvature sign change, bisected)."""
    model = Model(model)
    closed = crossover_gamma_closed_form(model, n_particles)
    if scan is None:
        scan = (1e-3, float(n_particles) + 3.0)
    lo, hi = scan
    grid = np.linspace(lo, hi, 256)
    curv = np.array([_origin_curvature(model, n_particles, g) for g in grid])
    sign_change = np.nonzero(np.diff(np.sign(curv)) != 0)[0]
    if sign_change.size == 0:
        raise NoCrossoverError("no bifurcation of the origin in the scanned window")
    a, b = grid[sign_change[0]], grid[sign_change[0] + 1]
    fa = _origin_curvature(model, n_particles, a)
    while b - a > bisect_tol:
        mid = 0.5 * (a + b)
        fm = _origin_curvature(model, n_particles, mid)
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    numeric = 0.5 * (a + b)
    return CrossoverCoupling(
        closed_form=closed,
        numeric=numeric,
        agreed=abs(closed - numeric) <= agree_tol,
    )


# one-sided 5-point stencil weights for f(x0 + j h), j = 0..4
_FWD = {
    1: (np.array([-25.0, 48.0, -36.0, 16.0, -3.0]), 12.0, 1),
    2: (np.array([35.0, -104.0, 114.0, -56.0, 11.0]), 12.0, 2),
    3: (np.array([-5.0, 18.0, -24.0, 14.0, -3.0]), 2.0, 3),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 1.0, 4),
}


def _one_sided_derivative(f, x0, order, h, side):
    w, denom, power = _FWD[order]
    sgn = 1.0 if side > 0 else -1.0
    xs = x0 + sgn * h * np.arange(5)
    vals = np.array([f(x) for x in xs])
    d = float(np.dot(w, vals)) / (denom * h**power)
    return d * (sgn**order)


def _jump_scan(f, x_c, h, reference_points):
    """Smallest derivative order (1..4) with a one-sided limit jump at
    x_c, judged against a noise floor calibrated at smooth points."""
    for order in (1, 2, 3, 4):
        floor = 0.0
        for x_ref in reference_points:
            left = _one_sided_derivative(f, x_ref, order, h, -1)
            right = _one_sided_derivative(f, x_ref, order, h, +1)
            floor = max(floor, abs(left - right))
        floor = max(floor, 1e-300)
        left = _one_sided_derivative(f, x_c, order, h, -1)
        right = _one_sided_derivative(f, x_c, order, h, +1)
        if abs(left - right) > JUMP_FACTOR * floor:
            return order, left, right, floor
    return None


@dataclass(frozen=True)
class CrossoverReport:
    gamma_c: float
    order: int
    beta: float
    beta_residual: float
    curve: np.ndarray = field(repr=False)   # columns gamma, E~0, dE~0, d2E~0


def _curve_table(e_fn, grid):
    grid = np.asarray(grid, dtype=float)
    vals = np.array([e_fn(g) for g in grid])
    d1 = np.gradient(vals, grid)
    d2 = np.gradient(d1, grid)
    return np.column_stack([grid, vals, d1, d2])


def classify_order(model, n_particles, gamma_grid, jump_h=JUMP_H) -> CrossoverReport:
    """Locate the crossover inside the grid window and classify its order
    by one-sided derivative limits of E~0(gamma)."""
    model = Model(model)
    grid = np.asarray(gamma_grid, dtype=float)
    cc = crossover_coupling(model, n_particles, scan=(grid.min(), grid.max()))
    gamma_c = cc.numeric
    e_fn = lambda g: e_tilde(model, n_particles, g)
    refs = [g for g in (0.5 * gamma_c, 0.75 * gamma_c, 1.25 * gamma_c, 1.5 * gamma_c)
            if grid.min() <= g <= grid.max() and abs(g - gamma_c) > 10 * jump_h]
    if len(refs) < 2:
        refs = [0.5 * gamma_c, 1.5 * gamma_c]
    hit = _jump_scan(e_fn, gamma_c, jump_h, refs)
    if hit is None:
        raise NoCrossoverError("no derivative jump up to order 4 at the bifurcation")
    order = hit[0]
    fit = exponent_fit(model, n_particles)
    return CrossoverReport(
        gamma_c=gamma_c,
        order=order,
        beta=fit.beta,
        beta_residual=fit.residual,
        curve=_curve_table(e_fn, grid),
    )


@dataclass(frozen=True)
class LandauFit:
    """Quartic expansion V ~ V0 - 2 V1 (x - x0)^2 + V2 (x - x0)^4."""

    x0: float
    v0: float
    v1: float
    v2: float


# 7-point central stencils: O(h^6) for f'' and O(h^4) for f'''' -- both
# exact for polynomials through degree 7, so exact for the AM sextic.
_C2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0])
_C4 = np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0])


def landau_fit(spec: PotentialSpec, x_ref=0.0, h=0.05) -> LandauFit:
    """V0, V1, V2 from central finite differences of V at x_ref.

    V1 = -V''(x_ref)/4 and V2 = V''''(x_ref)/24; V2 must be positive.
    """
    xs = x_ref + h * np.arange(-3, 4)
    vals = potential_value(spec, xs)
    d2 = float(np.dot(_C2, vals)) / (180.0 * h * h)
    d4 = float(np.dot(_C4, vals)) / (6.0 * h**4)
    v2 = d4 / 24.0
    if v2 <= 0:
        raise QuarticInstabilityError(f"quartic coefficient V2 = {v2!r} <= 0")
    return LandauFit(x0=x_ref, v0=float(potential_value(spec, np.array([x_ref]))[0]),
                     v1=-d2 / 4.0, v2=v2)


def fluctuation_estimate(fit: LandauFit) -> float:
    """Classical <(x - x0)^2>: 0 in the single well, V1/V2 when broken."""
    return fit.v1 / fit.v2 if fit.v1 > 0 else 0.0


def landau_energy_estimate(fit: LandauFit) -> float:
    """Leading-order E~0: V0, lowered by V1^2/V2 on the broken side."""
    return fit.v0 - fit.v1**2 / fit.v2 if fit.v1 > 0 else fit.v0


@dataclass(frozen=True)
class ExponentFit:
    beta: float
    residual: float         # rms residual of the log-log fit


def exponent_fit(model, n_particles, window=(1e-4, 1e-2), n_points=16) -> ExponentFit:
    """Log-log slope of x0 against gamma_c - gamma inside the window
    below the crossover; the pitchfork gives beta = 1/2."""
    if n_points < 5:
        raise ValueError("need at least 5 sample points")
    model = Model(model)
    gamma_c = crossover_gamma_closed_form(model, n_particles)
    offsets = np.geomspace(window[0], window[1], n_points)
    x0 = np.array(
        [broken_minimum_position(model, n_particles, gamma_c - s) for s in offsets]
    )
    if np.any(x0 <= 0):
        raise NoCrossoverError("window is not inside the broken phase")
    coeffs, res = np.polyfit(np.log(offsets), np.log(x0), 1, full=True)[:2]
    rms = math.sqrt(float(res[0]) / n_points) if res.size else 0.0
    return ExponentFit(beta=float(coeffs[0]), residual=rms)


@dataclass(frozen=True)
class ScalingReport:
    model: Model
    rows: list              # per-N dicts
    slope: float | None     # AM log-log slope of |chi E~0|/N vs N


def scaling_checks(model, n_list, gamma=None, unit=1.0) -> ScalingReport:
    """Ground-energy-per-particle growth checks.

    AM at fixed gamma: rows of |chi E~0|/N and the log-log slope against
    N.  At fixed gamma the slope only approaches the asymptotic 1/2 once
    sqrt(6N) dominates |gamma|; at desk-scale N and |gamma| of a few the
    effective slope sits well below it.

    BH (gamma ignored): evaluated at gamma_c(N), where chi E~0 equals
    -k (N+1)^2 / 4 exactly, i.e. |chi E~0|/N = k N (1 + 1/N)^2 / 4.
    """
    model = Model(model)
    n_list = list(n_list)
    if model == Model.AM:
        if gamma is None:
            raise ValueError("AM scaling needs a fixed gamma")
        if len(n_list) < 3 or max(n_list) < 4 * min(n_list):
            raise ValueError("need >= 3 particle numbers spanning a factor 4")
        rows = []
        for n in n_list:
            e0 = e_tilde(model, n, gamma) * unit
            rows.append({"n": n, "chi_e0": e0, "per_particle": abs(e0) / n})
        slope = float(
            np.polyfit(
                np.log([r["n"] for r in rows]),
                np.log([r["per_particle"] for r in rows]),
                1,
            )[0]
        )
        return ScalingReport(model=model, rows=rows, slope=slope)
    rows = []
    for n in n_list:
        gc = crossover_gamma_closed_form(model, n)
        e0 = 0.5 * e_tilde(model, n, gc) * unit     # chi = k/2
        exact = -unit * (n + 1.0) ** 2 / 4.0
        rows.append(
            {
                "n": n,
                "gamma_c": gc,
                "chi_e0": e0,
                "exact": exact,
                "per_particle": abs(e0) / n,
                "paper_magnitude": unit * n * (1.0 + 1.0 / n) ** 2 / 4.0,
                "matches": abs(e0 - exact) <= 1e-12 * abs(exact),
            }
        )
    return ScalingReport(model=model, rows=rows, slope=None)
