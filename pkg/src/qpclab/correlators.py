"""Ground-state correlators and coupling sweeps.

For a nondegenerate eigenstate the Hellmann-Feynman theorem turns
coupling derivatives of the ground energy into expectation values:

    AM:  <n_a> = 2 dE0/d(delta)        theta = -dE0/d(Omega)
    BH:  <(n1-n2)^2> = -8 dE0/dk       theta = -k dE0/d(eps) = -dE0/dgamma

Sweeps tabulate both the direct (eigenvector) and the finite-difference
route per row, the classical counterparts, and a second-difference
column of E0(gamma) whose peak serves as the quantum crossover locator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import classical
from .hamiltonians import Model, ModelParams, Observable, expectation, spectrum

HF_STEP = 1e-4
DEGENERACY_GAP = 1e-10
SCHEMA_VERSION = 1


class DegenerateGroundWarning(UserWarning):
    """Ground state too close to degenerate for a reliable derivative."""


@dataclass(frozen=True)
class HfDerivative:
    value: float
    error_estimate: float


def _ground_energy(params: ModelParams) -> float:
    return float(spectrum(params, want_vectors=False).eigenvalues[0])


def _shift(params: ModelParams, coupling: str, amount: float) -> ModelParams:
    if coupling == "delta":
        return replace(params, delta=params.delta + amount)
    if coupling == "omega":
        return replace(params, omega=params.omega + amount)
    if coupling == "k":
        return replace(params, k=params.k + amount)
    if coupling == "eps":
        return replace(params, eps=params.eps + amount)
    raise ValueError(f"unknown coupling {coupling!r}")


def hf_derivative(params: ModelParams, coupling: str, h=HF_STEP) -> HfDerivative:
    """Richardson-extrapolated central difference of E0 along a coupling.

    Steps h and h/2 combine to fourth order; the returned error estimate
    is the difference of the two central quotients over three.
    """
    spec = spectrum(params, want_vectors=False)
    if spec.gap < DEGENERACY_GAP:
        warnings.warn(
            f"ground-state gap {spec.gap:.2e} below {DEGENERACY_GAP:.0e}",
            DegenerateGroundWarning,
            stacklevel=2,
        )
    base = getattr(params, coupling)
    if base is None:
        raise ValueError(f"{coupling!r} is not a coupling of this model")
    # keep positivity constraints intact for one-signed couplings
    if coupling in ("omega", "k") and base - h <= 0:
        h = 0.5 * base
    if coupling == "eps" and base - h < 0:
        if base == 0.0:
            raise ValueError("cannot differentiate at eps = 0")
        h = 0.5 * base

    def central(step):
        up = _ground_energy(_shift(params, coupling, +step))
        dn = _ground_energy(_shift(params, coupling, -step))
        return (up - dn) / (2.0 * step)

    d_h = central(h)
    d_h2 = central(0.5 * h)
    return HfDerivative(
        value=(4.0 * d_h2 - d_h) / 3.0,
        error_estimate=abs(d_h2 - d_h) / 3.0,
    )


AM_COLUMNS = (
    "gamma", "scaled_coupling", "e0", "gap", "theta", "theta_per_n",
    "na_mean", "na_frac", "cl_e0", "cl_theta", "d2e0_dgamma2",
    "hf_theta_diff", "hf_na_diff", "status",
)
BH_COLUMNS = (
    "gamma", "scaled_coupling", "e0", "gap", "theta", "theta_per_n",
    "imbalance_sq", "imbalance_frac", "cl_e0", "cl_theta", "d2e0_dgamma2",
    "hf_theta_diff", "hf_imbalance_diff", "status",
)


@dataclass
class SweepResult:
    model: Model
    n_particles: int
    columns: tuple
    rows: list          # dicts keyed by column name, grid order
    meta: dict

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)


def compute_row(model, n_particles, gamma, omega=1.0, k=1.0, hf_step=HF_STEP,
                with_classical=True, with_hf=True):
    """One sweep row (no second-difference column; that needs the whole
    grid).  Top level so process pools can pickle it."""
    model = Model(model)
    row = {"gamma": gamma, "status": "ok"}
    try:
        if model == Model.AM:
            params = ModelParams.am(n_particles, gamma=gamma, omega=omega)
            row["scaled_coupling"] = gamma / np.sqrt(n_particles) if n_particles else gamma
        else:
            params = ModelParams.bh(n_particles, gamma=gamma, k=k)
            row["scaled_coupling"] = gamma
        spec = spectrum(params)
        e0 = float(spec.eigenvalues[0])
        ground = spec.eigenvectors[:, 0]
        row["e0"] = e0
        row["gap"] = spec.gap
        if model == Model.AM:
            theta = expectation(params, ground, Observable.COHERENCE_AM)
            na = expectation(params, ground, Observable.N_ATOMS)
            row["theta"] = theta
            row["na_mean"] = na
            row["na_frac"] = na / n_particles if n_particles else 0.0
        else:
            theta = expectation(params, ground, Observable.COHERENCE_BH)
            imb = expectation(params, ground, Observable.IMBALANCE_SQ)
            row["theta"] = theta
            row["imbalance_sq"] = imb
            row["imbalance_frac"] = imb / n_particles**2 if n_particles else 0.0
        row["theta_per_n"] = theta / n_particles if n_particles else theta

        if with_hf and spec.gap >= DEGENERACY_GAP:
            if model == Model.AM:
                th_hf = -hf_derivative(params, "omega", hf_step).value
                na_hf = 2.0 * hf_derivative(params, "delta", hf_step).value
                row["hf_theta_diff"] = abs(theta - th_hf)
                row["hf_na_diff"] = abs(na - na_hf)
            else:
                th_hf = -k * hf_derivative(params, "eps", hf_step).value
                imb_hf = -8.0 * hf_derivative(params, "k", hf_step).value
                row["hf_theta_diff"] = abs(theta - th_hf)
                row["hf_imbalance_diff"] = abs(imb - imb_hf)
        else:
            row["hf_theta_diff"] = np.nan
            row["hf_na_diff" if model == Model.AM else "hf_imbalance_diff"] = np.nan
            if with_hf:
                row["status"] = "degenerate-ground"

        if with_classical and (model == Model.AM or gamma > 0):
            unit = omega if model == Model.AM else k
            chi = omega if model == Model.AM else 0.5 * k
            row["cl_e0"] = chi * classical.e_tilde(model, n_particles, gamma)
            row["cl_theta"] = classical.classical_theta(model, n_particles, gamma, unit)
        else:
            row["cl_e0"] = np.nan
            row["cl_theta"] = np.nan
    except Exception as exc:   # propagate per-row, not abort-the-sweep
        row["status"] = f"error: {exc}"
        cols = AM_COLUMNS if model == Model.AM else BH_COLUMNS
        for name in cols:
            row.setdefault(name, np.nan)
    return row


def _second_difference(values, grid):
    """d2/dgamma2 on the sweep grid itself: central 5-point stencil with
    offset and one-sided variants near the edges; NaN for short grids."""
    n = len(values)
    out = np.full(n, np.nan)
    if n < 5:
        return out
    h = grid[1] - grid[0]
    if np.max(np.abs(np.diff(grid) - h)) > 1e-9 * abs(h):
        # non-uniform grid: fall back to two applications of np.gradient
        return np.gradient(np.gradient(values, grid), grid)
    v = np.asarray(values, dtype=float)
    h2 = 12.0 * h * h
    out[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / h2
    out[0] = (35 * v[0] - 104 * v[1] + 114 * v[2] - 56 * v[3] + 11 * v[4]) / h2
    out[1] = (11 * v[0] - 20 * v[1] + 6 * v[2] + 4 * v[3] - v[4]) / h2
    out[-2] = (-v[-5] + 4 * v[-4] + 6 * v[-3] - 20 * v[-2] + 11 * v[-1]) / h2
    out[-1] = (35 * v[-1] - 104 * v[-2] + 114 * v[-3] - 56 * v[-4] + 11 * v[-5]) / h2
    return out


def sweep(model, n_particles, gamma_grid, omega=1.0, k=1.0, hf_step=HF_STEP,
          with_classical=True, with_hf=True, map_fn=map) -> SweepResult:
    """Ground-state observables over a gamma grid.

    ``map_fn`` may be an executor map; rows are assembled in grid order
    either way, so the output is deterministic and independent of the
    parallelism.
    """
    model = Model(model)
    grid = np.asarray(gamma_grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("gamma grid must be strictly increasing")
    args = [
        (model.value, n_particles, float(g), omega, k, hf_step, with_classical, with_hf)
        for g in grid
    ]
    rows = list(map_fn(_row_star, args))
    e0 = np.array([r.get("e0", np.nan) for r in rows])
    d2 = _second_difference(e0, grid)
    for row, val in zip(rows, d2):
        row["d2e0_dgamma2"] = float(val)
    cols = AM_COLUMNS if model == Model.AM else BH_COLUMNS
    rows = [{name: row.get(name, np.nan) for name in cols} for row in rows]
    meta = {
        "model": model.value,
        "n_particles": n_particles,
        "gamma_min": float(grid.min()) if grid.size else None,
        "gamma_max": float(grid.max()) if grid.size else None,
        "grid_points": int(grid.size),
        "omega": omega if model == Model.AM else None,
        "k": k if model == Model.BH else None,
        "hf_step": hf_step,
        "degeneracy_gap": DEGENERACY_GAP,
        "crossover_locator": "argmax |d2e0_dgamma2| over the grid",
        "schema_version": SCHEMA_VERSION,
    }
    return SweepResult(model=model, n_particles=n_particles, columns=cols,
                       rows=rows, meta=meta)


def _row_star(args):
    model, n, gamma, omega, k, hf_step, with_classical, with_hf = args
    return compute_row(model, n, gamma, omega, k, hf_step, with_classical, with_hf)


def quantum_crossover_locator(result: SweepResult):
    """(gamma, scaled coupling) at the peak of |d2 E0 / dgamma2|."""
    d2 = result.column("d2e0_dgamma2")
    if np.all(np.isnan(d2)):
        raise ValueError("second-difference column is empty")
    idx = int(np.nanargmax(np.abs(d2)))
    return result.rows[idx]["gamma"], result.rows[idx]["scaled_coupling"]


@dataclass(frozen=True)
class CriticalFit:
    slope_below: float
    slope_above: float
    theta_c: float


def critical_behaviour_fit(result: SweepResult, gamma_c, window=None,
                           column="theta") -> CriticalFit:
    """Linear fits of theta(gamma) on windows on each side of gamma_c.

    Returns the two slopes and the fitted theta at gamma_c (average of
    the two one-sided intercepts).  The classical reference values are
    theta_c = 0 for AM and theta_c = k gamma_c for BH.
    """
    if window is None:
        window = 0.1 * gamma_c
    g = result.column("gamma")
    th = result.column(column)
    below = (g >= gamma_c - window) & (g < gamma_c)
    above = (g > gamma_c) & (g <= gamma_c + window)
    if np.sum(below) < 2 or np.sum(above) < 2:
        raise ValueError("fit windows leave the sweep grid")
    cb = np.polyfit(g[below] - gamma_c, th[below], 1)
    ca = np.polyfit(g[above] - gamma_c, th[above], 1)
    return CriticalFit(
        slope_below=float(cb[0]),
        slope_above=float(ca[0]),
        theta_c=float(0.5 * (cb[1] + ca[1])),
    )
