"""Independent finite-difference eigensolver for -psi'' + V psi = E psi.

Used to verify that QES energies embed in the Schroedinger spectrum and
that the ground states of the many-body block and the mapped operator
coincide.  Standard three-point stencil on a symmetric Dirichlet-truncated
domain: diagonal 2/h^2 + V(x_i), offdiagonal -1/h^2.  The discretisation
error is O(h^2), so grid-doubling Richardson differences provide a
per-eigenvalue error estimate and the convergence control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tridiag
from .errors import DomainError, QpclabError
from .hamiltonians import ModelParams, spectrum
from .qes import PotentialSpec, potential_value as _model_potential

BOUNDARY_MARGIN = 50.0     # V(+-x_max) must exceed top eigenvalue by this
DEFAULT_N_POINTS = 4001
RICHARDSON_TOL = 1e-5
MAX_DOUBLINGS = 5
MAX_EXPANSIONS = 3


def potential_on(spec, x):
    """V(x) for a PotentialSpec or for a bare callable (test oracles)."""
    if callable(spec):
        return spec(np.asarray(x, dtype=float))
    return _model_potential(spec, x)


@dataclass(frozen=True)
class FdGrid:
    """Uniform symmetric grid with Dirichlet ends at +-x_max."""

    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_max > 0:
            raise ValueError("x_max must be > 0")
        if self.n_points < 3:
            raise ValueError("n_points must be >= 3")

    @property
    def h(self):
        return 2.0 * self.x_max / (self.n_points - 1)

    @property
    def interior(self):
        return np.linspace(-self.x_max, self.x_max, self.n_points)[1:-1]


@dataclass(frozen=True)
class FdResult:
    eigenvalues: np.ndarray
    error_estimates: np.ndarray   # Richardson |fine - coarse| / 3
    grid: FdGrid                  # the fine grid the values belong to


def _solve_grid(spec, grid: FdGrid, k_lowest, brackets=None, abstol=0.0):
    x = grid.interior
    h2 = grid.h * grid.h
    diag = 2.0 / h2 + potential_on(spec, x)
    off = np.full(x.size - 1, -1.0 / h2)
    return tridiag.lowest_eigenvalues(
        diag, off, k_lowest, brackets=brackets, abstol=abstol
    )


def _bracket_from(values, width):
    return values - width, values + width


def fd_spectrum(spec: PotentialSpec, grid: FdGrid, k_lowest: int,
                seed_values=None, abstol=0.0) -> FdResult:
    """Lowest eigenvalues on ``grid`` with Richardson error estimates
    from one grid doubling (values belong to the doubled grid)."""
    if k_lowest > grid.n_points - 2:
        raise ValueError("k_lowest exceeds interior grid size")
    brackets = None
    if seed_values is not None:
        scale = 1.0 + float(np.max(np.abs(seed_values)))
        brackets = _bracket_from(np.asarray(seed_values, dtype=float), 0.05 * scale)
    coarse = _solve_grid(spec, grid, k_lowest, brackets, abstol)
    fine_grid = FdGrid(grid.x_max, 2 * grid.n_points - 1)
    fine = _solve_grid(
        spec,
        fine_grid,
        k_lowest,
        brackets=_bracket_from(coarse, 0.35 * np.abs(coarse) + 1.0),
        abstol=abstol,
    )
    estimates = np.abs(fine - coarse) / 3.0
    return FdResult(eigenvalues=fine, error_estimates=estimates, grid=fine_grid)


def _auto_x_max(spec, scan_max=60.0):
    """First radius where V has climbed well above its minimum."""
    xs = np.linspace(0.0, scan_max, 6001)
    v = potential_on(spec, xs)
    vmin = float(v.min())
    above = np.nonzero((xs > xs[int(np.argmin(v))]) & (v >= vmin + 100.0))[0]
    if above.size == 0:
        raise DomainError("potential does not confine inside the scan window")
    return max(2.0, 1.2 * float(xs[above[0]]))


def converged_fd_spectrum(spec: PotentialSpec, k_lowest: int, x_max=None,
                          n_points=DEFAULT_N_POINTS, rich_tol=RICHARDSON_TOL) -> FdResult:
    """Auto-sized, Richardson-converged spectrum.

    The domain grows until V(+-x_max) clears the largest requested
    eigenvalue by BOUNDARY_MARGIN (at most MAX_EXPANSIONS growths), then
    the grid doubles until the Richardson estimate of that eigenvalue
    drops below ``rich_tol``.
    """
    if x_max is None:
        x_max = _auto_x_max(spec)
    for _ in range(MAX_EXPANSIONS + 1):
        probe = _solve_grid(spec, FdGrid(x_max, 1025), k_lowest)
        if potential_on(spec, np.array([x_max]))[0] >= probe[-1] + BOUNDARY_MARGIN:
            break
        x_max *= 1.5
    else:
        raise DomainError(
            f"domain still too small after {MAX_EXPANSIONS} expansions"
        )

    # bisection only needs to resolve well below the stencil error
    abstol = min(1e-7 * (1.0 + float(np.max(np.abs(probe)))), 0.05 * rich_tol)
    grid = FdGrid(x_max, n_points)
    prev = _solve_grid(
        spec, grid, k_lowest,
        brackets=_bracket_from(probe, 0.35 * np.abs(probe) + 1.0),
        abstol=abstol,
    )
    estimates = None
    for _ in range(MAX_DOUBLINGS):
        fine_grid = FdGrid(x_max, 2 * grid.n_points - 1)
        width = (
            np.abs(prev) * 0.02 + 1e-3
            if estimates is None
            else np.maximum(8.0 * estimates, 64.0 * abstol)
        )
        vals = _solve_grid(
            spec, fine_grid, k_lowest,
            brackets=_bracket_from(prev, width), abstol=abstol,
        )
        estimates = np.abs(vals - prev) / 3.0
        if estimates[-1] < rich_tol:
            return FdResult(eigenvalues=vals, error_estimates=estimates,
                            grid=fine_grid)
        prev, grid = vals, fine_grid
    raise QpclabError(
        f"Richardson estimate did not reach {rich_tol:.1e} "
        f"within {MAX_DOUBLINGS} grid doublings"
    )


def fd_eigenvector(spec: PotentialSpec, grid: FdGrid, eigenvalue: float):
    """Interior-point eigenvector by inverse iteration."""
    x = grid.interior
    h2 = grid.h * grid.h
    diag = 2.0 / h2 + potential_on(spec, x)
    off = np.full(x.size - 1, -1.0 / h2)
    return tridiag.inverse_iteration(diag, off, eigenvalue)


def fd_node_counts(spec: PotentialSpec, result: FdResult):
    """Sign-change counts of the eigenvectors (one per eigenvalue)."""
    return [
        tridiag.count_sign_changes(fd_eigenvector(spec, result.grid, ev))
        for ev in result.eigenvalues
    ]


@dataclass(frozen=True)
class FaithfulnessReport:
    """Ground-state comparison between the fixed-N block and the mapped
    Schroedinger operator."""

    e0_many_body: float
    chi: float
    e0_fd: float
    chi_e0_fd: float
    abs_difference: float
    tolerance: float
    passed: bool
    x_max: float
    n_points: int
    richardson_estimate: float


def verify_ground_faithfulness(params: ModelParams, rich_tol=RICHARDSON_TOL
                               ) -> FaithfulnessReport:
    """Ground energies must coincide through the spectral map:
    |E0_many - chi * E0_fd| <= 1e-3 (1 + |E0_many|)."""
    e0 = float(spectrum(params, want_vectors=False).eigenvalues[0])
    pspec = PotentialSpec.from_params(params)
    fd = converged_fd_spectrum(pspec, k_lowest=2, rich_tol=rich_tol)
    e0_fd = float(fd.eigenvalues[0])
    chi = params.chi
    diff = abs(e0 - chi * e0_fd)
    tol = 1e-3 * (1.0 + abs(e0))
    return FaithfulnessReport(
        e0_many_body=e0,
        chi=chi,
        e0_fd=e0_fd,
        chi_e0_fd=chi * e0_fd,
        abs_difference=diff,
        tolerance=tol,
        passed=diff <= tol,
        x_max=fd.grid.x_max,
        n_points=fd.grid.n_points,
        richardson_estimate=float(fd.error_estimates[0]),
    )
