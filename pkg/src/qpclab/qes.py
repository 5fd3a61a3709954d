"""Quasi-exactly-solvable Schroedinger side of the two models.

Each fixed-N eigenstate with Bethe roots {v_j} maps onto a closed-form
eigenfunction of  -psi'' + V psi = E psi  with E = (many-body energy)/chi:

AM (chi = Omega, sextic potential):

    V(x) = -gamma/4 + (gamma^2 - 3 - 2N) x^2 / 16 + gamma x^4 / 32 + x^6 / 256
    psi(x) = x^p exp(-gamma x^2/8 - x^4/64) prod_j (x^2/4 - v_j)

BH (chi = k/2, double Morse potential):

    V(x) = gamma^2 sinh^2 x - (N+1) gamma cosh x
    psi(x) = exp(-gamma cosh x) prod_j (e^{x/2} - v_j e^{-x/2})

psi is never evaluated as a raw product (it overflows for large N); all
checks go through the analytic log-derivative L = psi'/psi, using
psi''/psi = L^2 + L'.  Real zeros of psi come only from roots on the
positive real axis (x = +-2 sqrt(v) for AM, x = ln v for BH) plus the
parity zero at the origin for odd AM states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bethe import BetheRoots, solve_all
from .errors import NodeProximityError
from .hamiltonians import Model, ModelParams

REALNESS_TOL = 1e-9       # |Im v| < tol * (1 + |v|) counts as real
NODE_ERROR_DIST = 1e-6    # sample closer than this to a node is an error
NODE_SAMPLE_DIST = 1e-3   # default sampler exclusion radius
RESIDUAL_CONST_TOL = 1e-7  # certified solutions: max|R| < tol*(1+|E_so|)


@dataclass(frozen=True)
class PotentialSpec:
    """Potential family member: model, coupling, size and energy scale."""

    model: Model
    gamma: float
    n_particles: int
    chi: float

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError("chi must be > 0")
        if self.model == Model.BH and not self.gamma > 0:
            raise ValueError("the double Morse potential needs gamma > 0")

    @classmethod
    def from_params(cls, params: ModelParams):
        return cls(params.model, params.gamma, params.n_particles, params.chi)


@dataclass(frozen=True)
class QesState:
    """One QES eigenstate: roots, both energies, and its node count."""

    roots: BetheRoots
    energy_im: float   # many-body energy
    energy_so: float   # Schroedinger-operator energy = energy_im / chi
    node_count: int


def potential_value(spec: PotentialSpec, x):
    """Closed-form V(x); even in x for both models."""
    x = np.asarray(x, dtype=float)
    g, n = spec.gamma, spec.n_particles
    if spec.model == Model.AM:
        x2 = x * x
        return (
            -g / 4.0
            + (g * g - 3.0 - 2.0 * n) * x2 / 16.0
            + g * x2 * x2 / 32.0
            + x2 * x2 * x2 / 256.0
        )
    return g * g * np.sinh(x) ** 2 - (n + 1.0) * g * np.cosh(x)


def map_energy(energy_im: float, chi: float) -> float:
    """Spectral map onto the Schroedinger side: E = energy_im / chi."""
    if not chi > 0:
        raise ValueError("chi must be > 0")
    return energy_im / chi


def count_nodes(roots: BetheRoots) -> int:
    """Real zeros of the QES wavefunction.

    AM: each real positive root v gives zeros at +-2 sqrt(v); odd parity
    adds the zero at the origin.  BH: each real positive root v gives one
    zero at x = ln v.  Conjugate pairs with residual imaginary parts from
    finite precision must not count, hence the relative realness
    tolerance.
    """
    v = np.asarray(roots.roots, dtype=complex)
    real_pos = np.sum(
        (np.abs(v.imag) < REALNESS_TOL * (1.0 + np.abs(v))) & (v.real > 0.0)
    )
    if roots.model == Model.AM:
        return int(2 * real_pos + roots.parity)
    return int(real_pos)


def real_node_positions(roots: BetheRoots):
    """Real-axis zeros of psi (positive half by symmetry for AM)."""
    v = np.asarray(roots.roots, dtype=complex)
    real_pos = v[(np.abs(v.imag) < REALNESS_TOL * (1.0 + np.abs(v))) & (v.real > 0.0)]
    nodes = []
    if roots.model == Model.AM:
        for w in real_pos.real:
            r = 2.0 * math.sqrt(w)
            nodes.extend([-r, r])
        if roots.parity == 1:
            nodes.append(0.0)
    else:
        nodes.extend(np.log(real_pos.real).tolist())
    return np.array(sorted(nodes))


def qes_state(params: ModelParams, energy_im: float, roots: BetheRoots) -> QesState:
    return QesState(
        roots=roots,
        energy_im=float(energy_im),
        energy_so=map_energy(float(energy_im), params.chi),
        node_count=count_nodes(roots),
    )


def qes_family(params: ModelParams, accept_tol=1e-8):
    """All QES states of the block, ordered by ascending energy."""
    spec, all_roots = solve_all(params, accept_tol)
    return [
        qes_state(params, spec.eigenvalues[j], all_roots[j])
        for j in range(params.dim)
    ]


def _log_derivative(state: QesState, spec: PotentialSpec, x):
    """L = psi'/psi and L' at real sample points (complex accumulation;
    conjugate-closed root sets make the totals real)."""
    v = np.asarray(state.roots.roots, dtype=complex)
    x = np.asarray(x, dtype=float)
    g = spec.gamma
    if spec.model == Model.AM:
        p = state.roots.parity
        y = 0.25 * x * x
        L = -g * x / 4.0 - x**3 / 16.0 + 0j
        Lp = -g / 4.0 - 3.0 * x * x / 16.0 + 0j
        if p:
            L = L + 1.0 / x
            Lp = Lp - 1.0 / (x * x)
        den = y[:, None] - v[None, :]
        L = L + np.sum((0.5 * x)[:, None] / den, axis=1)
        Lp = Lp + np.sum(0.5 / den - (y[:, None]) / (den * den), axis=1)
        return L, Lp
    # BH: factor e^{x/2} - v e^{-x/2} = e^{x/2} (1 - w), w = v e^{-x};
    # the ratio form stays finite for all x of interest.
    w = v[None, :] * np.exp(-x)[:, None]
    ratio = 0.5 * (1.0 + w) / (1.0 - w)
    L = -g * np.sinh(x) + np.sum(ratio, axis=1)
    Lp = -g * np.cosh(x) + np.sum(0.25 - ratio * ratio, axis=1)
    return L, Lp


def log_derivative_residual(state: QesState, spec: PotentialSpec, xs) -> np.ndarray:
    """R(x) = V(x) - psi''/psi - E_so, which vanishes identically when
    the roots solve the Bethe equations.

    Raises NodeProximityError for sample points within NODE_ERROR_DIST of
    a real node (psi''/psi is undefined there).
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    nodes = real_node_positions(state.roots)
    if nodes.size and np.min(np.abs(xs[:, None] - nodes[None, :])) < NODE_ERROR_DIST:
        raise NodeProximityError("sample point too close to a wavefunction node")
    if state.roots.parity == 1 and np.any(np.abs(xs) < NODE_ERROR_DIST):
        raise NodeProximityError("sample point too close to the origin node")
    L, Lp = _log_derivative(state, spec, xs)
    psi2_over_psi = L * L + Lp
    return potential_value(spec, xs) - np.real(psi2_over_psi) - state.energy_so


def log_abs_wavefunction(state: QesState, spec: PotentialSpec, x):
    """log |psi(x)| without forming the product (overflow-safe)."""
    v = np.asarray(state.roots.roots, dtype=complex)
    x = np.asarray(x, dtype=float)
    g = spec.gamma
    if spec.model == Model.AM:
        p = state.roots.parity
        out = -g * x * x / 8.0 - x**4 / 64.0
        if p:
            out = out + np.log(np.abs(x))
        den = 0.25 * (x * x)[:, None] - v[None, :]
        return out + np.sum(np.log(np.abs(den)), axis=1)
    w = v[None, :] * np.exp(-x)[:, None]
    out = -g * np.cosh(x) + 0.5 * x * len(v)
    return out + np.sum(np.log(np.abs(1.0 - w)), axis=1)


def decay_radius(states, spec: PotentialSpec, drop=12.0, x_step=0.05, x_cap=300.0):
    """Smallest |x| where log10|psi| has fallen ``drop`` decades below its
    maximum, maximised over the given states.  Used to size sampling and
    finite-difference domains."""
    if isinstance(states, QesState):
        states = [states]
    xs = np.arange(x_step, x_cap, x_step)
    radius = 0.0
    for st in states:
        lg = log_abs_wavefunction(st, spec, xs) / math.log(10.0)
        peak = np.maximum.accumulate(lg)
        below = np.nonzero(lg <= peak - drop)[0]
        if below.size == 0:
            raise ValueError("wavefunction does not decay inside the scan window")
        radius = max(radius, xs[below[0]])
    return radius


def residual_sample_points(state: QesState, spec: PotentialSpec, n_points=24,
                            x_lo=0.1, x_max=None, min_points=20):
    """Chebyshev-spaced samples in +-[x_lo, x_max], away from nodes."""
    if x_max is None:
        x_max = decay_radius(state, spec)
    nodes = real_node_positions(state.roots)
    n = n_points
    while n <= 512:
        theta = (2 * np.arange(n) + 1) * math.pi / (2 * n)
        xs = 0.5 * (x_lo + x_max) + 0.5 * (x_max - x_lo) * np.cos(theta)
        xs = np.concatenate([-xs[::-1], xs])
        if nodes.size:
            keep = np.min(np.abs(xs[:, None] - nodes[None, :]), axis=1) > NODE_SAMPLE_DIST
            xs = xs[keep]
        if xs.size >= min_points:
            return xs
        n *= 2
    raise ValueError("could not find enough sample points away from nodes")


def verify_residual_constancy(state: QesState, spec: PotentialSpec,
                               tol_scale=RESIDUAL_CONST_TOL, n_points=24):
    """(max |R|, bound); the state is certified iff max <= bound."""
    xs = residual_sample_points(state, spec, n_points)
    r = log_derivative_residual(state, spec, xs)
    bound = tol_scale * (1.0 + abs(state.energy_so))
    return float(np.max(np.abs(r))), bound


def expected_node_sequence(params: ModelParams):
    """Theorem-ordered node counts: (p, p+2, ..., 2M+p) for AM and
    (0, 1, ..., N) for BH."""
    if params.model == Model.AM:
        p = params.parity
        return [p + 2 * j for j in range(params.dim)]
    return list(range(params.dim))


def check_node_ordering(params: ModelParams, family=None):
    """True iff the energy-sorted family realises the expected node
    sequence exactly."""
    if family is None:
        family = qes_family(params)
    got = [st.node_count for st in sorted(family, key=lambda s: s.energy_im)]
    return got == expected_node_sequence(params), got
