"""Bethe ansatz equations of both models: residuals, Newton refinement,
energies, and root reconstruction from Fock eigenvectors.

AM, M roots, parity p, gamma = delta/Omega:

    (2p+1)/(2 v_j) - v_j - gamma = sum_{k != j} 2/(v_k - v_j)
    E = delta (M + p/2) + Omega sum_j v_j

BH, N roots, gamma = eps/k:

    [eps (1 - v_j^2) + k (1 - N) v_j] / (k v_j^2) = sum_{k != j} 2/(v_k - v_j)
    E = -k N^2 / 8 + (eps/2) sum_j v_j

Reconstruction maps an eigenvector onto the generating polynomial whose
zeros are the roots.  For BH the fixed-N block is intertwined with the
degree-N polynomial realisation by c_m = f_m * sqrt(binom(N, m)); the BH
block also commutes with the occupation flip m <-> N-m, so eigenvectors
are first projected onto their dominant flip parity (this is exact for
true eigenvectors and repairs the arbitrary mixing LAPACK-style solvers
produce inside numerically degenerate cat-state pairs).  For AM the
polynomial P(y) = prod_j (y - v_j) in y = x^2/4 obeys

    2 y P'' + [(2p+1) - 2 gamma y - 2 y^2] P' + (2 M y + b) P = 0,
    b = 2 gamma M + 2 sum_j v_j,

whose three-term coefficient recurrence fixes the map a_m = mu_m f_{M-m}
with mu_0 = 1 and

    mu_{m+1} = -mu_m sqrt((2m+p+1)(2m+p+2)(M-m)) / ((m+1)(2m+2p+1)).

Companion-matrix seeds are polished by damped Newton with the analytic
Jacobian; stubborn states fall back to an extended-precision polish and,
last, to continuation in gamma.  Certification is always the plain
double-precision residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NewtonError,
    PairingViolationError,
    ReconstructionError,
    SingularRootError,
)
from .hamiltonians import Model, ModelParams, build_block, eigs
from .tridiag import solve_dense

NEWTON_TOL = 1e-12        # refinement target
ACCEPT_TOL = 1e-8         # reconstruction acceptance
PAIRING_TOL = 1e-10       # |Im sum v| bound in bethe_energy
_DISTINCT_RTOL = 1e-12    # coincidence / zero-root detection


@dataclass(frozen=True)
class BetheRoots:
    """A root multiset for one eigenstate.

    ``parity`` is meaningful for AM only; for BH the particle number is
    the root count.
    """

    model: Model
    gamma: float
    roots: np.ndarray  # complex
    parity: int = 0

    @property
    def n_roots(self):
        return len(self.roots)

    @property
    def n_particles(self):
        if self.model == Model.AM:
            return 2 * self.n_roots + self.parity
        return self.n_roots


def _validate_configuration(v):
    if len(v) == 0:
        return
    scale = 1.0 + float(np.max(np.abs(v)))
    if np.min(np.abs(v)) < _DISTINCT_RTOL * scale:
        raise SingularRootError("a Bethe root is (numerically) zero")
    if len(v) > 1:
        dv = np.abs(v[None, :] - v[:, None])
        np.fill_diagonal(dv, np.inf)
        if dv.min() < _DISTINCT_RTOL * scale:
            raise SingularRootError("coincident Bethe roots")


def _residual(model, v, gamma, n_particles, parity, jacobian=False):
    """BAE residual (and optionally Jacobian) for a raw root vector.

    Works in whatever complex dtype ``v`` carries, so the same code path
    serves the double solver and the extended-precision polish.
    """
    nr = len(v)
    if nr == 0:
        r = np.zeros(0, dtype=v.dtype)
        return (r, np.zeros((0, 0), dtype=v.dtype)) if jacobian else (r, None)
    one = v.dtype.type(1.0)
    g = v.dtype.type(gamma)
    dv = v[None, :] - v[:, None]
    np.fill_diagonal(dv, one)
    inv = one / dv
    np.fill_diagonal(inv, 0.0)
    pair = 2.0 * inv.sum(axis=1)
    if model == Model.BH:
        r = g * (one / (v * v) - one) + (1 - n_particles) / v - pair
    else:
        r = (2 * parity + 1) / (2.0 * v) - v - g - pair
    if not jacobian:
        return r, None
    inv2 = inv * inv
    jac = 2.0 * inv2
    idx = np.arange(nr)
    if model == Model.BH:
        jac[idx, idx] = (
            -2.0 * g / (v * v * v)
            - (1 - n_particles) / (v * v)
            - 2.0 * inv2.sum(axis=1)
        )
    else:
        jac[idx, idx] = -(2 * parity + 1) / (2.0 * v * v) - one - 2.0 * inv2.sum(axis=1)
    return r, jac


def bae_residual(roots: BetheRoots) -> np.ndarray:
    """Residual vector of the Bethe equations; max-abs is the quality
    metric.  Raises for coincident or zero roots."""
    v = np.asarray(roots.roots, dtype=complex)
    _validate_configuration(v)
    r, _ = _residual(roots.model, v, roots.gamma, roots.n_particles, roots.parity)
    return r


def bae_jacobian(roots: BetheRoots) -> np.ndarray:
    """Analytic Jacobian d r_j / d v_k of the residual vector."""
    v = np.asarray(roots.roots, dtype=complex)
    _validate_configuration(v)
    _, jac = _residual(
        roots.model, v, roots.gamma, roots.n_particles, roots.parity, jacobian=True
    )
    return jac


def max_residual(roots: BetheRoots) -> float:
    if roots.n_roots == 0:
        return 0.0
    return float(np.max(np.abs(bae_residual(roots))))


def _newton_raw(model, v, gamma, n_particles, parity, tol, max_iter, dtype=complex):
    """Damped Newton on the residual vector.  The step is capped at half
    of each root's magnitude and the damping halves until the residual
    norm decreases.  Returns (roots, max_abs_residual)."""
    v = np.asarray(v).astype(dtype)
    r, _ = _residual(model, v, gamma, n_particles, parity)
    rmax = float(np.max(np.abs(r.astype(complex)))) if len(v) else 0.0
    rnorm = float(np.linalg.norm(r.astype(complex)))
    for _ in range(max_iter):
        if rmax < tol or len(v) == 0:
            break
        r, jac = _residual(model, v, gamma, n_particles, parity, jacobian=True)
        try:
            if dtype is complex:
                step = np.linalg.solve(jac, -r)
            else:
                step = solve_dense(jac, -r)
        except Exception:
            break
        cap = 0.5 * np.abs(v).astype(float) + 1e-3
        mag = np.maximum(np.abs(step).astype(float), 1e-300)
        step = step * dtype(min(1.0, float(np.min(cap / mag))))
        lam, accepted = 1.0, False
        while lam > 1e-12:
            trial = v + dtype(lam) * step
            rt, _ = _residual(model, trial, gamma, n_particles, parity)
            tnorm = float(np.linalg.norm(rt.astype(complex)))
            if np.isfinite(tnorm) and tnorm < rnorm * (1.0 - 1e-4 * lam):
                v, r, rnorm = trial, rt, tnorm
                rmax = float(np.max(np.abs(r.astype(complex))))
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
    return v.astype(complex), rmax


def solve_newton(params: ModelParams, initial: BetheRoots, tol=NEWTON_TOL, max_iter=100):
    """Refine a root configuration against the BAE of ``params``.

    The initial roots must be pairwise distinct and nonzero.  Raises
    NewtonError (carrying the best iterate) if the target residual is not
    reached.
    """
    if initial.model != params.model:
        raise ValueError("initial roots belong to a different model")
    v0 = np.asarray(initial.roots, dtype=complex)
    _validate_configuration(v0)
    expected = params.n_roots
    if len(v0) != expected:
        raise ValueError(f"expected {expected} roots, got {len(v0)}")
    v, rmax = _newton_raw(
        params.model, v0, params.gamma, params.n_particles, params.parity, tol, max_iter
    )
    out = BetheRoots(params.model, params.gamma, v, params.parity)
    if rmax >= tol:
        # one extended-precision polish before giving up
        v2, _ = _newton_raw(
            params.model,
            v,
            params.gamma,
            params.n_particles,
            params.parity,
            1e-16,
            12,
            dtype=np.clongdouble,
        )
        r2 = float(
            np.max(
                np.abs(
                    _residual(
                        params.model, v2, params.gamma, params.n_particles, params.parity
                    )[0]
                )
            )
        )
        if r2 < rmax:
            v, rmax = v2, r2
            out = BetheRoots(params.model, params.gamma, v, params.parity)
        if rmax >= tol:
            raise NewtonError(
                f"Newton stalled at residual {rmax:.3e} (target {tol:.1e})",
                best_roots=out,
                best_residual=rmax,
            )
    return out


def bethe_energy(params: ModelParams, roots: BetheRoots, residual_tol=ACCEPT_TOL,
                 pairing_tol=PAIRING_TOL) -> float:
    """Energy from a certified root configuration."""
    if roots.model != params.model:
        raise ValueError("roots belong to a different model")
    if len(roots.roots) != params.n_roots:
        raise ValueError(
            f"expected {params.n_roots} roots, got {len(roots.roots)}"
        )
    if roots.n_roots:
        rmax = max_residual(roots)
        if rmax > residual_tol:
            raise SingularRootError(
                f"residual {rmax:.3e} above tolerance {residual_tol:.1e}"
            )
    s = complex(np.sum(roots.roots))
    if abs(s.imag) > pairing_tol:
        raise PairingViolationError(
            f"Im(sum of roots) = {s.imag:.3e} violates conjugate pairing"
        )
    if params.model == Model.AM:
        return params.delta * (params.n_roots + params.parity / 2.0) + params.omega * s.real
    return -params.k * params.n_particles**2 / 8.0 + 0.5 * params.eps * s.real


# ---------------------------------------------------------------------------
# reconstruction from eigenvectors


def _parity_adapt(f):
    """Project a BH eigenvector onto its dominant occupation-flip parity."""
    g = f[::-1]
    plus, minus = f + g, f - g
    np_, nm = np.linalg.norm(plus), np.linalg.norm(minus)
    return plus / np_ if np_ >= nm else minus / nm


def _am_weights(parity, m_roots):
    mu = np.empty(m_roots + 1)
    mu[0] = 1.0
    for m in range(m_roots):
        mu[m + 1] = (
            -mu[m]
            * math.sqrt((2 * m + parity + 1) * (2 * m + parity + 2) * (m_roots - m))
            / ((m + 1) * (2 * m + 2 * parity + 1))
        )
    return mu


def generating_coefficients(params: ModelParams, state) -> np.ndarray:
    """Polynomial coefficients (ascending degree) whose zeros are the
    Bethe roots of the given eigenvector."""
    f = np.asarray(state, dtype=float)
    if f.shape != (params.dim,):
        raise ValueError(f"state has shape {f.shape}, expected ({params.dim},)")
    nrm = np.linalg.norm(f)
    if nrm == 0.0:
        raise ValueError("zero eigenvector")
    f = f / nrm
    if params.model == Model.BH:
        n = params.n_particles
        f = _parity_adapt(f)
        binr = np.array([math.sqrt(math.comb(n, m)) for m in range(n + 1)])
        coeffs = f * binr
    else:
        mu = _am_weights(params.parity, params.n_roots)
        coeffs = mu * f[::-1]
    return coeffs / np.max(np.abs(coeffs))


def _companion_seeds(coeffs):
    return np.roots(coeffs[::-1])


def _realify_pairs(v, frac=0.5):
    """Split spurious near-real conjugate pairs (a +- i b) into the real
    pair (a - b, a + b).  Companion matrices of close real root ladders
    produce such artefacts, and Newton preserves conjugate symmetry so it
    cannot undo them on its own."""
    v = np.asarray(v, dtype=complex)
    used = np.zeros(len(v), dtype=bool)
    out = []
    order = np.argsort(v.real, kind="stable")
    for i in order:
        if used[i]:
            continue
        if abs(v[i].imag) < 1e-14:
            out.append(complex(v[i].real))
            used[i] = True
            continue
        best, dist = -1, np.inf
        for j in order:
            if j == i or used[j]:
                continue
            d = abs(v[j] - np.conj(v[i]))
            if d < dist:
                best, dist = j, d
        if (
            best >= 0
            and dist < 1e-6 * (1.0 + abs(v[i]))
            and abs(v[i].imag) < frac * abs(v[i].real)
        ):
            a, b = v[i].real, abs(v[i].imag)
            out.extend([complex(a - b), complex(a + b)])
            used[i] = used[best] = True
        else:
            out.append(complex(v[i]))
            used[i] = True
    return np.array(out, dtype=complex)


def _conjugate_symmetrize(v, match_rtol=1e-6):
    """Snap near-conjugate pairs onto exact conjugates (real sums then
    cancel exactly).  Returns v unchanged if a clean pairing does not
    exist."""
    v = np.asarray(v, dtype=complex)
    thr = 1e-13 * (1.0 + np.abs(v))
    upper = [i for i in range(len(v)) if v[i].imag > thr[i]]
    lower = [i for i in range(len(v)) if v[i].imag < -thr[i]]
    if len(upper) != len(lower):
        return v
    out = v.copy()
    taken = set()
    for i in upper:
        best, dist = -1, np.inf
        for j in lower:
            if j in taken:
                continue
            d = abs(np.conj(v[j]) - v[i])
            if d < dist:
                best, dist = j, d
        if best < 0 or dist > match_rtol * (1.0 + abs(v[i])):
            return v
        taken.add(best)
        mean = 0.5 * (v[i] + np.conj(v[best]))
        out[i] = mean
        out[best] = np.conj(mean)
    return out


def _sorted_roots(v):
    return v[np.lexsort((v.imag, v.real))]


def _attempt(params, seeds, tol=NEWTON_TOL):
    """Newton from seeds, then the realify retry, then the
    extended-precision polish.  Returns (roots, residual)."""
    model, gamma = params.model, params.gamma
    n, p = params.n_particles, params.parity
    v, r = _newton_raw(model, seeds, gamma, n, p, tol, 100)
    if r > tol:
        v2, r2 = _newton_raw(model, _realify_pairs(seeds), gamma, n, p, tol, 100)
        if r2 < r:
            v, r = v2, r2
    if r > 1e-15:
        v2, _ = _newton_raw(model, v, gamma, n, p, 1e-16, 12, dtype=np.clongdouble)
        r2 = float(np.max(np.abs(_residual(model, v2, gamma, n, p)[0])))
        if r2 < r:
            v, r = v2, r2
    return v, r


def _state_index(params, state):
    """Index of the eigenvalue closest to the state's Rayleigh quotient."""
    block = build_block(params)
    f = np.asarray(state, dtype=float)
    f = f / np.linalg.norm(f)
    e_est = float(np.sum(block.diag * f * f) + 2.0 * np.sum(block.offdiag * f[:-1] * f[1:]))
    vals = eigs(block, want_vectors=False).eigenvalues
    return int(np.argmin(np.abs(vals - e_est)))


def roots_from_eigenvector(params: ModelParams, state, accept_tol=ACCEPT_TOL,
                           _allow_continuation=True) -> BetheRoots:
    """Bethe roots of one eigenstate: generating-polynomial coefficients,
    companion-matrix seeds, Newton refinement, certification at
    ``accept_tol``."""
    coeffs = generating_coefficients(params, state)
    if params.n_roots == 0:
        return BetheRoots(params.model, params.gamma, np.zeros(0, dtype=complex),
                          params.parity)
    seeds = _companion_seeds(coeffs)
    if len(seeds) != params.n_roots:
        # leading coefficients vanished numerically; force full degree
        raise ReconstructionError(
            f"companion step lost degree ({len(seeds)} of {params.n_roots} roots)",
            best_residual=np.inf,
        )
    v, r = _attempt(params, seeds)

    if r > accept_tol and _allow_continuation:
        v, r = _continuation_rescue(params, state, (v, r))

    v = _conjugate_symmetrize(v)
    r = float(np.max(np.abs(_residual(params.model, v, params.gamma,
                                      params.n_particles, params.parity)[0])))
    if r > accept_tol:
        raise ReconstructionError(
            f"reconstruction stalled at residual {r:.3e} (accept {accept_tol:.1e})",
            best_residual=r,
        )
    return BetheRoots(params.model, params.gamma, _sorted_roots(v), params.parity)


def _continuation_rescue(params, state, best):
    """Walk the same spectral index in from an easier coupling.

    Levels of both blocks never cross as gamma varies (the offdiagonal
    never vanishes for Omega, eps > 0), so the energy-ordered index
    identifies the state along the path.
    """
    v_best, r_best = best
    idx = _state_index(params, state)
    gamma = params.gamma
    for factor in (0.75, 0.5, 1.5, 0.25, 2.0, 3.0):
        anchor = gamma * factor
        if anchor == 0.0 or not np.isfinite(anchor):
            continue
        try:
            ap = params.with_gamma(anchor)
            spec = eigs(build_block(ap))
            seeds = _companion_seeds(generating_coefficients(ap, spec.eigenvectors[:, idx]))
            if len(seeds) != ap.n_roots:
                continue
            va, ra = _attempt(ap, seeds)
        except Exception:
            continue
        if ra > 1e-10:
            continue
        cur = va
        ok = True
        for g in np.geomspace(anchor, gamma, 12)[1:]:
            cur, rc = _attempt(params.with_gamma(g), cur)
            if not np.all(np.isfinite(cur)):
                ok = False
                break
        if ok and rc < r_best:
            v_best, r_best = cur, rc
        if r_best < ACCEPT_TOL:
            break
    return v_best, r_best


def solve_all(params: ModelParams, accept_tol=ACCEPT_TOL):
    """Roots for every eigenstate of the fixed-N block.

    Returns (spectrum, [BetheRoots]) with list order matching the
    ascending eigenvalues.
    """
    spec = eigs(build_block(params))
    out = []
    for j in range(params.dim):
        out.append(
            roots_from_eigenvector(params, spec.eigenvectors[:, j], accept_tol)
        )
    return spec, out
