"""Symmetric tridiagonal eigensolvers.

All blocks handled by this package are real symmetric tridiagonal, so a
dedicated solver kit is enough:

* ``eigh_tridiagonal`` -- implicit-shift QL with optional eigenvector
  accumulation (EISPACK tql2 lineage), for the small Fock blocks.
* ``lowest_eigenvalues`` -- Sturm-sequence bisection, vectorised over the
  requested indices, for large finite-difference grids where only the
  bottom of the spectrum is wanted.
* ``inverse_iteration`` -- one eigenvector from a shift, via banded LU
  with partial pivoting.
* ``solve_dense`` -- Gaussian elimination that also works on extended
  precision dtypes numpy.linalg does not accept.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import QpclabError

_EPS = np.finfo(float).eps


def eigh_tridiagonal(diag, offdiag, want_vectors=True, max_sweeps=60):
    """Eigenvalues (ascending) and optionally eigenvectors of the real
    symmetric tridiagonal matrix with the given diagonal and offdiagonal.

    Eigenvectors are returned as columns, unit norm, with the first
    component above the noise threshold made positive.
    """
    d = np.asarray(diag, dtype=float).copy()
    n = d.size
    if n == 0:
        raise ValueError("empty matrix")
    if n == 1:
        return d, (np.ones((1, 1)) if want_vectors else None)
    e = np.zeros(n)
    e[: n - 1] = np.asarray(offdiag, dtype=float)
    z = np.eye(n) if want_vectors else None

    for low in range(n):
        sweeps = 0
        while True:
            # locate a negligible subdiagonal element
            m = low
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == low:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise QpclabError("QL iteration failed to converge")
            g = (d[low + 1] - d[low]) / (2.0 * e[low])
            r = math.hypot(g, 1.0)
            g = d[m] - d[low] + e[low] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            broke = False
            for i in range(m - 1, low - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    broke = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    col = z[:, i + 1].copy()
                    z[:, i + 1] = s * z[:, i] + c * col
                    z[:, i] = c * z[:, i] - s * col
            if broke:
                continue
            d[low] -= p
            e[low] = g
            e[m] = 0.0

    order = np.argsort(d, kind="stable")
    d = d[order]
    if z is None:
        return d, None
    z = z[:, order]
    for j in range(n):
        col = z[:, j]
        big = np.abs(col) > 1e-12 * np.max(np.abs(col))
        lead = int(np.argmax(big))
        if col[lead] < 0:
            z[:, j] = -col
    return d, z


def _sturm_counts(d, e2, shifts, pivmin):
    """Number of eigenvalues strictly below each shift (vectorised)."""
    q = d[0] - shifts
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, d.size):
        q = d[i] - shifts - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def lowest_eigenvalues(diag, offdiag, k, brackets=None, rtol=4e-15, abstol=0.0,
                       max_iter=120):
    """The ``k`` smallest eigenvalues by Sturm-sequence bisection.

    ``brackets`` may supply per-index (lo, hi) seed intervals (e.g. from a
    coarser grid); invalid seeds are detected by a Sturm count check and
    replaced by the Gershgorin interval.  ``abstol`` lets callers stop
    early when the surrounding method (e.g. a finite-difference stencil)
    has a much larger error floor of its own.
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    n = d.size
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    if n == 1:
        return d.copy()
    e2 = e * e
    rad = np.zeros(n)
    rad[:-1] += np.abs(e)
    rad[1:] += np.abs(e)
    glo = float(np.min(d - rad))
    ghi = float(np.max(d + rad))
    scale = max(abs(glo), abs(ghi), 1e-30)
    pivmin = 1e-20 * max(1.0, float(e2.max(initial=0.0)))

    lo = np.full(k, glo)
    hi = np.full(k, ghi)
    if brackets is not None:
        blo = np.maximum(np.asarray(brackets[0], dtype=float), glo)
        bhi = np.minimum(np.asarray(brackets[1], dtype=float), ghi)
        idx = np.arange(k)
        good = (_sturm_counts(d, e2, blo, pivmin) <= idx) & (
            _sturm_counts(d, e2, bhi, pivmin) > idx
        )
        lo = np.where(good, blo, lo)
        hi = np.where(good, bhi, hi)

    # multisection: one Sturm sweep prices a whole (k, S) shift block the
    # same as a single shift vector, so wide fan-out beats plain bisection
    idx = np.arange(k)
    stop = max(rtol * scale, abstol)
    fan = 64
    frac = np.arange(1, fan + 1) / (fan + 1.0)
    for _ in range(max_iter):
        if np.max(hi - lo) <= stop:
            break
        shifts = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        counts = _sturm_counts(d, e2, shifts.ravel(), pivmin).reshape(k, fan)
        above = counts > idx[:, None]          # eigenvalue_j < shift
        first = np.argmax(above, axis=1)       # 0 if none True -> fix below
        none = ~above[np.arange(k), first]
        new_lo = np.where(first > 0, shifts[np.arange(k), first - 1], lo)
        new_hi = np.where(none, hi, shifts[np.arange(k), first])
        new_lo = np.where(none, shifts[:, -1], new_lo)
        lo, hi = new_lo, new_hi
    return 0.5 * (lo + hi)


def _lu_banded(d, e, shift):
    """LU factors of (T - shift*I) with partial pivoting.

    Returns (dd, du, du2, dl, pivoted) where dd is the pivot diagonal, du
    and du2 the first and second superdiagonals after fill-in, dl the
    multipliers and pivoted the swap flags.
    """
    n = d.size
    dd = d - shift
    du = np.zeros(n)
    du[: n - 1] = e
    du2 = np.zeros(n)
    dl = np.zeros(n)
    sub = np.zeros(n)
    sub[: n - 1] = e
    pivoted = np.zeros(n, dtype=bool)
    tiny = 1e-300
    for i in range(n - 1):
        if abs(sub[i]) > abs(dd[i]):
            pivoted[i] = True
            dd[i], sub[i] = sub[i], dd[i]
            du_next = dd[i + 1]
            dd[i + 1] = du[i]
            du[i] = du_next
            if i + 1 < n - 1:
                du2[i] = du[i + 1]
                du[i + 1] = 0.0
        piv = dd[i] if dd[i] != 0.0 else tiny
        m = sub[i] / piv
        dl[i] = m
        dd[i + 1] -= m * du[i]
        if i + 1 < n - 1:
            du[i + 1] -= m * du2[i]
    if dd[n - 1] == 0.0:
        dd[n - 1] = tiny
    return dd, du, du2, dl, pivoted


def _lu_banded_solve(factors, b):
    dd, du, du2, dl, pivoted = factors
    n = dd.size
    y = b.copy()
    for i in range(n - 1):
        if pivoted[i]:
            y[i], y[i + 1] = y[i + 1], y[i]
        y[i + 1] -= dl[i] * y[i]
    x = np.zeros_like(y)
    x[n - 1] = y[n - 1] / dd[n - 1]
    if n > 1:
        x[n - 2] = (y[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (y[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
    return x


def inverse_iteration(diag, offdiag, eigval, n_iter=3, seed=0):
    """Unit-norm eigenvector for an isolated eigenvalue of the tridiagonal
    matrix, by inverse iteration from a fixed pseudo-random start."""
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    n = d.size
    if n == 1:
        return np.ones(1)
    scale = max(np.max(np.abs(d)), np.max(np.abs(e)), 1.0)
    factors = _lu_banded(d, e, eigval + 1e-14 * scale)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    for _ in range(n_iter):
        x = _lu_banded_solve(factors, x)
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise QpclabError("inverse iteration broke down")
        x /= nrm
    lead = int(np.argmax(np.abs(x) > 1e-12 * np.max(np.abs(x))))
    return x if x[lead] >= 0 else -x


def count_sign_changes(vec, tol=1e-8):
    """Sign changes of a vector, ignoring entries below tol * max|vec|."""
    v = np.asarray(vec, dtype=float)
    big = v[np.abs(v) > tol * np.max(np.abs(v))]
    return int(np.sum(np.sign(big[:-1]) != np.sign(big[1:])))


def solve_dense(a, b):
    """Solve a dense linear system by Gaussian elimination with partial
    pivoting.  Unlike numpy.linalg.solve this accepts extended-precision
    dtypes (clongdouble), which the Bethe refinement needs."""
    a = np.array(a, copy=True)
    b = np.array(b, copy=True)
    n = a.shape[0]
    for i in range(n - 1):
        p = i + int(np.argmax(np.abs(a[i:, i])))
        if p != i:
            a[[i, p]] = a[[p, i]]
            b[[i, p]] = b[[p, i]]
        if a[i, i] == 0:
            raise QpclabError("singular linear system")
        m = a[i + 1 :, i] / a[i, i]
        a[i + 1 :, i + 1 :] -= m[:, None] * a[i, i + 1 :]
        b[i + 1 :] -= m * b[i]
    if a[n - 1, n - 1] == 0:
        raise QpclabError("singular linear system")
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x
