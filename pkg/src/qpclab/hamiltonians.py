"""The two exactly solvable bosonic dimer models.

Atomic-molecular conversion (AM), atoms a and diatomic molecules b:

    H = (delta/2) n_a + (Omega/2) (a+ a+ b + b+ a a),   N = n_a + 2 n_b

Fixed-N block basis |n_a, n_b> = |N-2m, m>, m = 0..M with N = 2M + p,
p = N mod 2.  Dimensionless coupling gamma = delta / Omega, Omega > 0.

Attractive two-site Bose-Hubbard dimer (BH), modes 1 and 2:

    H = -(k/8) (n1 - n2)^2 - (eps/2) (b1+ b2 + b2+ b1),   N = n1 + n2

Fixed-N basis |n1, n2> = |m, N-m>, m = 0..N.  gamma = eps / k, k > 0,
eps >= 0.

Both blocks are real symmetric tridiagonal, so spectra come from the
dedicated solver in :mod:`qpclab.tridiag`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import tridiag


class Model(str, Enum):
    AM = "am"
    BH = "bh"


class Observable(str, Enum):
    N_ATOMS = "n_atoms"              # <n_a>, AM
    COHERENCE_AM = "coherence_am"    # -<a+ a+ b + b+ a a>/2 = -dE0/dOmega
    IMBALANCE_SQ = "imbalance_sq"    # <(n1 - n2)^2>, BH
    COHERENCE_BH = "coherence_bh"    # (k/2) <b1+ b2 + b2+ b1> = -dE0/dgamma


@dataclass(frozen=True)
class ModelParams:
    """Model identity, particle number and physical couplings.

    The dimensionless coupling is always the quotient of the stored
    couplings (gamma = delta/omega for AM, eps/k for BH), never stored
    independently.
    """

    model: Model
    n_particles: int
    delta: float | None = None
    omega: float | None = None
    k: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if not isinstance(self.n_particles, (int, np.integer)) or isinstance(
            self.n_particles, bool
        ):
            raise ValueError("n_particles must be an integer")
        if self.n_particles < 0:
            raise ValueError("n_particles must be >= 0")
        if self.model == Model.AM:
            if self.delta is None or self.omega is None:
                raise ValueError("AM params need delta and omega")
            if self.k is not None or self.eps is not None:
                raise ValueError("AM params must not carry k or eps")
            if not self.omega > 0:
                raise ValueError("omega must be > 0")
        elif self.model == Model.BH:
            if self.k is None or self.eps is None:
                raise ValueError("BH params need k and eps")
            if self.delta is not None or self.omega is not None:
                raise ValueError("BH params must not carry delta or omega")
            if not self.k > 0:
                raise ValueError("k must be > 0")
            if self.eps < 0:
                raise ValueError("eps must be >= 0")
        else:
            raise ValueError(f"unknown model {self.model!r}")

    @classmethod
    def am(cls, n_particles, delta=None, omega=1.0, gamma=None):
        if (delta is None) == (gamma is None):
            raise ValueError("give exactly one of delta or gamma")
        if delta is None:
            delta = gamma * omega
        return cls(Model.AM, int(n_particles), delta=float(delta), omega=float(omega))

    @classmethod
    def bh(cls, n_particles, eps=None, k=1.0, gamma=None):
        if (eps is None) == (gamma is None):
            raise ValueError("give exactly one of eps or gamma")
        if eps is None:
            eps = gamma * k
        return cls(Model.BH, int(n_particles), k=float(k), eps=float(eps))

    @property
    def gamma(self):
        if self.model == Model.AM:
            return self.delta / self.omega
        return self.eps / self.k

    @property
    def parity(self):
        """p = N mod 2 (meaningful for AM)."""
        return self.n_particles % 2

    @property
    def n_roots(self):
        """Number of Bethe roots: M = (N - p)/2 for AM, N for BH."""
        if self.model == Model.AM:
            return (self.n_particles - self.parity) // 2
        return self.n_particles

    @property
    def dim(self):
        """Dimension of the fixed-N block."""
        if self.model == Model.AM:
            return self.n_roots + 1
        return self.n_particles + 1

    @property
    def energy_unit(self):
        """Natural energy unit used for reporting (Omega or k)."""
        return self.omega if self.model == Model.AM else self.k

    @property
    def chi(self):
        """Scale factor of the spectral map onto the Schroedinger side."""
        return self.omega if self.model == Model.AM else self.k / 2.0

    def with_gamma(self, gamma):
        """Same model and energy unit, rescaled dimensionless coupling."""
        if self.model == Model.AM:
            return replace(self, delta=gamma * self.omega)
        return replace(self, eps=gamma * self.k)


@dataclass(frozen=True)
class FockBlock:
    """Fixed-N block of H: real symmetric tridiagonal."""

    size: int
    diag: np.ndarray
    offdiag: np.ndarray
    basis_label: str


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None  # columns, unit norm

    @property
    def gap(self):
        if self.eigenvalues.size < 2:
            return np.inf
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def build_block(params: ModelParams) -> FockBlock:
    """Tridiagonal fixed-N block for either model."""
    n = params.n_particles
    if params.model == Model.AM:
        m = np.arange(params.dim)
        diag = 0.5 * params.delta * (n - 2.0 * m)
        mm = m[:-1]
        off = 0.5 * params.omega * np.sqrt(
            (n - 2.0 * mm - 1.0) * (n - 2.0 * mm) * (mm + 1.0)
        )
        label = "m-th state is |n_a, n_b> = |N-2m, m>"
    else:
        m = np.arange(params.dim)
        diag = -(params.k / 8.0) * (2.0 * m - n) ** 2
        mm = m[:-1]
        off = -(params.eps / 2.0) * np.sqrt((mm + 1.0) * (n - mm))
        label = "m-th state is |n1, n2> = |m, N-m>"
    return FockBlock(size=params.dim, diag=diag, offdiag=off, basis_label=label)


def eigs(block: FockBlock, want_vectors=True) -> Spectrum:
    vals, vecs = tridiag.eigh_tridiagonal(block.diag, block.offdiag, want_vectors)
    return Spectrum(eigenvalues=vals, eigenvectors=vecs)


def spectrum(params: ModelParams, want_vectors=True) -> Spectrum:
    return eigs(build_block(params), want_vectors)


def ground_state(params: ModelParams):
    """(E0, ground eigenvector)."""
    spec = spectrum(params)
    return float(spec.eigenvalues[0]), spec.eigenvectors[:, 0]


def _am_pair_elements(n, dim):
    mm = np.arange(dim - 1)
    return np.sqrt((n - 2.0 * mm - 1.0) * (n - 2.0 * mm) * (mm + 1.0))


def _bh_pair_elements(n, dim):
    mm = np.arange(dim - 1)
    return np.sqrt((mm + 1.0) * (n - mm))


def expectation(params: ModelParams, state, obs: Observable) -> float:
    """Ground-state (or any-state) observables from the tridiagonal
    matrix elements.

    COHERENCE_AM is theta = -<a+ a+ b + b+ a a>/2, which equals
    -dE0/dOmega for eigenstates.  COHERENCE_BH is taken in energy units,
    theta = (k/2) <b1+ b2 + b2+ b1> = -dE0/dgamma at fixed k, so that its
    classical value approaches k*gamma_c from below the crossover.
    """
    f = np.asarray(state, dtype=float)
    if f.shape != (params.dim,):
        raise ValueError(f"state has shape {f.shape}, expected ({params.dim},)")
    n = params.n_particles
    m = np.arange(params.dim)
    if obs == Observable.N_ATOMS:
        if params.model != Model.AM:
            raise ValueError("N_ATOMS is an AM observable")
        return float(np.sum(f * f * (n - 2.0 * m)))
    if obs == Observable.COHERENCE_AM:
        if params.model != Model.AM:
            raise ValueError("COHERENCE_AM is an AM observable")
        g = _am_pair_elements(n, params.dim)
        return float(-np.sum(f[:-1] * f[1:] * g))
    if obs == Observable.IMBALANCE_SQ:
        if params.model != Model.BH:
            raise ValueError("IMBALANCE_SQ is a BH observable")
        return float(np.sum(f * f * (2.0 * m - n) ** 2))
    if obs == Observable.COHERENCE_BH:
        if params.model != Model.BH:
            raise ValueError("COHERENCE_BH is a BH observable")
        g = _bh_pair_elements(n, params.dim)
        return float(params.k * np.sum(f[:-1] * f[1:] * g))
    raise ValueError(f"unknown observable {obs!r}")
