"""Dense Hermitian linear algebra: eigensolver contract, Gibbs states,
partial traces and entropies.  Entropies are in bits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lattice
from .constants import TOL, beta


def _as_matrix(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho))


def eigh(M, *, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.conj().T).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    evals, evecs = np.linalg.eigh(M)
    if check and M.size:
        recon = (evecs * evals) @ evecs.conj().T
        if np.abs(recon - M).max() > TOL.eig_residual * scale:
            raise ArithmeticError("eigendecomposition residual above tolerance")
        if np.abs(evecs.conj().T @ evecs - np.eye(len(evals))).max() > TOL.orthonormality:
            raise ArithmeticError("eigenvectors are not orthonormal")
    return evals, evecs


def _is_psd(m: np.ndarray, tol: float) -> bool:
    """Smallest eigenvalue >= -tol.  Cholesky of ``m + tol I`` settles most
    cases far faster than a full eigensolve."""
    d = np.diag(m).real
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        return bool(d.min(initial=0.0) >= -tol)
    try:
        np.linalg.cholesky(m + tol * np.eye(m.shape[0]))
        return True
    except np.linalg.LinAlgError:
        return bool(np.linalg.eigvalsh(m)[0] >= -tol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix on an ordered basis.

    ``basis`` is a tuple of 12-bit basis states, or of labels for reduced
    states (e.g. ``("00", "01", "10", "11")`` for a two-site state).  When the
    state was built spectrally, ``weights`` and ``eigvecs`` hold its exact
    eigen-populations, which stay accurate far below the float resolution of
    the matrix entries.
    """

    matrix: np.ndarray
    basis: tuple = ()
    weights: np.ndarray | None = None
    eigvecs: np.ndarray | None = None
    sites: tuple[int, int] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if self.basis and len(self.basis) != m.shape[0]:
            raise ValueError("basis length does not match the matrix")
        if abs(np.trace(m) - 1.0) > TOL.trace:
            raise ValueError(f"trace is {np.trace(m).real:.3e}, not 1")
        if np.abs(m - m.conj().T).max() > TOL.hermiticity:
            raise ValueError("density matrix is not Hermitian")
        if not _is_psd(m, TOL.psd):
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def population(self, state) -> float:
        return float(self.matrix[self.basis.index(state), self.basis.index(state)].real)


def gibbs(H, T: float) -> DensityMatrix:
    """Thermal state of a Hermitian block at temperature ``T`` (K).

    ``H`` is a :class:`~hexice.hamiltonian.SectorMatrix` (its cached
    eigendecomposition is reused) or a plain array.  At ``T = 0`` the result
    is the uniform mixture over the ground eigenspace, whose degeneracy is
    resolved with the 1e-9 meV gap tolerance.  ``T = inf`` gives ``I/d``.
    """
    if np.isnan(T):
        raise ValueError("temperature is NaN")
    if T < 0:
        raise ValueError(f"temperature must be non-negative, got {T}")
    if hasattr(H, "eigen"):
        evals, evecs = H.eigen
        basis = tuple(H.basis)
    else:
        evals, evecs = eigh(H)
        basis = ()
    if np.any(np.isnan(evals)):
        raise ValueError("spectrum contains NaN")
    shifted = evals - evals[0]
    if T == 0:
        w = (shifted <= TOL.degeneracy).astype(float)
    elif np.isinf(T):
        w = np.ones_like(shifted)
    else:
        w = np.exp(-beta(T) * shifted)
    w = w / w.sum()
    rho = (evecs * w) @ evecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return DensityMatrix(rho, basis, weights=w, eigvecs=np.asarray(evecs))


def _local_index(states: np.ndarray, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    ni = (states >> (lattice.N_SITES - i)) & 1
    nj = (states >> (lattice.N_SITES - j)) & 1
    rest = states & ~(lattice.site_mask(i) | lattice.site_mask(j))
    return 2 * ni + nj, rest


def partial_trace(rho, keep: tuple[int, int], basis: Sequence[int] | None = None) -> DensityMatrix:
    """Reduced state of sites ``keep = (i, j)``; site ``i`` is the first factor.

    The local two-site basis is ``|n_i n_j>`` ordered 00, 01, 10, 11.  The
    input may live on any list of basis states (a sector or the full
    lattice); entries between states that differ outside ``keep`` drop out.
    """
    i, j = (lattice.check_site(k) for k in keep)
    if i == j:
        raise ValueError("kept sites must be distinct")
    m = _as_matrix(rho)
    if basis is None:
        basis = getattr(rho, "basis", None) or tuple(range(m.shape[0]))
    states = np.asarray(basis, dtype=np.int64)
    if len(states) != m.shape[0]:
        raise ValueError("basis length does not match the matrix")
    loc, rest = _local_index(states, i, j)
    same = rest[:, None] == rest[None, :]
    flat = (4 * loc[:, None] + loc[None, :])[same]
    vals = m[same]
    red = (np.bincount(flat, weights=vals.real, minlength=16)
           + 1j * np.bincount(flat, weights=vals.imag, minlength=16)).reshape(4, 4)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red, ("00", "01", "10", "11"), sites=(i, j))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    n = p.size
    p = p[p > 0]
    # round-off must not push the value past the exact bound
    return float(min(-np.sum(p * np.log2(p)), np.log2(max(n, 1))))


def von_neumann_entropy(rho) -> float:
    """``-tr(rho log2 rho)``, with tiny negative eigenvalues clamped to zero."""
    w = getattr(rho, "weights", None)
    lam = np.asarray(w) if w is not None else np.linalg.eigvalsh(_as_matrix(rho))
    if lam.min(initial=0.0) < -TOL.psd_reject:
        raise ValueError(f"not positive semidefinite (eigenvalue {lam.min():.3e})")
    lam = np.clip(lam, 0.0, None)
    return shannon_entropy(lam / lam.sum())


def trace_distance(a, b) -> float:
    d = _as_matrix(a) - _as_matrix(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


def purity(rho) -> float:
    m = _as_matrix(rho)
    return float(np.real(np.vdot(m, m)))
