"""Markovian open-system dynamics of the pseudo-spin ring.

Every site couples to its own Ohmic bath through ``sigma_z``.  The generator is
the secular (Davies) Lindbladian built from the eigenoperators of a sector
Hamiltonian.  It is the validation path.  The production path is the
closed-form sector-Gibbs steady state, :func:`steady_state_analytic` and
:func:`steady_state_ice`.

Units: energies and Bohr frequencies in meV, rates in 1/ps, time in ps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import lattice
from .constants import HBAR, K_B, TOL, beta
from .hamiltonian import ModelParams, SectorMatrix, ice_sector
from .numerics import DensityMatrix, gibbs

MAX_LIOUVILLE_DIM = 128


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath ``J(w) = eta * w * exp(-w / omega_c)`` at temperature ``T``."""

    T: float
    eta: float = 0.01
    omega_c: float = 100.0
    kind: str = "ohmic"

    def __post_init__(self):
        if self.kind != "ohmic":
            raise ValueError(f"unsupported spectral density {self.kind!r}")
        if not self.eta > 0 or not self.omega_c > 0:
            raise ValueError("eta and omega_c must be positive")
        if not self.T >= 0:
            raise ValueError(f"temperature must be non-negative, got {self.T}")


def _bose(w, T):
    """Occupation number for w > 0."""
    if T == 0:
        return np.zeros_like(w)
    x = beta(T) * w
    return np.exp(-x) / -np.expm1(-x)


def rate(omega, bath: BathSpec):
    """Dissipation rate ``gamma(omega)`` in 1/ps (scalar or array input)."""
    w = np.asarray(omega, dtype=float)
    a = np.abs(w)
    safe = np.where(a > 0, a, 1.0)
    spectral = 2 * np.pi * bath.eta * safe * np.exp(-safe / bath.omega_c)
    n = _bose(safe, bath.T)
    g = np.where(w > 0, spectral * (1 + n), spectral * n)
    g = np.where(w == 0, 2 * np.pi * bath.eta * K_B * bath.T, g)
    g = g / HBAR
    return float(g) if g.ndim == 0 else g


def lamb_shift_coefficient(omega: float, bath: BathSpec) -> float:
    """``S(omega) = -(1/2pi) P-int gamma(x) / (x - omega) dx`` in 1/ps."""
    return float(lamb_shift_coefficients([omega], bath)[0])


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def lamb_shift_coefficients(omegas, bath: BathSpec) -> np.ndarray:
    """Vectorised :func:`lamb_shift_coefficient`.

    Folds the principal value onto ``int_0^U [gamma(w + u) - gamma(w - u)] / u du``,
    whose integrand is bounded.  The only non-smooth point, ``u = |w|``, gets
    Gauss-Legendre panels graded geometrically away from it.
    """
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    U = 60.0 * bath.omega_c + np.abs(w).max(initial=0.0)
    d_min = 1e-4 * min(bath.omega_c, K_B * bath.T if bath.T > 0 else bath.omega_c)
    dist = np.concatenate(([0.0], d_min * 2.0 ** np.arange(0, int(np.ceil(np.log2(2 * U / d_min))) + 1)))
    kink = np.abs(w)[:, None]
    edges = np.concatenate([kink - dist[::-1], kink + dist[1:]], axis=1)
    edges = np.clip(edges, 0.0, U)
    a, b = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (b - a)
    u = (0.5 * (a + b))[..., None] + half[..., None] * _GL_X  # (n_w, panels, nodes)
    u = np.where(u > 0, u, 1e-300)
    f = (rate(w[:, None, None] + u, bath) - rate(w[:, None, None] - u, bath)) / u
    val = np.einsum("wpn,n,wp->w", f, _GL_W, half)
    return -val / (2 * np.pi)


def bin_frequencies(evals: np.ndarray, tol: float = TOL.freq_bin) -> tuple[np.ndarray, np.ndarray]:
    """Cluster the Bohr frequencies ``evals[m] - evals[a]``.

    Returns ``(ids, freqs)``: ``ids[m, a]`` is a signed cluster id (0 is the
    zero-frequency cluster, ``-k`` mirrors ``+k``) and ``freqs[k]`` is the
    representative positive frequency of cluster ``k`` (``freqs[0] = 0``).
    """
    diff = evals[:, None] - evals[None, :]
    mag = np.abs(diff).ravel()
    order = np.argsort(mag, kind="stable")
    sorted_mag = mag[order]
    starts = np.concatenate(([True], np.diff(sorted_mag) > tol))
    cluster_sorted = np.cumsum(starts) - 1
    if sorted_mag[0] > tol:  # pragma: no cover - diagonal is always zero
        cluster_sorted += 1
    cluster = np.empty_like(cluster_sorted)
    cluster[order] = cluster_sorted
    n_clusters = cluster.max() + 1
    freqs = np.bincount(cluster, weights=mag, minlength=n_clusters) / np.bincount(cluster, minlength=n_clusters)
    freqs[0] = 0.0
    ids = cluster.reshape(diff.shape) * np.where(diff < 0, -1, 1)
    return ids, freqs


def _signed_freq(ids: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    return np.sign(ids) * freqs[np.abs(ids)]


def sigma_z_diagonal(basis: Sequence[int], site: int) -> np.ndarray:
    """Diagonal of ``sigma_z`` at ``site`` in a list of basis states."""
    states = np.asarray(basis, dtype=np.int64)
    n = (states >> (lattice.N_SITES - lattice.check_site(site))) & 1
    return 1.0 - 2.0 * n


@dataclass(frozen=True)
class EigenOperatorSet:
    """Frequency components ``A_j(omega)`` of ``sigma_z`` at one site.

    Operators are in the sector's computational basis, keyed by Bohr
    frequency (meV).  ``A_j(omega)`` lowers the energy by ``omega``.
    """

    site: int
    operators: dict[float, np.ndarray]

    @property
    def frequencies(self) -> list[float]:
        return sorted(self.operators)

    def total(self) -> np.ndarray:
        return sum(self.operators.values())


def eigenoperators(H: SectorMatrix, site: int, freq_tol: float = TOL.freq_bin) -> EigenOperatorSet:
    if H.dim == 0:
        raise ValueError("empty sector")
    evals, V = H.eigen
    ids, freqs = bin_frequencies(evals, freq_tol)
    X = V.T @ (sigma_z_diagonal(H.basis, site)[:, None] * V)
    out: dict[float, np.ndarray] = {}
    # element [a, m] of A(omega) in the eigenbasis needs evals[m] - evals[a] = omega
    for cid in np.unique(ids):
        mask = ids.T == cid
        block = np.where(mask, X, 0.0)
        if not np.any(np.abs(block) > 0):
            continue
        w = float(np.sign(cid) * freqs[abs(cid)])
        out[w] = V @ block @ V.T
    return EigenOperatorSet(lattice.check_site(site), out)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Sparse Lindblad generator on vectorised density matrices.

    The generator acts on ``rho`` written in the energy eigenbasis of the
    sector and flattened row-major (index ``a * dim + b`` for ``rho[a, b]``).
    ``blocks`` lists the connected components of its sparsity graph.  The
    secular structure makes them exact: a coherence only talks to coherences
    of the same Bohr frequency.
    """

    basis: tuple[int, ...]
    energies: np.ndarray
    eigvecs: np.ndarray
    generator: sp.csr_array
    blocks: tuple[np.ndarray, ...]
    bath: BathSpec

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_eigen(self, rho) -> np.ndarray:
        m = np.asarray(getattr(rho, "matrix", rho))
        return self.eigvecs.conj().T @ m @ self.eigvecs

    def from_eigen(self, r: np.ndarray) -> np.ndarray:
        return self.eigvecs @ r @ self.eigvecs.conj().T

    def apply(self, rho) -> np.ndarray:
        """``L(rho)`` in the sector's computational basis."""
        v = self.to_eigen(rho).ravel()
        return self.from_eigen((self.generator @ v).reshape(self.dim, self.dim))

    def dense(self) -> np.ndarray:
        return self.generator.toarray()

    def trace_residual(self) -> float:
        """Largest entry of ``vec(I)^T L``; zero for a trace-preserving map."""
        eye = np.eye(self.dim).ravel()
        return float(np.abs(self.generator.T @ eye).max())


def _dissipator_parts(H: SectorMatrix, bath: BathSpec, sites, ids, freqs, lamb_shift: bool):
    evals, V = H.eigen
    d = H.dim
    X = np.stack([V.T @ (sigma_z_diagonal(H.basis, s)[:, None] * V) for s in sites]) if sites else np.zeros((0, d, d))
    omega = _signed_freq(ids, freqs)  # omega[m, a] = evals[m] - evals[a]
    G = rate(omega, bath)
    # K[m, n] = sum_j sum_a X[a, m] X[a, n] G[m, a] [ids[m, a] == ids[n, a]]
    Y = np.einsum("jam,jan->amn", X, X)
    same = ids.T[:, :, None] == ids.T[:, None, :]
    K = np.einsum("amn,am->mn", Y * same, G.T)
    K = 0.5 * (K + K.T)
    HLS = np.zeros((d, d))
    if lamb_shift:
        uniq = np.unique(omega)
        S = lamb_shift_coefficients(uniq, bath)[np.searchsorted(uniq, omega)]
        HLS = np.einsum("amn,am->mn", Y * same, S.T)
        HLS = 0.5 * (HLS + HLS.T)
    return X, G, K, HLS


def build_liouvillian(H: SectorMatrix, bath: BathSpec, include_lamb_shift: bool = False,
                      sites: Sequence[int] | None = None,
                      freq_tol: float = TOL.freq_bin) -> Liouvillian:
    """Secular Lindbladian with one independent identical bath per site.

    ``sites`` selects the coupled sites (default: all twelve); an empty tuple
    leaves the unitary flow only.

    ``d rho/dt = -i/hbar [H, rho] - i [H_LS, rho]
    + sum_j sum_w gamma(w) (A_j(w) rho A_j(w)^dag - 1/2 {A_j(w)^dag A_j(w), rho})``.
    """
    d = H.dim
    if d == 0:
        raise ValueError("empty sector")
    if d > MAX_LIOUVILLE_DIM:
        raise ValueError(f"sector dimension {d} exceeds the dense Liouvillian cap {MAX_LIOUVILLE_DIM}")
    sites = tuple(range(1, lattice.N_SITES + 1)) if sites is None else tuple(sites)
    evals, V = H.eigen
    ids, freqs = bin_frequencies(evals, freq_tol)
    X, G, K, HLS = _dissipator_parts(H, bath, sites, ids, freqs, include_lamb_shift)

    eye = np.eye(d)
    rows, cols, vals = [], [], []
    idx_b, idx_m, idx_n = np.meshgrid(np.arange(d), np.arange(d), np.arange(d), indexing="ij")
    for a in range(d):
        # jump term: X[a, m] X[b, n] G[m, a] [ids[m, a] == ids[n, b]]
        Ya = np.einsum("jm,jbn->bmn", X[:, a, :], X)
        match = ids[:, a][None, :, None] == ids.T[:, None, :]
        block = (G[:, a][None, :, None] * match) * Ya
        block = block.astype(complex)
        # -1/2 (K rho + rho K) - i [H_LS, rho]
        block -= (0.5 * K[a, :] + 1j * HLS[a, :])[None, :, None] * eye[:, None, :]
        block -= (0.5 * K.T - 1j * HLS.T)[:, None, :] * eye[a][None, :, None]
        # -i/hbar [H, rho] is diagonal in the eigenbasis
        block[np.arange(d), a, np.arange(d)] += -1j * (evals[a] - evals) / HBAR
        nz = block != 0
        rows.append(a * d + idx_b[nz])
        cols.append(idx_m[nz] * d + idx_n[nz])
        vals.append(block[nz])
    gen = sp.csr_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(d * d, d * d)
    )
    pattern = sp.csr_array((np.ones(gen.nnz), gen.indices, gen.indptr), shape=gen.shape)
    _, comp = connected_components(pattern, directed=True, connection="weak")
    order = np.argsort(comp, kind="stable")
    splits = np.flatnonzero(np.diff(comp[order])) + 1
    blocks = tuple(np.split(order, splits))
    return Liouvillian(tuple(H.basis), np.asarray(evals), np.asarray(V), gen, blocks, bath)


def propagate(L: Liouvillian, rho0, t_grid: Sequence[float]) -> list[DensityMatrix]:
    """``rho(t) = exp(L t) rho0`` on each time in ``t_grid`` (ps).

    The exponential is taken exactly, block by block.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be non-negative and strictly increasing")
    m0 = np.asarray(getattr(rho0, "matrix", rho0))
    if m0.shape != (L.dim, L.dim):
        raise ValueError("initial state does not match the Liouvillian's sector")
    basis0 = getattr(rho0, "basis", ())
    if basis0 and tuple(basis0) != L.basis:
        raise ValueError("initial state is on a different basis")
    v0 = L.to_eigen(m0).ravel().astype(complex)
    gen = L.generator.tocsr()
    subs = [(idx, gen[idx][:, idx].toarray()) for idx in L.blocks]
    out = []
    for ti in t:
        v = np.empty_like(v0)
        for idx, blk in subs:
            if ti == 0.0:
                v[idx] = v0[idx]
            elif len(idx) == 1:
                v[idx] = np.exp(blk[0, 0] * ti) * v0[idx]
            else:
                v[idx] = scipy.linalg.expm(blk * ti) @ v0[idx]
        rho = L.from_eigen(v.reshape(L.dim, L.dim))
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.trace(rho) - 1.0)
        if drift > 1e-8:
            raise ArithmeticError(f"trace drift {drift:.2e} at t = {ti} ps")
        rho = rho / np.trace(rho).real  # expm round-off grows with |L| t
        out.append(DensityMatrix(m0 if ti == 0.0 else rho, L.basis))
    return out


def sector_populations(rho, H_by_sector: Mapping[tuple, SectorMatrix]) -> dict[tuple, float]:
    """``P(J) = sum_m <e_m| rho |e_m>`` over the eigenstates of each sector."""
    m = np.asarray(getattr(rho, "matrix", rho))
    basis = tuple(getattr(rho, "basis", ()))
    where = {s: k for k, s in enumerate(basis)}
    out = {}
    for label, H in H_by_sector.items():
        idx = np.array([where[s] for s in H.basis])
        V = H.eigen[1]
        blk = m[np.ix_(idx, idx)]
        out[label] = float(np.real(np.einsum("im,ij,jm->", V.conj(), blk, V)))
    return out


def steady_state_analytic(rho0: DensityMatrix, H_by_sector: Mapping[tuple, SectorMatrix],
                          T: float) -> DensityMatrix:
    """Long-time state: a Gibbs state inside every sector, weighted by the
    sector's initial population.  The result is diagonal in each sector's
    energy eigenbasis and uses ``rho0``'s basis ordering."""
    basis = tuple(rho0.basis)
    covered = [s for H in H_by_sector.values() for s in H.basis]
    if sorted(covered) != sorted(basis) or len(set(covered)) != len(covered):
        raise ValueError("rho0's basis must be exactly the union of the given sectors")
    P = sector_populations(rho0, H_by_sector)
    if all(abs(p) <= TOL.trace for p in P.values()):
        raise ValueError("rho0 has no weight in any of the given sectors")
    where = {s: k for k, s in enumerate(basis)}
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for label, H in H_by_sector.items():
        if P[label] <= 0:
            continue
        g = gibbs(H, T)
        idx = np.array([where[s] for s in H.basis])
        out[np.ix_(idx, idx)] += P[label] * g.matrix
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out / np.trace(out).real, basis)


@lru_cache(maxsize=32)
def _ice_block(params: ModelParams) -> SectorMatrix:
    return ice_sector(params)


def steady_state_ice(params: ModelParams, T: float) -> DensityMatrix:
    """Long-time state for an initial state inside the one-proton-per-edge sector."""
    if not T >= 0:
        raise ValueError(f"temperature must be non-negative, got {T}")
    return gibbs(_ice_block(params), T)


def p_bf(rho) -> float:
    """Population of the two ice-rule configurations."""
    basis = tuple(getattr(rho, "basis", ()))
    if basis != lattice.enumerate_sector(lattice.ICE_LABEL):
        raise ValueError("P_BF needs a state on the 64-state one-proton-per-edge basis")
    m = rho.matrix
    return float(sum(m[basis.index(s), basis.index(s)].real for s in lattice.ICE_RULE_STATES))
