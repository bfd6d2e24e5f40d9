"""Coherence and two-qubit correlation measures, all in bits.

Two-qubit states are 4x4 matrices on ``|n1 n2>`` (00, 01, 10, 11), subsystem 1
being the first tensor factor.  Discord-type quantities measure subsystem 2
with rank-1 projectors.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .numerics import shannon_entropy, von_neumann_entropy

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
_YY = np.kron(SIGMA[1], SIGMA[1])

GRID_THETA = 64
GRID_PHI = 128
DISCORD_TOL = 1e-6


def _mat(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho))


def _two_qubit(rho) -> np.ndarray:
    m = _mat(rho)
    if m.shape != (4, 4):
        raise ValueError(f"expected a two-qubit (4x4) state, got shape {m.shape}")
    return m


def c_l1(rho) -> float:
    """Sum of absolute off-diagonal entries in the computational basis."""
    m = _mat(rho)
    return float(np.abs(m).sum() - np.abs(np.diag(m)).sum())


def c_rel_ent(rho) -> float:
    """``S(diag rho) - S(rho)``."""
    diag = np.clip(np.real(np.diag(_mat(rho))), 0.0, None)
    return max(0.0, shannon_entropy(diag) - von_neumann_entropy(rho))


def reduced_first(rho) -> np.ndarray:
    return np.einsum("ikjk->ij", _two_qubit(rho).reshape(2, 2, 2, 2))


def reduced_second(rho) -> np.ndarray:
    return np.einsum("kikj->ij", _two_qubit(rho).reshape(2, 2, 2, 2))


def mutual_information(rho) -> float:
    return (von_neumann_entropy(reduced_first(rho)) + von_neumann_entropy(reduced_second(rho))
            - von_neumann_entropy(_two_qubit(rho)))


def concurrence(rho) -> float:
    m = _two_qubit(rho)
    R = m @ _YY @ m.conj() @ _YY
    lam = np.sort(np.clip(np.linalg.eigvals(R).real, 0.0, None))[::-1]
    s = np.sqrt(lam)
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])


def eof_from_concurrence(C: float) -> float:
    C = min(max(C, 0.0), 1.0)
    return binary_entropy((1.0 + math.sqrt(1.0 - C * C)) / 2.0)


def eof(rho) -> float:
    """Entanglement of formation through the concurrence."""
    return eof_from_concurrence(concurrence(rho))


@dataclass(frozen=True)
class BlochDecomposition:
    x: np.ndarray  # local Bloch vector of subsystem 2
    y: np.ndarray  # local Bloch vector of subsystem 1
    T: np.ndarray  # T[i, k] = tr(rho sigma_i x sigma_k)

    def matrix(self) -> np.ndarray:
        """Reassemble the 4x4 state."""
        eye = np.eye(2)
        m = np.kron(eye, eye).astype(complex)
        for i in range(3):
            m += self.x[i] * np.kron(eye, SIGMA[i]) + self.y[i] * np.kron(SIGMA[i], eye)
            for k in range(3):
                m += self.T[i, k] * np.kron(SIGMA[i], SIGMA[k])
        return m / 4.0


def bloch_decomposition(rho) -> BlochDecomposition:
    m = _two_qubit(rho)
    eye = np.eye(2)
    x = np.array([np.trace(m @ np.kron(eye, s)).real for s in SIGMA])
    y = np.array([np.trace(m @ np.kron(s, eye)).real for s in SIGMA])
    T = np.array([[np.trace(m @ np.kron(a, b)).real for b in SIGMA] for a in SIGMA])
    return BlochDecomposition(x, y, T)


def geometric_discord(rho) -> float:
    """Squared Hilbert-Schmidt distance to the closest zero-discord state
    (measurement on subsystem 2), in closed form."""
    b = bloch_decomposition(rho)
    K = np.outer(b.x, b.x) + b.T.T @ b.T
    k_max = np.linalg.eigvalsh(K)[-1]
    return max(0.0, 0.25 * (b.x @ b.x + np.sum(b.T ** 2) - k_max))


@dataclass(frozen=True)
class DiscordResult:
    discord: float
    classical: float
    mutual_information: float
    theta: float
    phi: float
    grid_discord: float


def _conditional_blocks(m: np.ndarray):
    R = m.reshape(2, 2, 2, 2)  # R[i, k, j, l] = <i k| rho |j l>
    return R[:, 0, :, 0], R[:, 1, :, 1], R[:, 0, :, 1], R[:, 1, :, 0]


def _h2(a: float, d: float, b: complex) -> float:
    """Entropy (unnormalised weight times entropy) of the 2x2 block [[a, b], [b*, d]]."""
    p = a + d
    if p <= 1e-300:
        return 0.0
    r = math.sqrt((a - d) ** 2 + 4.0 * abs(b) ** 2) / p
    lp = 0.5 * (1.0 + r)
    lm = 0.5 * (1.0 - r)
    s = -lp * math.log2(lp) if lp > 0 else 0.0
    if lm > 1e-300:
        s -= lm * math.log2(lm)
    return p * s


def _conditional_entropy_fn(m: np.ndarray):
    """``f(theta, phi) = sum_i p_i S(rho_{1|i})`` for a projective measurement on 2."""
    A00, A11, A01, A10 = _conditional_blocks(m)
    a = [complex(v) for v in (A00[0, 0], A00[1, 1], A00[0, 1])]
    d = [complex(v) for v in (A11[0, 0], A11[1, 1], A11[0, 1])]
    u = [complex(v) for v in (A01[0, 0], A01[1, 1], A01[0, 1])]
    w = [complex(v) for v in (A10[0, 0], A10[1, 1], A10[0, 1])]

    def f(theta: float, phi: float) -> float:
        c2 = math.cos(theta / 2.0) ** 2
        s2 = 1.0 - c2
        cs = 0.5 * math.sin(theta)
        e = cmath.exp(1j * phi)
        total = 0.0
        # outcome "+": |n> = (cos, e^{i phi} sin); outcome "-": the orthogonal vector
        for sign in (1.0, -1.0):
            wa, wd = (c2, s2) if sign > 0 else (s2, c2)
            k = sign * cs
            blk = [wa * a[q] + wd * d[q] + k * (e * u[q] + w[q] / e) for q in range(3)]
            total += _h2(blk[0].real, blk[1].real, blk[2])
        return total

    return f


def _entropy_weighted(p, gap):
    """``p * S`` for 2x2 blocks with trace ``p`` and eigenvalue gap ``gap`` (arrays)."""
    out = np.zeros_like(p)
    ok = p > 1e-300
    r = np.clip(gap[ok] / p[ok], 0.0, 1.0)
    for q in (0.5 * (1 + r), 0.5 * (1 - r)):
        safe = np.where(q > 1e-300, q, 1.0)
        out[ok] -= p[ok] * q * np.log2(safe)
    return out


def conditional_entropy_grid(rho, n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``sum_i p_i S(rho_{1|i})`` on a (theta, phi) grid."""
    m = _two_qubit(rho)
    A00, A11, A01, A10 = _conditional_blocks(m)
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    c2 = (np.cos(theta / 2) ** 2)[:, None]
    s2 = 1 - c2
    cs = (0.5 * np.sin(theta))[:, None]
    e = np.exp(1j * phi)[None, :]
    total = np.zeros((n_theta, n_phi))
    for sign in (1.0, -1.0):
        wa, wd = (c2, s2) if sign > 0 else (s2, c2)
        k = sign * cs
        b00, b11, b01 = (wa * A00[q] + wd * A11[q] + k * (e * A01[q] + A10[q] / e)
                         for q in ((0, 0), (1, 1), (0, 1)))
        p = (b00 + b11).real
        gap = np.sqrt((b00 - b11).real ** 2 + 4 * np.abs(b01) ** 2)
        total += _entropy_weighted(p, gap)
    return theta, phi, total


def _distinct_axes(n_theta: int, n_phi: int) -> np.ndarray:
    """Grid mask keeping one point per measurement axis.

    ``(k, l)`` and its antipode ``(n_theta-1-k, l + n_phi/2)`` give the same
    projective measurement, and each pole row is a single point.
    """
    keep = np.zeros((n_theta, n_phi), dtype=bool)
    half = n_theta // 2
    keep[:half] = True
    if n_theta % 2:
        keep[half, : (n_phi + 1) // 2] = True
    keep[0] = False
    keep[0, 0] = True
    return keep


def discord_optimization(rho, n_theta: int = GRID_THETA, n_phi: int = GRID_PHI,
                         tol: float = DISCORD_TOL) -> DiscordResult:
    """Minimise the post-measurement conditional entropy over projective
    measurements on subsystem 2.

    A (theta, phi) grid scan picks the four best distinct measurement axes,
    each refined with Nelder-Mead.
    """
    m = _two_qubit(rho)
    s1 = von_neumann_entropy(reduced_first(m))
    s2 = von_neumann_entropy(reduced_second(m))
    s12 = von_neumann_entropy(m)
    theta, phi, grid = conditional_entropy_grid(m, n_theta, n_phi)
    masked = np.where(_distinct_axes(n_theta, n_phi), grid, np.inf)
    starts = [(float(grid.flat[k]), float(theta[k // n_phi]), float(phi[k % n_phi]))
              for k in np.argsort(masked, axis=None, kind="stable")[:4]]
    f = _conditional_entropy_fn(m)
    best = starts[0]
    grid_min = best[0]
    for _, t, ph in starts:
        res = minimize(lambda v: f(v[0], v[1]), np.array([t, ph]), method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": tol * 1e-2, "maxiter": 2000})
        if res.fun < best[0]:
            best = (float(res.fun), float(res.x[0]), float(res.x[1]))
    cond, th, ph = best
    mi = s1 + s2 - s12
    discord = max(0.0, s2 + cond - s12)
    return DiscordResult(
        discord=discord,
        classical=min(max(0.0, s1 - cond), s1),
        mutual_information=mi,
        theta=th,
        phi=ph,
        grid_discord=max(0.0, s2 + grid_min - s12),
    )


def quantum_discord(rho) -> float:
    return discord_optimization(rho).discord


def classical_correlations(rho) -> float:
    return discord_optimization(rho).classical
