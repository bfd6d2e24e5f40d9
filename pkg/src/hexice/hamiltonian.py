"""Lattice-fermion and pseudo-spin Hamiltonians of the proton ring.

Two independent builders produce the same operator:

* :func:`build_fermionic` evaluates the lattice-fermion Hamiltonian directly on
  occupation states, with creation/annihilation signs taken from the fermionic
  mode ordering 1..12;
* :func:`build_spin` writes down the Pauli-string Hamiltonian obtained after the
  Jordan-Wigner substitution, which :func:`matrix_in_sector` then applies to
  basis states.

Pauli convention: ``sigma_z = |0><0| - |1><1|``, ``n = (1 - sigma_z) / 2``, so
an occupied site is the ``-1`` eigenstate of ``sigma_z``.  Energies in meV.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from . import lattice
from .constants import TOL
from .lattice import EDGES, N_SITES, VORTICES
from .numerics import eigh


@dataclass(frozen=True)
class ModelParams:
    """Lattice-fermion parameters, all in meV.

    The pseudo-spin couplings are derived properties, so the mapping
    identities hold by construction.
    """

    W: float = 0.0
    J: float = 2.0
    V_inter: float = 100.0
    V_intra: float = 40.0
    lam: float = 0.0

    def __post_init__(self):
        for name in ("W", "J", "V_inter", "V_intra", "lam"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    @classmethod
    def from_couplings(cls, J_x: float, J_z_intra: float, *, W: float = 0.0,
                       V_inter: float = 100.0, lam: float = 0.0) -> "ModelParams":
        """Parameters with the given pseudo-spin couplings ``J_x`` and ``J_z_intra``."""
        return cls(W=W, J=-2.0 * J_x, V_inter=V_inter, V_intra=4.0 * J_z_intra, lam=lam)

    @property
    def J_x(self) -> float:
        return -self.J / 2.0

    @property
    def J_z_inter(self) -> float:
        return self.V_inter / 4.0

    @property
    def J_z_intra(self) -> float:
        return self.V_intra / 4.0

    @property
    def B(self) -> float:
        return -(2.0 * self.W + self.V_inter + self.V_intra) / 4.0

    @property
    def lambda_tilde(self) -> float:
        return self.lam + 6.0 * self.W + 1.5 * (self.V_inter + self.V_intra)

    @property
    def J_vortex(self) -> float:
        return 0.0


@dataclass(frozen=True)
class PauliString:
    coefficient: float
    letters: str  # 12 characters over "IXYZ", position k = site k+1

    def __post_init__(self):
        if len(self.letters) != N_SITES or set(self.letters) - set("IXYZ"):
            raise ValueError(f"bad Pauli letters {self.letters!r}")

    @staticmethod
    def from_sites(coefficient: float, sites: dict[int, str]) -> "PauliString":
        letters = ["I"] * N_SITES
        for site, op in sites.items():
            letters[lattice.check_site(site) - 1] = op
        return PauliString(float(coefficient), "".join(letters))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k + 1 for k, c in enumerate(self.letters) if c != "I")

    @property
    def pattern(self) -> str:
        return "".join(c for c in self.letters if c != "I") or "I"

    def _masks(self) -> tuple[int, int, int]:
        flip = zphase = 0
        n_y = 0
        for k, c in enumerate(self.letters):
            bit = 1 << (N_SITES - 1 - k)
            if c in "XY":
                flip |= bit
            if c in "YZ":
                zphase |= bit
            n_y += c == "Y"
        return flip, zphase, n_y

    def act(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Image of each basis state: ``P|s> = amp * |out>``."""
        states = np.asarray(states, dtype=np.int64)
        flip, zphase, n_y = self._masks()
        parity = np.array([bin(int(s) & zphase).count("1") & 1 for s in states], dtype=np.int64)
        # Y = i (-1)^n X per site, Z = (-1)^n
        amp = self.coefficient * (1j ** n_y) * (1 - 2 * parity)
        return states ^ flip, amp.astype(complex)


@dataclass(frozen=True)
class SpinHamiltonian:
    terms: tuple[PauliString, ...]

    def __iter__(self):
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def count(self, pattern: str) -> int:
        return sum(t.pattern == pattern for t in self.terms)


def build_spin(params: ModelParams, *, yy_sign: float = 1.0) -> SpinHamiltonian:
    """Pseudo-spin Hamiltonian as 37 Pauli strings.

    ``yy_sign`` exists only for fault injection in the validation suite.
    """
    terms = []
    for i, j in EDGES:
        terms.append(PauliString.from_sites(params.J_x, {i: "X", j: "X"}))
        terms.append(PauliString.from_sites(yy_sign * params.J_x, {i: "Y", j: "Y"}))
    for i, j in EDGES:
        terms.append(PauliString.from_sites(params.J_z_inter, {i: "Z", j: "Z"}))
    for i, j in VORTICES:
        terms.append(PauliString.from_sites(params.J_z_intra, {i: "Z", j: "Z"}))
    for site in range(1, N_SITES + 1):
        terms.append(PauliString.from_sites(params.B, {site: "Z"}))
    terms.append(PauliString(params.lambda_tilde, "I" * N_SITES))
    return SpinHamiltonian(tuple(terms))


@dataclass(frozen=True, eq=False)
class SectorMatrix:
    """Dense real symmetric Hamiltonian block in a canonical sector basis.

    The eigendecomposition is computed lazily and cached; ``cached_property``
    serialises first access, so concurrent readers see one result.
    """

    basis: tuple[int, ...]
    matrix: np.ndarray
    label: tuple[int, ...] | None = None

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape != (len(self.basis), len(self.basis)):
            raise ValueError("matrix shape does not match the basis")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.T).max(initial=0.0) > TOL.hermiticity * scale:
            raise ValueError("sector matrix is not symmetric")
        m.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def eigen(self) -> tuple[np.ndarray, np.ndarray]:
        evals, evecs = eigh(self.matrix)
        evals.setflags(write=False)
        evecs.setflags(write=False)
        return evals, evecs

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigen[0]

    def index(self, state: int) -> int:
        try:
            return self.basis.index(state)
        except ValueError:
            raise ValueError(f"{lattice.ket(state)} is not in this basis") from None


def _basis_for(label) -> tuple[int, ...]:
    if label is None:
        return tuple(range(lattice.DIM))
    basis = lattice.enumerate_sector(label)
    if not basis:
        raise ValueError(f"sector {label} is empty")
    return basis


def classical_energy(params: ModelParams, state: int) -> float:
    """Diagonal element of the lattice-fermion Hamiltonian."""
    n = lattice.occupations(state)
    e = params.W * sum(n) + params.lam
    e += params.V_inter * sum(n[i - 1] * n[j - 1] for i, j in EDGES)
    e += params.V_intra * sum(n[i - 1] * n[j - 1] for i, j in VORTICES)
    return e


def _annihilate(state: int, site: int) -> tuple[int, int] | None:
    if not lattice.occupation(state, site):
        return None
    below = state >> (N_SITES - site + 1)  # sites 1..site-1
    return (-1) ** bin(below).count("1"), state ^ lattice.site_mask(site)


def _create(state: int, site: int) -> tuple[int, int] | None:
    if lattice.occupation(state, site):
        return None
    below = state >> (N_SITES - site + 1)
    return (-1) ** bin(below).count("1"), state ^ lattice.site_mask(site)


def hop(state: int, to_site: int, from_site: int) -> tuple[int, int] | None:
    """``a_to^dagger a_from |state>`` as ``(sign, new_state)``, or ``None``."""
    first = _annihilate(state, from_site)
    if first is None:
        return None
    second = _create(first[1], to_site)
    if second is None:
        return None
    return first[0] * second[0], second[1]


def build_fermionic(params: ModelParams, label=None) -> SectorMatrix:
    """Lattice-fermion Hamiltonian on one sector, or on all 4096 states.

    Hopping ``-J (a_i^dag a_j + a_j^dag a_i)`` acts only inside edges; the
    vertex tunneling amplitude is zero.  The full-basis matrix is assembled
    from its sector blocks.
    """
    if label is None:
        full = np.zeros((lattice.DIM, lattice.DIM))
        for lab in lattice.all_sector_labels():
            block = build_fermionic(params, lab)
            idx = np.asarray(block.basis)
            full[np.ix_(idx, idx)] = block.matrix
        return SectorMatrix(tuple(range(lattice.DIM)), full, None)

    basis = _basis_for(label)
    where = {s: k for k, s in enumerate(basis)}
    h = np.zeros((len(basis), len(basis)))
    for col, s in enumerate(basis):
        h[col, col] = classical_energy(params, s)
        for i, j in EDGES:
            for to, frm in ((i, j), (j, i)):
                res = hop(s, to, frm)
                if res is not None:
                    sign, t = res
                    h[where[t], col] += -params.J * sign
    return SectorMatrix(basis, h, lattice.check_label(label))


def matrix_in_sector(H: SpinHamiltonian, label, *, check: bool = True) -> SectorMatrix:
    """Restrict a Pauli-string Hamiltonian to one sector.

    With ``check`` on, any amplitude leaving the sector raises; with it off,
    such amplitudes are dropped (used by fault-injection diagnostics).
    """
    basis = _basis_for(label)
    states = np.asarray(basis, dtype=np.int64)
    outs, cols, amps = [], [], []
    for term in H:
        if term.coefficient == 0.0:
            continue
        out, amp = term.act(states)
        outs.append(out)
        cols.append(np.arange(len(states)))
        amps.append(amp)
    if not outs:
        lab = None if label is None else lattice.check_label(label)
        return SectorMatrix(basis, np.zeros((len(basis), len(basis))), lab)
    out = np.concatenate(outs)
    col = np.concatenate(cols)
    amp = np.concatenate(amps)
    pos = np.minimum(np.searchsorted(states, out), len(states) - 1)
    inside = states[pos] == out
    if check and not np.all(inside):
        # single terms such as XX leave the sector; only the summed amplitude counts
        key, inv = np.unique(np.stack([out[~inside], col[~inside]]), axis=1, return_inverse=True)
        leak = np.zeros(key.shape[1], dtype=complex)
        np.add.at(leak, inv.ravel(), amp[~inside])
        if np.any(np.abs(leak) > TOL.leakage):
            bad = int(key[0, np.argmax(np.abs(leak))])
            raise ValueError(f"Hamiltonian couples sector {label} to {lattice.sector_of(bad)}")
    h = np.zeros((len(basis), len(basis)), dtype=complex)
    np.add.at(h, (pos[inside], col[inside]), amp[inside])
    if np.abs(h.imag).max(initial=0.0) > TOL.hermiticity:
        raise ValueError("Pauli-string Hamiltonian has imaginary matrix elements")
    lab = None if label is None else lattice.check_label(label)
    return SectorMatrix(basis, np.ascontiguousarray(h.real), lab)


def full_matrix(H: SpinHamiltonian) -> sp.csr_array:
    """Pauli-string Hamiltonian on all 4096 states as a sparse matrix."""
    states = np.arange(lattice.DIM, dtype=np.int64)
    rows, cols, vals = [], [], []
    for term in H:
        if term.coefficient == 0.0:
            continue
        out, amp = term.act(states)
        rows.append(out)
        cols.append(states)
        vals.append(amp)
    m = sp.coo_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(lattice.DIM, lattice.DIM),
    ).tocsr()
    m.sum_duplicates()
    return m


def sector_blocks(H: SpinHamiltonian, labels: Iterable | None = None) -> dict[tuple[int, ...], SectorMatrix]:
    labels = lattice.all_sector_labels() if labels is None else labels
    return {tuple(lab): matrix_in_sector(H, lab) for lab in labels}


def ice_sector(params: ModelParams) -> SectorMatrix:
    """The 64-dimensional one-proton-per-edge block."""
    return matrix_in_sector(build_spin(params), lattice.ICE_LABEL)
