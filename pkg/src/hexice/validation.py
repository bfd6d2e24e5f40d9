"""Self-checks run by ``hexice validate``.

Each check reports a named invariant, the measured residual and the
tolerance it is held to.  ``quick`` covers unit invariants in seconds;
``full`` adds the fermion/spin spectral comparison on every sector, the
Liouvillian-vs-closed-form steady-state comparison and a fault-injection run.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import lattice
from .constants import beta
from .hamiltonian import (ModelParams, build_fermionic, build_spin, classical_energy, full_matrix,
                          matrix_in_sector)
from .measures import concurrence, geometric_discord, quantum_discord
from .numerics import DensityMatrix, gibbs, trace_distance
from .open_system import BathSpec, build_liouvillian, propagate, rate, steady_state_analytic, _ice_block

DEPTHS = ("quick", "full")
LONG_TIME_PS = 1e5

# A spread of sectors: ice, every single-proton edge block, and some mixed occupancies.
QUICK_SECTORS = (
    lattice.ICE_LABEL,
    (0,) * 6,
    (2,) * 6,
    *(tuple(int(k == e) for k in range(6)) for e in range(6)),
    (2, 1, 0, 1, 2, 1),
    (1, 1, 2, 0, 1, 1),
    (0, 1, 1, 1, 1, 2),
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: residual {self.residual:.3e} (tol {self.tolerance:.1e}, {self.seconds:.2f} s)"


@dataclass
class ValidationReport:
    depth: str
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def text(self) -> str:
        lines = [r.line() for r in self.results]
        n_fail = len(self.failures())
        lines.append(f"{len(self.results) - n_fail}/{len(self.results)} checks passed ({self.depth})")
        return "\n".join(lines)


def _run(report: ValidationReport, name: str, tol: float, fn: Callable[[], float]) -> None:
    t0 = time.perf_counter()
    try:
        residual = float(fn())
    except Exception as exc:  # a crashing check is a failed check, not a crashed report
        report.results.append(CheckResult(f"{name} [{type(exc).__name__}: {exc}]", math.nan, tol, False,
                                          time.perf_counter() - t0))
        return
    report.results.append(CheckResult(name, residual, tol, residual <= tol, time.perf_counter() - t0))


# -- individual checks ---------------------------------------------------------

def sector_partition() -> float:
    sizes = [len(lattice.enumerate_sector(lab)) for lab in lattice.all_sector_labels()]
    return abs(sum(sizes) - lattice.DIM) + abs(len(sizes) - 729)


def classification_counts() -> float:
    counts = Counter(lattice.classify(s) for s in range(lattice.DIM))
    want = {lattice.DefectClass.ICE_RULE: 2, lattice.DefectClass.IONIC: 62, lattice.DefectClass.BJERRUM: 4032}
    return sum(abs(counts[k] - v) for k, v in want.items())


def term_count(params: ModelParams) -> float:
    return abs(len(build_spin(params)) - 37)


def diagonal_equivalence(params: ModelParams, yy_sign: float = 1.0) -> float:
    H = build_spin(params, yy_sign=yy_sign)
    worst = 0.0
    for lab in lattice.all_sector_labels():
        block = matrix_in_sector(H, lab, check=yy_sign == 1.0)
        diag = np.array([classical_energy(params, s) for s in block.basis])
        worst = max(worst, float(np.abs(np.diag(block.matrix) - diag).max()))
    return worst


def sector_closure(params: ModelParams) -> float:
    """``[H, n_{2j-1} + n_{2j}]`` for every edge, on the full lattice."""
    H = full_matrix(build_spin(params))
    occ = lattice.occupation_array(np.arange(lattice.DIM))
    worst = 0.0
    for i, j in lattice.EDGES:
        N = (occ[:, i - 1] + occ[:, j - 1]).astype(float)
        comm = H.multiply(N[:, None]) - H.multiply(N[None, :])
        worst = max(worst, float(np.abs(comm.toarray()).max(initial=0.0)) if comm.nnz else 0.0)
    return worst


def spectral_mismatch(params: ModelParams, labels: Iterable, yy_sign: float = 1.0) -> dict[tuple, float]:
    H = build_spin(params, yy_sign=yy_sign)
    out = {}
    for lab in labels:
        a = np.sort(matrix_in_sector(H, lab, check=yy_sign == 1.0).eigenvalues)
        b = np.sort(build_fermionic(params, lab).eigenvalues)
        out[tuple(lab)] = float(np.abs(a - b).max())
    return out


def fault_detection(params: ModelParams, labels: Iterable) -> float:
    """Number of sectors the spectral check misjudges under a YY sign fault.

    The fault removes hopping wherever an edge holds exactly one proton; all
    other sectors must still agree.
    """
    mismatch = spectral_mismatch(params, labels, yy_sign=-1.0)
    wrong = 0
    for lab, err in mismatch.items():
        should_flag = 1 in lab and params.J != 0
        wrong += (err > 1e-10) != should_flag
    return wrong


def gibbs_stationarity(params: ModelParams, T: float) -> float:
    H = _ice_block(params)
    rho = gibbs(H, T).matrix
    return float(np.abs(H.matrix @ rho - rho @ H.matrix).max())


def rate_detailed_balance(T: float) -> float:
    bath = BathSpec(T=T)
    w = np.linspace(0.05, 300.0, 400)
    lhs = rate(-w, bath)
    rhs = np.exp(-beta(T) * w) * rate(w, bath)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(rhs, 1e-300)))


def measure_oracles() -> float:
    bell = np.zeros((4, 4))
    bell[np.ix_([0, 3], [0, 3])] = 0.5
    product = np.diag([1.0, 0, 0, 0])
    classical = np.diag([0.5, 0, 0, 0.5])
    errs = [abs(concurrence(bell) - 1), abs(quantum_discord(bell) - 1), abs(geometric_discord(bell) - 0.5)]
    for rho in (product, classical):
        errs += [concurrence(rho), quantum_discord(rho), geometric_discord(rho)]
    return max(errs)


def _relax(H, rho0: DensityMatrix, T: float) -> tuple[float, float]:
    """(trace distance after long propagation, fixed-point residual)."""
    L = build_liouvillian(H, BathSpec(T=T))
    target = steady_state_analytic(rho0, {H.label: H}, T)
    final = propagate(L, rho0, [LONG_TIME_PS])[-1]
    return trace_distance(final, target), float(np.abs(L.apply(target)).max())


def _localised(basis: tuple[int, ...], state: int) -> DensityMatrix:
    m = np.zeros((len(basis), len(basis)))
    k = basis.index(state)
    m[k, k] = 1.0
    return DensityMatrix(m, basis)


def edge_block_relaxation(params: ModelParams, T: float) -> float:
    label = (1, 0, 0, 0, 0, 0)
    H = matrix_in_sector(build_spin(params), label)
    dist, fixed = _relax(H, _localised(H.basis, H.basis[0]), T)
    return max(dist, fixed)


def ice_relaxation(params: ModelParams, T: float) -> tuple[float, float]:
    H = _ice_block(params)
    return _relax(H, _localised(H.basis, lattice.STATE_B), T)


def two_parameter_invariance(params: ModelParams, T: float = 60.0) -> float:
    ref = gibbs(_ice_block(params), T).matrix
    worst = 0.0
    for W in (0.0, 50.0):
        for V_inter in (0.0, 400.0):
            for lam in (0.0, 10.0):
                p = ModelParams(W=W, J=params.J, V_inter=V_inter, V_intra=params.V_intra, lam=lam)
                worst = max(worst, float(np.abs(gibbs(_ice_block(p), T).matrix - ref).max()))
    return worst


# -- driver --------------------------------------------------------------------

def validate(depth: str = "quick", params: ModelParams | None = None) -> ValidationReport:
    if depth not in DEPTHS:
        raise ValueError(f"depth must be one of {DEPTHS}, got {depth!r}")
    params = params or ModelParams()
    report = ValidationReport(depth)
    _run(report, "sector sizes sum to 4096 over 729 sectors", 0, sector_partition)
    _run(report, "classification counts 2/62/4032", 0, classification_counts)
    _run(report, "pseudo-spin Hamiltonian has 37 Pauli strings", 0, lambda: term_count(params))
    _run(report, "diagonal equivalence, all sectors", 1e-10, lambda: diagonal_equivalence(params))
    _run(report, "edge occupancies commute with H", 1e-12, lambda: sector_closure(params))
    _run(report, "spectral equivalence, sample sectors", 1e-10,
         lambda: max(spectral_mismatch(params, QUICK_SECTORS).values()))
    for T in (5.0, 60.0, 150.0):
        _run(report, f"Gibbs state commutes with H at {T:g} K", 1e-12, lambda T=T: gibbs_stationarity(params, T))
    _run(report, "rate detailed balance at 20 K", 1e-10, lambda: rate_detailed_balance(20.0))
    _run(report, "measure oracles (Bell, product, classical)", 1e-5, measure_oracles)
    _run(report, "two-parameter invariance of the ice steady state", 1e-10,
         lambda: two_parameter_invariance(params))
    for T in (20.0, 60.0, 120.0):
        _run(report, f"single-edge block relaxes to the closed form at {T:g} K", 1e-8,
             lambda T=T: edge_block_relaxation(params, T))
    if depth == "full":
        labels = lattice.all_sector_labels()
        _run(report, "spectral equivalence, all 729 sectors", 1e-10,
             lambda: max(spectral_mismatch(params, labels).values()))
        for T in (20.0, 60.0, 120.0):
            cache: dict = {}

            def both(T=T, cache=cache):
                cache["r"] = ice_relaxation(params, T)
                return cache["r"][0]

            _run(report, f"ice sector relaxes to the closed form at {T:g} K (trace distance)", 1e-6, both)
            _run(report, f"ice steady state is a fixed point at {T:g} K", 1e-8,
                 lambda cache=cache: cache["r"][1])
        _run(report, "fault injection (YY sign): diagonal equivalence unaffected", 1e-10,
             lambda: diagonal_equivalence(params, yy_sign=-1.0))
        _run(report, "fault injection (YY sign): spectral check flags exactly the edge blocks", 0,
             lambda: fault_detection(params, labels))
    return report
