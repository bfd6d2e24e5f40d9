"""Physical constants and the numerical tolerances shared by every module."""

from __future__ import annotations

from dataclasses import dataclass

#: Boltzmann constant in meV/K.
K_B = 0.08617333262
#: Reduced Planck constant in meV*ps.
HBAR = 0.6582119569


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    psd: float = 1e-10
    psd_reject: float = 1e-8
    trace: float = 1e-10
    eig_residual: float = 1e-9
    orthonormality: float = 1e-10
    degeneracy: float = 1e-9  # meV
    freq_bin: float = 1e-9  # meV
    leakage: float = 1e-12


TOL = Tolerances()


def beta(T: float) -> float:
    """Inverse temperature in 1/meV; ``inf`` at T = 0."""
    if T < 0:
        raise ValueError(f"temperature must be non-negative, got {T}")
    return float("inf") if T == 0 else 1.0 / (K_B * T)
