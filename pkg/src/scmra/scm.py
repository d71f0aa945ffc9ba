"""Modulating self-conjugating metasurface: conjugation, gain, common phase
modulation, cell noise, and the packet bits -> phase mapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import complex_normal


@dataclass(frozen=True)
class ScmParameters:
    gain: float           # amplitude gain g (linear)
    sigma_eta_sq: float   # per-cell noise variance, Watts
    cells: int            # M

    def __post_init__(self):
        if self.gain <= 0:
            raise ValueError("gain must be positive")
        if self.sigma_eta_sq < 0:
            raise ValueError("noise variance must be non-negative")
        if self.cells < 1:
            raise ValueError("metasurface needs at least one cell")


def scm_reflect(z: np.ndarray, phase_rad: float, params: ScmParameters,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Backscattered cell signals g * exp(j phase) * conj(z + eta).

    Cell noise eta ~ CN(0, sigma_eta_sq I) is added to the incident signal
    before conjugation, so the gain amplifies signal and noise alike.
    """
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != (params.cells,):
        raise ValueError("dimension mismatch between signal and cell count")
    if params.sigma_eta_sq > 0.0:
        if rng is None:
            raise ValueError("rng required when cell noise is enabled")
        z = z + complex_normal(rng, params.cells, params.sigma_eta_sq)
    return params.gain * np.exp(1j * phase_rad) * np.conj(z)


def bits_to_phases(bits, guard_length: int) -> np.ndarray:
    """BPSK packet phases: `guard_length` zeros, then bit b -> phase b * pi."""
    if guard_length < 0:
        raise ValueError("guard length must be non-negative")
    bits = np.asarray(bits, dtype=float)
    return np.concatenate([np.zeros(guard_length), np.pi * bits])
