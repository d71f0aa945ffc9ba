"""Closed-form and recursive performance predictors for the scouting
iteration and the backscatter link budget."""

from __future__ import annotations

import numpy as np


def snr_recursion_step(snr, snr_max, n: int) -> np.ndarray:
    """One step of the per-direction SNR recursion.

        SNR_j' = SNR_j_max * (SNR_j + 1) / (n + sum_i SNR_i)

    `snr` and `snr_max` are linear-scale sequences over the channel
    directions; `n` is the number of BS antenna elements.
    """
    snr = np.asarray(snr, dtype=float)
    snr_max = np.asarray(snr_max, dtype=float)
    if snr.shape != snr_max.shape or snr.ndim != 1 or snr.size < 1:
        raise ValueError("snr and snr_max must be equal-length 1-D sequences")
    if n < snr.size:
        raise ValueError("n must be at least the number of directions")
    if np.any(snr < 0) or np.any(snr_max < 0):
        raise ValueError("SNR values must be non-negative")
    return snr_max * (snr + 1.0) / (n + snr.sum())


def snr_trajectory(snr_max, n: int, init, horizon: int) -> np.ndarray:
    """Iterate the SNR recursion from `init` for `horizon` steps.

    Returns an array of shape (horizon + 1, r) whose first row is `init`.
    """
    snr_max = np.asarray(snr_max, dtype=float)
    state = np.asarray(init, dtype=float)
    if state.shape != snr_max.shape:
        raise ValueError("init must match snr_max in length")
    out = np.empty((horizon + 1, snr_max.size))
    out[0] = state
    for k in range(horizon):
        state = snr_recursion_step(state, snr_max, n)
        out[k + 1] = state
    return out


def rank1_fixed_point(snr_max: float, n: int) -> float:
    """Stationary SNR of the rank-1 recursion.

    Positive root of x^2 + (n - s) x - s = 0, which is the fixed point of
    x <- s (x + 1) / (n + x). For s/n >> 1 this approaches s - n.
    """
    if snr_max <= 0:
        raise ValueError("snr_max must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    s = float(snr_max)
    return 0.5 * ((s - n) + np.sqrt((s - n) ** 2 + 4.0 * s))


def bootstrap_snr(snr_max: float, n: int) -> float:
    """First-iteration SNR from a uniformly random beamformer: snr_max / n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return snr_max / n


def decision_snr(p_tx_w: float, p_scout_w: float, snr_max_top: float) -> float:
    """Detector-input SNR once the estimated beamformer is handed over to a
    packet task: (P_tx / P_scout) * snr_max_top."""
    if p_tx_w <= 0 or p_scout_w <= 0 or snr_max_top <= 0:
        raise ValueError("inputs must be positive")
    return (p_tx_w / p_scout_w) * snr_max_top


def decision_snr_exact(p_tx_w: float, p_scout_w: float, snr_at_handoff,
                       snr_max) -> float:
    """Exact detector-input SNR from the per-direction handoff state:

        (P_tx / P_scout) * (sum_j SNR_j / sqrt(SNR_j_max))^2
    """
    snr = np.asarray(snr_at_handoff, dtype=float)
    snr_max_arr = np.asarray(snr_max, dtype=float)
    if snr.shape != snr_max_arr.shape:
        raise ValueError("snr_at_handoff must match snr_max in length")
    if np.any(snr_max_arr <= 0):
        raise ValueError("snr_max values must be positive")
    total = float(np.sum(snr / np.sqrt(snr_max_arr)))
    return (p_tx_w / p_scout_w) * total ** 2


def free_space_snr(p_w: float, g: float, n: int, m: int, g_bs: float,
                   g_scm: float, wavelength_m: float, distance_m: float,
                   sigma_sq_w: float) -> float:
    """Paraxial free-space decision SNR of the round-trip link:

        P g^2 N^2 M^2 G_bs^2 G_scm^2 lambda^4 / (sigma^2 (4 pi d)^4)

    The fourth-power distance law reflects the two-way backscatter path.
    """
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    if sigma_sq_w <= 0:
        raise ValueError("noise variance must be positive")
    num = p_w * g ** 2 * n ** 2 * m ** 2 * g_bs ** 2 * g_scm ** 2 * wavelength_m ** 4
    den = sigma_sq_w * (4.0 * np.pi * distance_m) ** 4
    return num / den
