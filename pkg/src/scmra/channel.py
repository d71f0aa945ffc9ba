"""Channel generation: spherical-wave LOS, clustered NLOS surrogate, synthetic
fixed-rank fixtures, and the conjugated round-trip channel A = g H^H H."""

from __future__ import annotations

import numpy as np

from .config import BOLTZMANN_J_PER_K, REFERENCE_TEMPERATURE_K, db_to_linear
from .linalg import PlanarArrayGeometry, element_positions, complex_normal


def noise_variance(noise_figure_db: float, bandwidth_hz: float) -> float:
    """Thermal noise power kappa * T0 * F * W in Watts."""
    if bandwidth_hz <= 0:
        raise ValueError("invalid bandwidth")
    return (BOLTZMANN_J_PER_K * REFERENCE_TEMPERATURE_K
            * db_to_linear(noise_figure_db) * bandwidth_hz)


def los_channel(bs_geom: PlanarArrayGeometry, scm_geom: PlanarArrayGeometry,
                wavelength_m: float, bs_element_gain: float = 1.0,
                scm_element_gain: float = 1.0) -> np.ndarray:
    """Free-space channel matrix H (M x N) between BS elements and SCM cells.

    Each entry uses the exact element-pair distance (spherical wave), so the
    matrix naturally picks up rank > 1 in the radiating near field:

        h[m, n] = sqrt(G_bs G_scm) * (lambda / (4 pi d_mn)) * exp(-j 2 pi d_mn / lambda)
    """
    if wavelength_m <= 0:
        raise ValueError("wavelength must be positive")
    bs_pos = element_positions(bs_geom)
    scm_pos = element_positions(scm_geom)
    # pairwise distances via |p|^2 + |q|^2 - 2 p.q (one BLAS gemm)
    d_sq = (np.sum(scm_pos ** 2, axis=1)[:, None]
            + np.sum(bs_pos ** 2, axis=1)[None, :]
            - 2.0 * (scm_pos @ bs_pos.T))
    np.maximum(d_sq, 0.0, out=d_sq)
    d = np.sqrt(d_sq)
    if np.any(d == 0.0):
        raise ValueError("co-located elements")
    amp = np.sqrt(bs_element_gain * scm_element_gain) * wavelength_m / (4.0 * np.pi * d)
    d *= -2.0 * np.pi / wavelength_m  # phase, reusing the distance buffer
    h = np.empty(d.shape, dtype=np.complex128)
    np.cos(d, out=h.real)
    np.sin(d, out=h.imag)
    h *= amp
    return h


def nlos_multipath_channel(bs_geom: PlanarArrayGeometry, scm_geom: PlanarArrayGeometry,
                           wavelength_m: float, cluster_count: int,
                           delay_spread_s: float, pathloss_exponent: float,
                           rng: np.random.Generator,
                           bs_element_gain: float = 1.0,
                           scm_element_gain: float = 1.0) -> np.ndarray:
    """Clustered narrowband NLOS surrogate ("clustered-nlos" channel type).

    Sum of `cluster_count` planar-wave outer products with complex Gaussian
    amplitudes following an exponential power-delay profile. The average
    power is calibrated so E[||H||_F^2] equals the free-space value at the
    array separation d, re-scaled by (d / 1 m)^(2 - beta) for the path-loss
    exponent beta.
    """
    if cluster_count < 1:
        raise ValueError("cluster_count must be >= 1")
    if delay_spread_s <= 0:
        raise ValueError("delay spread must be positive")
    bs_pos = element_positions(bs_geom)
    scm_pos = element_positions(scm_geom)
    d = float(np.linalg.norm(np.asarray(scm_geom.center_m) - np.asarray(bs_geom.center_m)))
    if d == 0.0:
        raise ValueError("co-located arrays")

    delays = rng.exponential(delay_spread_s, size=cluster_count)
    powers = np.exp(-delays / delay_spread_s)
    powers /= powers.sum()
    # Common phase from propagation delay plus Rayleigh fading per cluster.
    alphas = (np.sqrt(powers) * complex_normal(rng, cluster_count)
              * np.exp(-2j * np.pi * delays * (2.99792458e8 / wavelength_m)))

    h = np.zeros((scm_geom.n_elements, bs_geom.n_elements), dtype=np.complex128)
    for c in range(cluster_count):
        h += alphas[c] * np.outer(_steering(scm_pos, rng, wavelength_m),
                                  _steering(bs_pos, rng, wavelength_m).conj())

    amp_fs = np.sqrt(bs_element_gain * scm_element_gain) * wavelength_m / (4.0 * np.pi * d)
    scale = amp_fs * d ** ((2.0 - pathloss_exponent) / 2.0)
    return scale * h


def _steering(positions: np.ndarray, rng: np.random.Generator,
              wavelength_m: float) -> np.ndarray:
    """Unit-modulus planar-wave response for a direction drawn uniformly on the sphere."""
    azimuth = rng.uniform(0.0, 2.0 * np.pi)
    cos_zenith = rng.uniform(-1.0, 1.0)
    sin_zenith = np.sqrt(1.0 - cos_zenith ** 2)
    k_hat = np.array([sin_zenith * np.cos(azimuth),
                      sin_zenith * np.sin(azimuth),
                      cos_zenith])
    return np.exp(-2j * np.pi * (positions @ k_hat) / wavelength_m)


def synthetic_rank_channel(n: int, eigenvalues, rng: np.random.Generator) -> np.ndarray:
    """Hermitian PSD matrix A = V diag(eigenvalues) V^H with a seeded random
    orthonormal V; rank equals the number of strictly positive eigenvalues."""
    vals = np.asarray(eigenvalues, dtype=float)
    if vals.size == 0 or not np.any(vals > 0):
        raise ValueError("eigenvalues must contain at least one positive value")
    if np.any(vals < 0):
        raise ValueError("PSD violated")
    if vals.size > n:
        raise ValueError("more eigenvalues than dimensions")
    if np.any(np.diff(vals) > 0):
        raise ValueError("eigenvalues must be non-increasing")
    v, _ = np.linalg.qr(complex_normal(rng, (n, vals.size)))
    a = (v * vals) @ v.conj().T
    return 0.5 * (a + a.conj().T)


def synthetic_channel_matrix(m: int, n: int, round_trip_eigenvalues, g: float,
                             rng: np.random.Generator) -> np.ndarray:
    """Channel matrix H (m x n) whose round trip g H^H H has the requested
    eigenvalues; used by synthetic-rank traffic fixtures."""
    vals = np.asarray(round_trip_eigenvalues, dtype=float)
    if g <= 0:
        raise ValueError("gain must be positive")
    if np.any(vals < 0):
        raise ValueError("PSD violated")
    r = vals.size
    if r > min(m, n):
        raise ValueError("rank exceeds array dimensions")
    u, _ = np.linalg.qr(complex_normal(rng, (m, r)))
    w, _ = np.linalg.qr(complex_normal(rng, (n, r)))
    return (u * np.sqrt(vals / g)) @ w.conj().T


def modified_round_trip(h: np.ndarray, g: float) -> np.ndarray:
    """Round-trip channel seen by the BS after conjugating reflection: A = g H^H H."""
    if g <= 0:
        raise ValueError("gain must be positive")
    h = np.asarray(h, dtype=np.complex128)
    a = g * (h.conj().T @ h)
    return 0.5 * (a + a.conj().T)
