"""Base-station engine: shared beamformer database, scouting task update,
detection/drop rules, and per-packet correlation/demodulation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .linalg import gram_schmidt_extend

DB_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class ProtocolThresholds:
    gamma_dec: float    # detection SNR threshold, linear
    gamma_drop: float   # packet-end SNR threshold, linear
    gamma_delta: float  # convergence ratio threshold, linear
    p_tx_w: float       # per-task transmit power, Watts
    p_scout_w: float    # scouting transmit power, Watts

    def __post_init__(self):
        if not (self.gamma_dec > self.gamma_drop > 0):
            raise ValueError("gamma_dec must exceed gamma_drop, both positive")
        if self.gamma_delta <= 1.0:
            raise ValueError("gamma_delta must exceed 1 (linear)")
        if self.p_tx_w <= 0 or self.p_scout_w <= 0:
            raise ValueError("powers must be positive")

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "ProtocolThresholds":
        return cls(cfg.gamma_dec, cfg.gamma_drop, cfg.gamma_delta,
                   cfg.tx_power_w, cfg.scout_power_w)


class SharedDatabase:
    """Ordered orthonormal beamformers of the packets currently under decoding.

    One dimension is always reserved for scouting, so capacity is dim - 1.
    Vectors are re-orthonormalized on insertion to hold the pairwise
    orthogonality invariant near machine precision.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self._vectors: list[np.ndarray] = []
        self._task_ids: list[int] = []
        self._matrix: np.ndarray | None = None
        self._beam_sum: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def capacity(self) -> int:
        return self.dim - 1

    @property
    def vectors(self) -> list[np.ndarray]:
        return list(self._vectors)

    @property
    def task_ids(self) -> list[int]:
        return list(self._task_ids)

    @property
    def matrix(self) -> np.ndarray | None:
        """(dim, V) matrix of the stored beamformers, or None when empty."""
        if self._matrix is None and self._vectors:
            self._matrix = np.column_stack(self._vectors)
        return self._matrix

    @property
    def beam_sum(self) -> np.ndarray | None:
        """Sum of the stored beamformers, or None when empty."""
        if self._beam_sum is None and self._vectors:
            m = self.matrix
            self._beam_sum = m.sum(axis=1)
        return self._beam_sum

    def add(self, b: np.ndarray, task_id: int) -> np.ndarray:
        """Insert a beamformer, returning the re-orthonormalized stored copy."""
        if len(self._vectors) >= self.capacity:
            raise ValueError("subspace exhausted")
        if task_id in self._task_ids:
            raise ValueError(f"task id {task_id} already present")
        stored = gram_schmidt_extend(self.matrix, b)
        self._vectors.append(stored)
        self._task_ids.append(task_id)
        self._matrix = None
        self._beam_sum = None
        return stored

    def remove(self, task_id: int) -> None:
        try:
            idx = self._task_ids.index(task_id)
        except ValueError:
            raise ValueError(f"unknown task id {task_id}") from None
        del self._vectors[idx]
        del self._task_ids[idx]
        self._matrix = None
        self._beam_sum = None


@dataclass
class ScoutingState:
    """Power-iteration state of the scouting task."""

    x0: np.ndarray                  # current unit-norm scouting beamformer
    gamma_prev: float | None = None  # SNR of the previous step, linear
    needs_reinit: bool = False       # set when the database changed


@dataclass
class CommTaskState:
    """One packet-decoding task with its frozen beamformer."""

    task_id: int
    b: np.ndarray
    start_symbol: int
    decoded_bits: list[int] = field(default_factory=list)
    gamma: float = 0.0
    active: bool = True
    ue_id: int | None = None
    gamma_trace: list[float] | None = None


def compose_transmit(scout: ScoutingState, tasks, thr: ProtocolThresholds,
                     beam_sum: np.ndarray | None = None) -> np.ndarray:
    """Superpose the scouting beam and all task beams (amplitudes in sqrt(W)).

    With mutually orthogonal beamformers the radiated power is exactly
    p_scout + V * p_tx. A precomputed sum of the task beamformers may be
    passed to skip the per-task accumulation.
    """
    x = np.sqrt(thr.p_scout_w) * scout.x0
    if beam_sum is not None:
        return x + np.sqrt(thr.p_tx_w) * beam_sum
    if tasks:
        amp = np.sqrt(thr.p_tx_w)
        for task in tasks:
            x = x + amp * task.b
    return x


def orthogonalize(y: np.ndarray, db: SharedDatabase) -> np.ndarray:
    """Remove the database beamformers' return components from a received vector.

    The conjugating reflection brings a task's signal back along conj(b), so
    the projector must null those conjugate directions: y - B* B^T y. The
    conjugated power-method update conj(y_perp) then stays orthogonal to the
    stored beamformers themselves, and the effective iteration matrix in the
    noiseless limit is (I - B B^H) A.
    """
    b = db.matrix
    if b is None:
        return y
    return y - np.conj(b @ np.conj(b.T @ y))


def scouting_update(scout: ScoutingState, y: np.ndarray, db: SharedDatabase,
                    sigma_sq_w: float) -> tuple[ScoutingState, float]:
    """One scouting iteration on the received vector.

    The projected receive vector drives both the SNR estimate
    gamma = ||y_perp||^2 / sigma^2 and the power-iteration update
    x0 <- conj(y_perp) / ||y_perp||. A zero projection keeps the previous
    beamformer and reports gamma = 0 (empty subspace); "zero" is relative to
    ||y|| because the projector's roundoff residue lies along the removed
    directions and must never be normalized into a beamformer.
    """
    y_perp = orthogonalize(y, db)
    norm_sq = np.vdot(y_perp, y_perp).real
    if norm_sq <= 1e-24 * np.vdot(y, y).real:
        return ScoutingState(scout.x0, 0.0, scout.needs_reinit), 0.0
    gamma = norm_sq / sigma_sq_w
    x0 = np.conj(y_perp) / np.sqrt(norm_sq)
    return ScoutingState(x0, gamma, scout.needs_reinit), gamma


def detection_rule(gamma: float, gamma_prev: float | None,
                   thr: ProtocolThresholds) -> bool:
    """New packet detected: enough energy and the iteration has settled.

    The first step after (re)initialization never detects because no valid
    previous SNR sample exists yet.
    """
    if gamma_prev is None or gamma_prev <= 0.0:
        return False
    return gamma > thr.gamma_dec and gamma / gamma_prev < thr.gamma_delta


def comm_correlate(b: np.ndarray, y: np.ndarray) -> complex:
    """Decision variable b^H conj(y) for a task with beamformer b."""
    return complex(np.vdot(b, np.conj(y)))


def bpsk_demodulate(u: complex) -> int:
    """Nearest-phase BPSK decision on the decision variable (ties -> 0)."""
    return 0 if u.real >= 0.0 else 1


def drop_rule(u: complex, sigma_sq_w: float, thr: ProtocolThresholds) -> bool:
    """Packet end reached: decision-variable SNR fell below gamma_drop."""
    return abs(u) ** 2 / sigma_sq_w < thr.gamma_drop
