"""Complex linear-algebra primitives and planar array geometry.

The eigen-decomposition here serves as a ground-truth oracle for tests and
link-budget checks; the access protocol itself never calls it (beamformers
are estimated blindly from round trips).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12
SPAN_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class PlanarArrayGeometry:
    """Regular rows x cols element grid in the xy-plane, centered on `center_m`."""

    rows: int
    cols: int
    spacing_m: float
    center_m: tuple[float, float, float] = (0.0, 0.0, 0.0)
    plane: str = "xy"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array must have at least one row and one column")
        if self.spacing_m <= 0:
            raise ValueError("element spacing must be positive")
        if self.plane != "xy":
            raise ValueError("only xy-plane arrays are supported")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


def element_positions(geom: PlanarArrayGeometry) -> np.ndarray:
    """Element centers as an (n_elements, 3) array in meters.

    Ordering is row-major (column index varies fastest) and deterministic:
    element (r, c) sits at center + ((c - (cols-1)/2) * s, (r - (rows-1)/2) * s, 0).
    """
    s = geom.spacing_m
    xs = (np.arange(geom.cols) - (geom.cols - 1) / 2.0) * s
    ys = (np.arange(geom.rows) - (geom.rows - 1) / 2.0) * s
    grid_x, grid_y = np.meshgrid(xs, ys)  # row-major: y constant along each row
    pos = np.zeros((geom.n_elements, 3))
    pos[:, 0] = grid_x.ravel()
    pos[:, 1] = grid_y.ravel()
    return pos + np.asarray(geom.center_m, dtype=float)


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return True
    return np.linalg.norm(a - a.conj().T) / norm < rtol


def hermitian_eigendecomposition(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending, real) and orthonormal eigenvectors (columns).

    Raises ValueError("not Hermitian") when the input fails the Hermitian
    residual check.
    """
    a = np.asarray(a, dtype=np.complex128)
    if not is_hermitian(a):
        raise ValueError("not Hermitian")
    vals, vecs = np.linalg.eigh(a)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def _basis_matrix(basis, dim: int | None = None) -> np.ndarray | None:
    if basis is None:
        return None
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        return basis if basis.shape[1] > 0 else None
    vecs = list(basis)
    if not vecs:
        return None
    return np.column_stack(vecs)


def gram_schmidt_extend(basis, candidate: np.ndarray) -> np.ndarray:
    """Project `candidate` out of span(basis) and normalize.

    `basis` is a sequence of orthonormal vectors (or an (n, v) matrix). Two
    projection passes keep the residual orthogonality near machine precision.
    Raises ValueError("candidate in span") when nothing usable remains.
    """
    v = np.asarray(candidate, dtype=np.complex128).copy()
    b = _basis_matrix(basis)
    if b is not None:
        v -= b @ (b.conj().T @ v)
    norm = np.sqrt(np.vdot(v, v).real)
    if norm < SPAN_RESIDUAL_TOL:
        raise ValueError("candidate in span")
    if b is not None:
        v -= b @ (b.conj().T @ v)
        norm = np.sqrt(np.vdot(v, v).real)
    return v / norm


def complex_normal(rng: np.random.Generator, size=None, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian draws with the given total variance.

    Real and imaginary parts each carry variance/2.
    """
    scale = np.sqrt(variance / 2.0)
    if isinstance(size, int):
        flat = rng.standard_normal(2 * size)
        return scale * (flat[:size] + 1j * flat[size:])
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def random_unit_vector(rng: np.random.Generator, dim: int,
                       forbidden_basis: Sequence[np.ndarray] = ()) -> np.ndarray:
    """Random unit vector orthogonal to every vector of `forbidden_basis`.

    Entries are i.i.d. standard complex Gaussian before projection, so the
    direction is uniform over the complement subspace.
    """
    b = _basis_matrix(forbidden_basis)
    used = 0 if b is None else b.shape[1]
    if dim <= used:
        raise ValueError("null space empty")
    while True:
        draw = complex_normal(rng, dim)
        try:
            return gram_schmidt_extend(b if b is not None else (), draw)
        except ValueError:
            continue  # astronomically rare; redraw
