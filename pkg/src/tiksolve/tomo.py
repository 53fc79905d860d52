"""Desk-scale tomography bench.

Parallel-beam geometry on the square [-1, 1]^2: projection angles are
uniform on [0, pi), ray offsets uniform on [-1, 1]. Pixel (i, j) of an
``ImageGrid`` covers x in [-1 + 2j/n1, -1 + 2(j+1)/n1] and y analogously
(row 0 sits at the bottom edge; writers flip for display). The projector
matrix holds exact ray/pixel intersection lengths from ray tracing.
"""

from dataclasses import dataclass

import numpy as np

from tiksolve import _kernels
from tiksolve.operators import SparseCsr

__all__ = [
    "ImageGrid",
    "Sinogram",
    "radon_angles",
    "radon_offsets",
    "build_radon",
    "shepp_phantom",
    "blocks_phantom",
    "add_noise",
]


@dataclass
class ImageGrid:
    """n2-by-n1 pixel image stored row-major on the normalized square."""

    n1: int
    n2: int
    values: np.ndarray

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("image grids need n1, n2 >= 2")
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.size != self.n1 * self.n2:
            raise ValueError("value vector does not match the grid size")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image values must be finite")

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=np.float64)
        return cls(n1=mat.shape[1], n2=mat.shape[0], values=mat.ravel())

    def as_matrix(self):
        return self.values.reshape(self.n2, self.n1)


@dataclass
class Sinogram:
    """Projection data: one value per (angle, offset), angle-major."""

    angles: np.ndarray
    offsets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if np.any(np.diff(self.angles) <= 0.0):
            raise ValueError("angles must be strictly increasing")
        if not np.allclose(self.offsets, -self.offsets[::-1], atol=1e-12):
            raise ValueError("offsets must be symmetric about 0")
        if self.values.size != self.angles.size * self.offsets.size:
            raise ValueError("value vector does not match the geometry")

    def as_matrix(self):
        return self.values.reshape(self.angles.size, self.offsets.size)


def radon_angles(num_angles):
    """Uniform projection angles on [0, pi)."""
    if num_angles < 2:
        raise ValueError("need at least 2 angles")
    return np.arange(num_angles) * (np.pi / num_angles)


def radon_offsets(num_offsets):
    """Uniform, symmetric ray offsets on [-1, 1]."""
    if num_offsets < 2:
        raise ValueError("need at least 2 offsets")
    return np.linspace(-1.0, 1.0, num_offsets)


def build_radon(n1, n2, num_angles, num_offsets):
    """Ray-traced projector matrix: (num_angles*num_offsets) x (n1*n2)."""
    if n1 < 2 or n2 < 2:
        raise ValueError("image grids need n1, n2 >= 2")
    angles = radon_angles(num_angles)
    offsets = radon_offsets(num_offsets)
    rows, cols, vals = _kernels.radon_entries(n1, n2, angles, offsets)
    return SparseCsr.from_coo(rows, cols, vals, (num_angles * num_offsets, n1 * n2))


def _pixel_centers(n1, n2):
    xs = -1.0 + 2.0 * (np.arange(n1) + 0.5) / n1
    ys = -1.0 + 2.0 * (np.arange(n2) + 0.5) / n2
    return np.meshgrid(xs, ys)


# (value, semi-axis a, semi-axis b, x0, y0, angle_deg); the familiar
# ten-ellipse head phantom with the high-contrast gray levels
_SHEPP_ELLIPSES = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
]


def shepp_phantom(n1, n2):
    """Piecewise-constant ellipse phantom with values clamped to [0, 1]."""
    if n1 < 16 or n2 < 16:
        raise ValueError("phantoms need n1, n2 >= 16")
    xx, yy = _pixel_centers(n1, n2)
    img = np.zeros((n2, n1))
    for value, a, b, x0, y0, deg in _SHEPP_ELLIPSES:
        phi = np.deg2rad(deg)
        xr = (xx - x0) * np.cos(phi) + (yy - y0) * np.sin(phi)
        yr = -(xx - x0) * np.sin(phi) + (yy - y0) * np.cos(phi)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    return ImageGrid(n1=n1, n2=n2, values=np.clip(img, 0.0, 1.0).ravel())


# (value, x_lo, x_hi, y_lo, y_hi); disjoint, inside the unit disk
_BLOCKS = [
    (0.4, -0.6, -0.1, -0.5, 0.3),
    (0.7, 0.1, 0.6, -0.6, -0.1),
    (1.0, -0.2, 0.3, 0.4, 0.75),
]


def blocks_phantom(n1, n2):
    """Three axis-aligned rectangles with values {0.4, 0.7, 1.0} on zero."""
    if n1 < 16 or n2 < 16:
        raise ValueError("phantoms need n1, n2 >= 16")
    xx, yy = _pixel_centers(n1, n2)
    img = np.zeros((n2, n1))
    for value, x_lo, x_hi, y_lo, y_hi in _BLOCKS:
        inside = (xx >= x_lo) & (xx < x_hi) & (yy >= y_lo) & (yy < y_hi)
        img[inside] = value
    return ImageGrid(n1=n1, n2=n2, values=img.ravel())


def add_noise(y, relative_level, seed):
    """y plus Gaussian-direction noise of norm relative_level * ||y||."""
    if relative_level < 0.0:
        raise ValueError("relative_level must be nonnegative")
    y = np.asarray(y, dtype=np.float64)
    if relative_level == 0.0:
        return y.copy()
    rng = np.random.default_rng(seed)
    delta = rng.standard_normal(y.size)
    norm = np.linalg.norm(delta)
    if norm == 0.0:
        return y.copy()
    return y + (relative_level * np.linalg.norm(y) / norm) * delta
