"""File formats emitted and read by the bench and the CLI.

Images go out as binary PGM (P5, maxval 255, linear floor-based rescale)
and as raw CSV; sinograms as CSV with a ``theta,sigma,value`` header.
Floats are written with ``repr`` so identical runs produce byte-identical
files.
"""

import numpy as np

from tiksolve.tomo import ImageGrid, Sinogram

__all__ = [
    "write_pgm",
    "write_image_csv",
    "read_image_csv",
    "write_sinogram_csv",
    "read_sinogram_csv",
]


def write_pgm(img: ImageGrid, path):
    """Binary PGM: values rescaled to 0..255 by t -> floor(256 t), capped."""
    mat = img.as_matrix()
    lo, hi = float(mat.min()), float(mat.max())
    if hi > lo:
        scaled = np.minimum(np.floor((mat - lo) / (hi - lo) * 256.0), 255.0)
    else:
        scaled = np.zeros_like(mat)
    data = scaled.astype(np.uint8)[::-1, :]  # row 0 is the bottom edge
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.n1} {img.n2}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_image_csv(img: ImageGrid, path):
    mat = img.as_matrix()
    with open(path, "w") as fh:
        for row in mat:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_image_csv(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    mat = np.asarray(rows, dtype=np.float64)
    return ImageGrid(n1=mat.shape[1], n2=mat.shape[0], values=mat.ravel())


def write_sinogram_csv(sino: Sinogram, path):
    mat = sino.as_matrix()
    with open(path, "w") as fh:
        fh.write("theta,sigma,value\n")
        for a, theta in enumerate(sino.angles):
            for t, sigma in enumerate(sino.offsets):
                fh.write(f"{float(theta)!r},{float(sigma)!r},{float(mat[a, t])!r}\n")


def read_sinogram_csv(path):
    thetas, sigmas, values = [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "theta,sigma,value":
            raise ValueError(f"unexpected sinogram header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t, s, v = line.split(",")
            thetas.append(float(t))
            sigmas.append(float(s))
            values.append(float(v))
    thetas = np.asarray(thetas)
    sigmas = np.asarray(sigmas)
    values = np.asarray(values)
    angles = np.unique(thetas)
    offsets = np.unique(sigmas)
    if values.size != angles.size * offsets.size:
        raise ValueError("sinogram file is not a full (angle x offset) grid")
    grid = np.full((angles.size, offsets.size), np.nan)
    grid[np.searchsorted(angles, thetas), np.searchsorted(offsets, sigmas)] = values
    if np.any(np.isnan(grid)):
        raise ValueError("sinogram file has missing (angle, offset) cells")
    return Sinogram(angles=angles, offsets=offsets, values=grid.ravel())
