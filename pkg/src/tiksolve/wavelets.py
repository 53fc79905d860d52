"""Orthonormal Haar transforms used as the sparsity basis.

The 1-D analysis transform maps a vector of length N (a multiple of
2^levels) to [approx | detail_L | ... | detail_1]; it is exactly
orthonormal, so the synthesis transform is both its inverse and its
adjoint. Images are transformed by applying the 1-D step to rows then
columns per level, recursing on the low-pass block.
"""

import numpy as np

from tiksolve.operators import LinearOperator

__all__ = [
    "haar_forward",
    "haar_inverse",
    "haar_forward_2d",
    "haar_inverse_2d",
    "HaarSynthesisOperator",
]

_SQRT2 = np.sqrt(2.0)


def _check_length(n, levels, what):
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if n % (1 << levels) != 0:
        raise ValueError(f"{what} of size {n} is not a multiple of 2^{levels}")


def haar_forward(x, levels):
    """Multi-level orthonormal Haar analysis of a 1-D vector."""
    x = np.asarray(x, dtype=np.float64)
    _check_length(x.size, levels, "vector")
    out = x.copy()
    n = x.size
    for _ in range(levels):
        half = n // 2
        even, odd = out[0:n:2].copy(), out[1:n:2].copy()
        out[:half] = (even + odd) / _SQRT2
        out[half:n] = (even - odd) / _SQRT2
        n = half
    return out


def haar_inverse(coeffs, levels):
    """Inverse (= adjoint) of :func:`haar_forward`."""
    c = np.asarray(coeffs, dtype=np.float64)
    _check_length(c.size, levels, "vector")
    out = c.copy()
    n = c.size >> levels
    for _ in range(levels):
        n2 = 2 * n
        approx, detail = out[:n].copy(), out[n:n2].copy()
        out[0:n2:2] = (approx + detail) / _SQRT2
        out[1:n2:2] = (approx - detail) / _SQRT2
        n = n2
    return out


def haar_forward_2d(img, levels):
    """Analysis transform of a 2-D array: rows then columns per level."""
    img = np.asarray(img, dtype=np.float64)
    _check_length(img.shape[0], levels, "image rows")
    _check_length(img.shape[1], levels, "image columns")
    out = img.copy()
    r, c = img.shape
    for _ in range(levels):
        block = out[:r, :c]
        block[:] = _rows_step(block)
        block[:] = _rows_step(block.T).T
        r //= 2
        c //= 2
    return out


def haar_inverse_2d(coeffs, levels):
    """Inverse of :func:`haar_forward_2d`."""
    c2 = np.asarray(coeffs, dtype=np.float64)
    _check_length(c2.shape[0], levels, "image rows")
    _check_length(c2.shape[1], levels, "image columns")
    out = c2.copy()
    rows = [c2.shape[0] >> k for k in range(levels, 0, -1)]
    cols = [c2.shape[1] >> k for k in range(levels, 0, -1)]
    for r, c in zip(rows, cols):
        block = out[: 2 * r, : 2 * c]
        block[:] = _rows_inverse_step(block.T).T
        block[:] = _rows_inverse_step(block)
    return out


def _rows_step(block):
    even, odd = block[:, 0::2], block[:, 1::2]
    return np.hstack(((even + odd) / _SQRT2, (even - odd) / _SQRT2))


def _rows_inverse_step(block):
    half = block.shape[1] // 2
    approx, detail = block[:, :half], block[:, half:]
    out = np.empty_like(block)
    out[:, 0::2] = (approx + detail) / _SQRT2
    out[:, 1::2] = (approx - detail) / _SQRT2
    return out


class HaarSynthesisOperator(LinearOperator):
    """Maps 2-D wavelet coefficients (flat) to image pixels (flat, row-major).

    Orthonormal, so ``apply_transpose`` is the analysis transform and the
    operator satisfies the adjoint identity exactly up to rounding.
    """

    def __init__(self, n1, n2, levels):
        _check_length(n1, levels, "image columns")
        _check_length(n2, levels, "image rows")
        n = n1 * n2
        super().__init__((n, n))
        self.n1, self.n2, self.levels = n1, n2, levels

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        return haar_inverse_2d(v.reshape(self.n2, self.n1), self.levels).ravel()

    def apply_transpose(self, x):
        x = np.asarray(x, dtype=np.float64)
        return haar_forward_2d(x.reshape(self.n2, self.n1), self.levels).ravel()

    def column_sq_norms(self):
        return np.ones(self.shape[1])
