"""Linear operator abstraction used by all solvers.

Operators are immutable after construction and safe for concurrent
read-only use. All floating point is 64-bit. Products are deterministic:
the reduction order per output entry is fixed, so repeated calls return
bitwise-identical results.
"""

import numpy as np
import scipy.io
import scipy.sparse

from tiksolve import _kernels

__all__ = [
    "LinearOperator",
    "DenseMatrix",
    "SparseCsr",
    "IdentityOperator",
    "ZeroColumnsOperator",
    "Transpose",
    "Composition",
    "matvec",
    "submatrix_columns",
    "read_matrix_market",
    "write_matrix_market",
]


def _as_vector(x, n, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise ValueError(f"{what}: expected a vector of length {n}, got shape {x.shape}")
    return x


class LinearOperator:
    """Base class: a shape plus forward/adjoint products."""

    def __init__(self, shape):
        m, n = int(shape[0]), int(shape[1])
        if m < 0 or n < 0:
            raise ValueError(f"invalid operator shape {shape}")
        self.shape = (m, n)

    def apply(self, x):
        raise NotImplementedError

    def apply_transpose(self, y):
        raise NotImplementedError

    def transpose(self):
        return Transpose(self)

    def submatrix_columns(self, cols):
        cols = _check_index_set(cols, self.shape[1])
        return ZeroColumnsOperator(self, cols)

    def to_dense(self):
        m, n = self.shape
        out = np.empty((m, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            out[:, j] = self.apply(e)
            e[j] = 0.0
        return out

    def column_sq_norms(self):
        """Squared Euclidean norms of the columns, or None if not cheap."""
        return None


def _check_index_set(cols, n):
    cols = np.asarray(cols, dtype=np.int64)
    if cols.ndim != 1:
        raise ValueError("index set must be one-dimensional")
    if cols.size:
        if cols.min() < 0 or cols.max() >= n:
            raise ValueError(f"column index out of range [0, {n})")
        if np.any(np.diff(cols) <= 0):
            raise ValueError("index set must be sorted and duplicate-free")
    return cols


def matvec(op, x):
    """Apply ``op`` to ``x`` with dimension validation."""
    x = _as_vector(x, op.shape[1], "matvec")
    return op.apply(x)


def submatrix_columns(op, cols):
    """Operator consisting of the selected columns of ``op`` (sorted indices)."""
    return op.submatrix_columns(cols)


class DenseMatrix(LinearOperator):
    """Dense m-by-n matrix operator."""

    def __init__(self, array):
        a = np.array(array, dtype=np.float64, copy=True)
        if a.ndim != 2:
            raise ValueError("DenseMatrix expects a 2-d array")
        a.setflags(write=False)
        super().__init__(a.shape)
        self.array = a

    def apply(self, x):
        return self.array @ _as_vector(x, self.shape[1], "apply")

    def apply_transpose(self, y):
        return self.array.T @ _as_vector(y, self.shape[0], "apply_transpose")

    def submatrix_columns(self, cols):
        cols = _check_index_set(cols, self.shape[1])
        return DenseMatrix(self.array[:, cols])

    def to_dense(self):
        return np.array(self.array)

    def column_sq_norms(self):
        return np.einsum("ij,ij->j", self.array, self.array)


class SparseCsr(LinearOperator):
    """Compressed sparse row matrix operator.

    Invariants checked at construction: non-decreasing row offsets and
    strictly increasing column indices within each row. Explicit zeros are
    permitted. Use :meth:`from_coo` to build from unsorted triplets
    (duplicates are summed).
    """

    def __init__(self, indptr, indices, data, shape):
        super().__init__(shape)
        m, n = self.shape
        indptr = np.array(indptr, dtype=np.int64, copy=True)
        indices = np.array(indices, dtype=np.int64, copy=True)
        data = np.array(data, dtype=np.float64, copy=True)
        if indptr.shape != (m + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("malformed CSR row offsets")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be non-decreasing")
        if indices.shape != data.shape:
            raise ValueError("indices and values must have equal length")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ValueError("column index out of range")
        for arr in (indptr, indices, data):
            arr.setflags(write=False)
        if indices.size > 1:
            # breaks between rows may go backwards; within a row they must not
            is_start = np.zeros(indices.size, dtype=bool)
            starts = indptr[1:-1]
            is_start[starts[starts < indices.size]] = True
            if np.any((np.diff(indices) <= 0) & ~is_start[1:]):
                raise ValueError("column indices must be strictly increasing per row")
        self.indptr, self.indices, self.data = indptr, indices, data
        self._handle = _kernels.make_csr_handle(indptr, indices, data, (m, n))

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        """Build from triplets: entries are sorted and duplicates summed."""
        m, n = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("triplet arrays must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError("triplet index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.empty(rows.size, dtype=bool)
            new[0] = True
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        indptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(indptr, cols, vals, shape)

    @property
    def nnz(self):
        return int(self.indices.size)

    def apply(self, x):
        x = _as_vector(x, self.shape[1], "apply")
        return _kernels.csr_matvec(self._handle, x)

    def apply_transpose(self, y):
        y = _as_vector(y, self.shape[0], "apply_transpose")
        return _kernels.csr_rmatvec(self._handle, y)

    def submatrix_columns(self, cols):
        cols = _check_index_set(cols, self.shape[1])
        keep = np.zeros(self.shape[1], dtype=bool)
        keep[cols] = True
        newcol = np.cumsum(keep) - 1
        mask = keep[self.indices]
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        counts = np.bincount(rows[mask], minlength=self.shape[0])
        indptr = np.zeros(self.shape[0] + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return SparseCsr(indptr, newcol[self.indices[mask]], self.data[mask], (self.shape[0], cols.size))

    def to_dense(self):
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[rows, self.indices] = out[rows, self.indices] + self.data
        return out

    def column_sq_norms(self):
        return np.bincount(self.indices, weights=self.data**2, minlength=self.shape[1])


class IdentityOperator(LinearOperator):
    def __init__(self, n):
        super().__init__((n, n))

    def apply(self, x):
        return np.array(_as_vector(x, self.shape[1], "apply"))

    def apply_transpose(self, y):
        return np.array(_as_vector(y, self.shape[0], "apply_transpose"))

    def submatrix_columns(self, cols):
        cols = _check_index_set(cols, self.shape[1])
        rows = cols
        indptr = np.zeros(self.shape[0] + 1, dtype=np.int64)
        indptr[rows + 1] = 1
        np.cumsum(indptr, out=indptr)
        return SparseCsr(indptr, np.arange(cols.size), np.ones(cols.size), (self.shape[0], cols.size))

    def to_dense(self):
        return np.eye(self.shape[0])

    def column_sq_norms(self):
        return np.ones(self.shape[1])


class ZeroColumnsOperator(LinearOperator):
    """Column subset of a generic operator, realized by zero padding."""

    def __init__(self, base, cols):
        super().__init__((base.shape[0], int(cols.size)))
        self.base = base
        self.cols = cols

    def apply(self, x):
        x = _as_vector(x, self.shape[1], "apply")
        full = np.zeros(self.base.shape[1])
        full[self.cols] = x
        return self.base.apply(full)

    def apply_transpose(self, y):
        return self.base.apply_transpose(y)[self.cols]


class Transpose(LinearOperator):
    def __init__(self, base):
        super().__init__((base.shape[1], base.shape[0]))
        self.base = base

    def apply(self, x):
        return self.base.apply_transpose(x)

    def apply_transpose(self, y):
        return self.base.apply(y)

    def transpose(self):
        return self.base


class Composition(LinearOperator):
    """Product A @ B acting as x -> A(B(x))."""

    def __init__(self, outer, inner):
        if outer.shape[1] != inner.shape[0]:
            raise ValueError(
                f"cannot compose {outer.shape} with {inner.shape}: inner dimensions differ"
            )
        super().__init__((outer.shape[0], inner.shape[1]))
        self.outer, self.inner = outer, inner

    def apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def apply_transpose(self, y):
        return self.inner.apply_transpose(self.outer.apply_transpose(y))


def read_matrix_market(path):
    """Load a Matrix Market coordinate file as a :class:`SparseCsr`."""
    mat = scipy.io.mmread(path)
    coo = mat.tocoo()
    return SparseCsr.from_coo(coo.row, coo.col, coo.data, coo.shape)


def write_matrix_market(op, path):
    """Write a CSR operator in Matrix Market coordinate format (1-based)."""
    if not isinstance(op, SparseCsr):
        raise ValueError("only SparseCsr operators can be exported")
    rows = np.repeat(np.arange(op.shape[0]), np.diff(op.indptr))
    coo = scipy.sparse.coo_matrix((op.data, (rows, op.indices)), shape=op.shape)
    with open(path, "wb") as fh:  # mmwrite would append ".mtx" to bare paths
        scipy.io.mmwrite(fh, coo)
