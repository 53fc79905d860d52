"""Backend agreement: compiled kernels vs the pure NumPy/SciPy fallback."""

import numpy as np
import pytest

from tiksolve import _kernels
from tiksolve._kernels import pykernels

compiled = pytest.mark.skipif(
    not _kernels.HAVE_COMPILED, reason="compiled backend not built"
)


def random_csr_arrays(rng, m, n, density=0.3):
    mat = rng.normal(size=(m, n))
    mat[rng.random(size=(m, n)) > density] = 0.0
    indptr = [0]
    indices = []
    data = []
    for i in range(m):
        nz = np.flatnonzero(mat[i])
        indices.extend(nz.tolist())
        data.extend(mat[i, nz].tolist())
        indptr.append(len(indices))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(data, dtype=np.float64),
        (m, n),
    )


@compiled
def test_csr_products_agree():
    from tiksolve._kernels import _core

    rng = np.random.default_rng(51)
    for m, n in [(13, 7), (40, 40), (3, 90)]:
        indptr, indices, data, shape = random_csr_arrays(rng, m, n)
        hc = _core.make_csr_handle(indptr, indices, data, shape)
        hp = pykernels.make_csr_handle(indptr, indices, data, shape)
        for _ in range(10):
            x = rng.normal(size=n)
            y = rng.normal(size=m)
            assert np.allclose(
                _core.csr_matvec(hc, x), pykernels.csr_matvec(hp, x), rtol=1e-14, atol=1e-14
            )
            assert np.allclose(
                _core.csr_rmatvec(hc, y), pykernels.csr_rmatvec(hp, y), rtol=1e-14, atol=1e-14
            )


@compiled
def test_csr_matvec_thread_count_invariant():
    from tiksolve._kernels import _core

    rng = np.random.default_rng(52)
    indptr, indices, data, shape = random_csr_arrays(rng, 64, 48)
    h = _core.make_csr_handle(indptr, indices, data, shape)
    x = rng.normal(size=48)
    base = _core.csr_matvec(h, x, 1)
    for nt in (2, 4, 8):
        assert np.array_equal(base, _core.csr_matvec(h, x, nt))


@compiled
def test_prox_power_agrees():
    from tiksolve._kernels import _core

    rng = np.random.default_rng(53)
    for p in (0.1, 0.3, 0.62, 0.9):
        vhat = rng.normal(scale=3.0, size=500)
        c = 10.0 ** rng.uniform(-3, 1, size=500)
        a = _core.prox_power_newton(vhat, c, p)
        b = pykernels.prox_power_newton(vhat, c, p)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


@compiled
def test_radon_entries_agree():
    from tiksolve._kernels import _core

    angles = np.arange(9) * (np.pi / 9)
    offsets = np.linspace(-1.0, 1.0, 21)
    ra, ca, va = _core.radon_entries(12, 10, angles, offsets)
    rb, cb, vb = pykernels.radon_entries(12, 10, angles, offsets)
    assert np.array_equal(ra, rb)
    assert np.array_equal(ca, cb)
    assert np.allclose(va, vb, rtol=1e-13, atol=1e-15)


def test_thread_cap_parsing(monkeypatch):
    monkeypatch.setenv("SSCD_THREADS", "7")
    assert _kernels._cap_from_env() == 7
    monkeypatch.setenv("SSCD_THREADS", "bogus")
    assert _kernels._cap_from_env() == 1
    monkeypatch.setenv("SSCD_THREADS", "-3")
    assert _kernels._cap_from_env() == 1
    monkeypatch.delenv("SSCD_THREADS")
    assert _kernels._cap_from_env() == 1


def test_set_thread_cap_roundtrip():
    old = _kernels.thread_cap()
    try:
        _kernels.set_thread_cap(5)
        assert _kernels.thread_cap() == 5
    finally:
        _kernels.set_thread_cap(old)


def test_python_backend_runs_everything():
    # the fallback alone must satisfy the same contracts
    rng = np.random.default_rng(54)
    indptr, indices, data, shape = random_csr_arrays(rng, 20, 15)
    h = pykernels.make_csr_handle(indptr, indices, data, shape)
    x = rng.normal(size=15)
    y = rng.normal(size=20)
    lhs = float(pykernels.csr_matvec(h, x) @ y)
    rhs = float(x @ pykernels.csr_rmatvec(h, y))
    assert abs(lhs - rhs) <= 1e-12 * (np.linalg.norm(x) * np.linalg.norm(y) + 1.0)
