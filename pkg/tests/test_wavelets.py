import numpy as np
import pytest

from tiksolve.wavelets import (
    HaarSynthesisOperator,
    haar_forward,
    haar_forward_2d,
    haar_inverse,
    haar_inverse_2d,
)


def test_constant_vector_has_zero_details():
    x = np.full(16, 3.7)
    c = haar_forward(x, 1)
    assert np.allclose(c[8:], 0.0, atol=1e-14)
    assert np.allclose(c[:8], 3.7 * np.sqrt(2.0))


def test_isometry():
    rng = np.random.default_rng(1)
    for levels in (1, 2, 3):
        x = rng.normal(size=64)
        c = haar_forward(x, levels)
        assert abs(np.linalg.norm(c) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)


def test_roundtrip():
    rng = np.random.default_rng(2)
    x = rng.normal(size=64)
    for levels in (1, 2, 3, 4):
        back = haar_inverse(haar_forward(x, levels), levels)
        assert np.max(np.abs(back - x)) <= 1e-12


def test_bad_length_raises():
    with pytest.raises(ValueError):
        haar_forward(np.zeros(12), 3)
    with pytest.raises(ValueError):
        haar_inverse(np.zeros(12), 3)
    with pytest.raises(ValueError):
        haar_forward(np.zeros(8), 0)


def test_2d_roundtrip_and_isometry():
    rng = np.random.default_rng(3)
    img = rng.normal(size=(16, 32))
    for levels in (1, 2, 3):
        c = haar_forward_2d(img, levels)
        assert abs(np.linalg.norm(c) - np.linalg.norm(img)) <= 1e-12 * np.linalg.norm(img)
        back = haar_inverse_2d(c, levels)
        assert np.max(np.abs(back - img)) <= 1e-12


def test_2d_constant_image_is_single_coefficient():
    img = np.full((8, 8), 2.0)
    c = haar_forward_2d(img, 3)
    assert c[0, 0] == pytest.approx(16.0)  # 2 * sqrt(64)
    c[0, 0] = 0.0
    assert np.allclose(c, 0.0, atol=1e-13)


def test_synthesis_operator_adjoint_and_inverse():
    rng = np.random.default_rng(4)
    op = HaarSynthesisOperator(16, 8, 2)
    for _ in range(50):
        v = rng.normal(size=op.shape[1])
        x = rng.normal(size=op.shape[0])
        lhs = float(op.apply(v) @ x)
        rhs = float(v @ op.apply_transpose(x))
        assert abs(lhs - rhs) <= 1e-10 * (np.linalg.norm(v) * np.linalg.norm(x) + 1.0)
    v = rng.normal(size=op.shape[1])
    assert np.max(np.abs(op.apply_transpose(op.apply(v)) - v)) <= 1e-12
