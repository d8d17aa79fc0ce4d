import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stmseg.decomposition import (DecompositionParams, decompose, decompose_linear,
                                  lowpass_meyer, ltv_reduction, meyer_lowpass_response,
                                  soft_threshold_weight)
from stmseg.errors import InvalidParameterError


def ramp_and_board(n=64, amp=10.0):
    y, x = np.mgrid[0:n, 0:n].astype(float)
    ramp = 2.0 * x
    board = amp * (-1.0) ** (x + y)
    return ramp, board


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        DecompositionParams(sigma=0)
    with pytest.raises(InvalidParameterError):
        DecompositionParams(a1=0.6, a2=0.5)


def test_meyer_response_values():
    h = meyer_lowpass_response((8, 8), 1.0)
    assert h[0, 0] == 1.0
    assert h[0, 4] == pytest.approx(1 / (1 + np.pi**4))


def test_lowpass_keeps_constants_and_linear_ramps():
    assert np.allclose(lowpass_meyer(np.full((10, 12), 4.0), 3.0), 4.0)
    _, board = ramp_and_board(32)
    # A Nyquist-rate board is almost removed; the mirror seams leak a little.
    assert np.max(np.abs(lowpass_meyer(board, 3.0))) < 0.02 * 10


def test_soft_threshold_weight():
    assert soft_threshold_weight(0.1) == 0.0
    assert soft_threshold_weight(0.375) == pytest.approx(0.5)
    assert soft_threshold_weight(0.9) == 1.0
    w = soft_threshold_weight(np.array([0.25, 0.5]))
    assert np.array_equal(w, [0.0, 1.0])
    with pytest.raises(InvalidParameterError):
        soft_threshold_weight(0.3, 0.5, 0.5)


def test_ltv_reduction_texture_vs_cartoon():
    ramp, board = ramp_and_board()
    params = DecompositionParams()
    assert ltv_reduction(board, params)[8:-8, 8:-8].min() > 0.99
    assert ltv_reduction(ramp, params)[8:-8, 8:-8].max() < 0.25
    assert np.all(ltv_reduction(np.zeros((8, 8)), params) == 0)


def test_decompose_splits_board_from_ramp():
    ramp, board = ramp_and_board()
    d = decompose(ramp + board)
    captured = 1 - np.sum((d.texture - board) ** 2) / np.sum(board**2)
    assert captured >= 0.9
    assert np.linalg.norm(d.cartoon - ramp) / np.linalg.norm(ramp) <= 0.1


def test_decompose_keeps_edges_sharper_than_linear_filter():
    img = np.zeros((40, 40))
    img[:, 20:] = 100.0
    step_nl = np.abs(np.diff(decompose(img).cartoon, axis=1)).max()
    step_lin = np.abs(np.diff(decompose_linear(img).cartoon, axis=1)).max()
    assert step_nl > 2 * step_lin


def test_decompose_constant_image():
    d = decompose(np.full((16, 16), 42.0))
    assert np.array_equal(d.cartoon, np.full((16, 16), 42.0))
    assert np.array_equal(d.texture, np.zeros((16, 16)))


def test_decompose_is_deterministic():
    rng = np.random.default_rng(5)
    img = np.round(rng.random((32, 32)) * 255)
    a, b = decompose(img), decompose(img)
    assert np.array_equal(a.cartoon, b.cartoon) and np.array_equal(a.texture, b.texture)


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(2, 24), st.integers(2, 24)),
              elements=st.integers(0, 65535)),
       st.sampled_from([1.0, 2.0, 3.0]))
def test_additivity_is_exact_on_integer_images(img, sigma):
    f = img.astype(np.float64)
    d = decompose(f, DecompositionParams(sigma=sigma))
    assert np.array_equal(d.cartoon + d.texture, f)


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(2, 24), st.integers(2, 24)),
              elements=st.integers(0, 255 * 256)))
def test_additivity_is_exact_on_quarter_byte_grid(img):
    f = img / 256.0
    d = decompose(f)
    assert np.array_equal(d.cartoon + d.texture, f)


def test_weights_reduce_to_linear_filter_on_pure_texture():
    _, board = ramp_and_board(32)
    assert np.allclose(decompose(board).cartoon[4:-4, 4:-4],
                       decompose_linear(board).cartoon[4:-4, 4:-4])
