import math

import numpy as np
import pytest

from stmseg.empirical_curvelet import CoefficientSet, modified_ect
from stmseg.errors import InvalidInputError, InvalidParameterError
from stmseg.synth import stripes
from stmseg.texture_features import FeatureMatrix, feature_matrix, local_energy, window_radius


def brute_energy(band, r):
    pad = np.pad(band, r, mode="symmetric")
    out = np.empty_like(band)
    for i in range(band.shape[0]):
        for j in range(band.shape[1]):
            win = pad[i:i + 2 * r + 1, j:j + 2 * r + 1]
            out[i, j] = np.sqrt(np.sum(win**2)) / (2 * r + 1) ** 2
    return out


def test_window_radius():
    assert window_radius(math.pi) == 1
    assert window_radius(math.pi / 4) == 4
    assert window_radius(1.0) == 4
    assert window_radius(10.0) == 1
    with pytest.raises(InvalidParameterError):
        window_radius(0.0)


def test_local_energy_examples():
    assert np.allclose(local_energy(np.full((9, 9), 2.0), 2), 2.0 / 5)
    assert np.all(local_energy(np.zeros((6, 6)), 1) == 0)
    imp = np.zeros((9, 9))
    imp[4, 4] = 1.0
    e = local_energy(imp, 1)
    expected = np.zeros((9, 9))
    expected[3:6, 3:6] = 1 / 9
    assert np.allclose(e, expected, atol=1e-12)
    with pytest.raises(InvalidParameterError):
        local_energy(imp, 0)


def test_local_energy_matches_bruteforce():
    rng = np.random.default_rng(0)
    band = rng.normal(size=(13, 10))
    for r in (1, 2, 4):
        assert np.max(np.abs(local_energy(band, r) - brute_energy(band, r))) <= 1e-10


def _coeffs_for(scene):
    part, bank, coeffs = modified_ect(scene.image)
    return part, coeffs


def test_feature_matrix_layout():
    scene = stripes(64)
    part, coeffs = _coeffs_for(scene)
    feats = feature_matrix(coeffs, part)
    assert feats.data.shape == (64 * 64, len(part.wedges()))
    assert feats.columns == tuple(part.wedges())
    assert feats.radii == tuple(window_radius(part.scales[m][n]) for m, n in part.wedges())
    with_lp = feature_matrix(coeffs, part, include_approx=True)
    assert with_lp.columns[-1] == "approx" and with_lp.data.shape[1] == feats.data.shape[1] + 1


def test_zero_details_give_zero_features():
    part, coeffs = _coeffs_for(stripes(64))
    zero = CoefficientSet(coeffs.approx, tuple(np.zeros_like(d) for d in coeffs.details),
                          coeffs.labels)
    assert np.all(feature_matrix(zero, part).data == 0)
    with pytest.raises(InvalidInputError):
        feature_matrix(CoefficientSet(coeffs.approx, coeffs.details, ()), part)


def test_features_separate_the_two_stripe_regions():
    scene = stripes(128)
    part, coeffs = _coeffs_for(scene)
    D = feature_matrix(coeffs, part).data
    truth = scene.texture_truth.ravel()
    rng = np.random.default_rng(1)
    left, right = np.flatnonzero(truth == 0), np.flatnonzero(truth == 1)
    a, b = rng.choice(left, 500), rng.choice(left, 500)
    c = rng.choice(right, 500)
    d_same = np.abs(D[a] - D[b]).sum(axis=1)
    d_other = np.abs(D[a] - D[c]).sum(axis=1)
    assert np.mean(d_same < d_other) >= 0.95


def test_feature_file_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    fm = FeatureMatrix(rng.normal(size=(12, 3)), ((0, 0), (0, 1), "approx"), (4, 2, 4), (3, 4))
    fm.save(str(tmp_path / "feat"))
    back = FeatureMatrix.load(str(tmp_path / "feat"))
    assert np.array_equal(back.data, fm.data)
    assert back.columns == fm.columns and back.radii == fm.radii and back.shape == fm.shape
