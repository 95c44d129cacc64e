import math

import numpy as np
import pytest

import qatm


def test_one_to_one_closed_form():
    rho = np.array([[1.0, 0.0], [0.0, 0.0]]).reshape(1, 2, 1, 2)
    lts, lst, q = qatm.likelihoods(rho, 28.4)
    expect = 1.0 / (1.0 + math.exp(-28.4))
    assert q.shape == (1, 2, 1, 2)
    assert q[0, 0, 0, 0] == pytest.approx(expect * expect, rel=1e-12)
    assert np.allclose(lts.sum(axis=(0, 1)), 1.0)
    assert np.allclose(lst.sum(axis=(2, 3)), 1.0)


def test_uniform_scores():
    _, _, q = qatm.likelihoods(np.full((2, 2, 2, 2), 0.4), 50.0)
    assert np.all(q == 1.0 / 16)
    s_map, t_map = qatm.quality_maps(np.full((2, 2, 2, 2), 0.4))
    assert s_map.shape == (2, 2) and t_map.shape == (2, 2)


def test_softmax_and_max_against_numpy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 4, 5))
    y = qatm.grouped_softmax(x, [1, 2], 3.0)
    e = np.exp(3.0 * (x - x.max(axis=(1, 2), keepdims=True)))
    assert np.allclose(y, e / e.sum(axis=(1, 2), keepdims=True), atol=1e-14)
    assert np.array_equal(qatm.grouped_max(x, [0]), x.max(axis=0))


def test_gradients_against_finite_differences():
    rng = np.random.default_rng(1)
    rho = rng.uniform(-1, 1, size=(2, 2, 3, 2))
    up = rng.uniform(-1, 1, size=rho.shape)
    alpha, h = 5.0, 1e-5

    def f(r, a):
        return (up * qatm.likelihoods(r, a)[2]).sum()

    ga = qatm.grad_alpha(rho, alpha)
    fd_a = (qatm.likelihoods(rho, alpha + h)[2] - qatm.likelihoods(rho, alpha - h)[2]) / (2 * h)
    assert np.max(np.abs(ga - fd_a)) < 1e-6 * max(1.0, np.abs(fd_a).max())

    gr = qatm.grad_rho(rho, alpha, up)
    fd_r = np.zeros_like(rho)
    for idx in np.ndindex(rho.shape):
        p, m = rho.copy(), rho.copy()
        p[idx] += h
        m[idx] -= h
        fd_r[idx] = (f(p, alpha) - f(m, alpha)) / (2 * h)
    assert np.max(np.abs(gr - fd_r)) < 1e-6 * max(1.0, np.abs(fd_r).max())


def test_match_recovers_crop():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, size=(40, 48), dtype=np.uint8)
    crop = img[11:21, 7:19]
    t = qatm.extract_raw_patches(crop, 3)
    s = qatm.extract_raw_patches(img, 3)
    for method in ("qatm", "ssd", "ncc", "bupm"):
        r = qatm.match(t, s, method=method)
        assert r["box_px"] == (7.0, 11.0, 12.0, 10.0), method
    r = qatm.match(t, s)
    assert r["response"].shape == (38, 46)
    assert r["template_map"].shape == (8, 10)


def test_feature_file_round_trip(tmp_path):
    data = np.random.default_rng(3).normal(size=(3, 5, 7)).astype(np.float32)
    fm = qatm.FeatureMap(data, stride_px=4)
    path = tmp_path / "x.ftm"
    qatm.save_feature_file(fm, path)
    assert path.stat().st_size == 32 + data.size * 4
    back = qatm.load_feature_file(path)
    assert back == fm
    assert np.array_equal(back.to_numpy(), data)
    assert (back.height, back.width, back.dim, back.stride_px) == (3, 5, 7, 4)

    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(qatm.FormatError):
        qatm.load_feature_file(path)
    with pytest.raises(qatm.IoError):
        qatm.load_feature_file(tmp_path / "missing.ftm")


def test_errors_share_a_base():
    with pytest.raises(qatm.QatmError):
        qatm.likelihoods(np.zeros((1, 1, 1, 1)), -1.0)
    with pytest.raises(qatm.InvalidArgument):
        qatm.match(qatm.FeatureMap(np.zeros((1, 1, 2), np.float32)), qatm.FeatureMap(np.zeros((1, 1, 2), np.float32)), method="sad")
    with pytest.raises(qatm.ShapeMismatch):
        qatm.grad_rho(np.zeros((1, 1, 1, 2)), 1.0, np.zeros((1, 1, 2, 1)))


def test_calibration_and_metrics():
    alpha_star, curve = qatm.calibrate_alpha(n_patches=200, n_trials=20, alpha_grid=[1.0, 5.0, 10.0, 20.0])
    assert curve.shape == (4, 2)
    assert alpha_star in curve[:, 0]
    assert qatm.iou((0, 0, 2, 2), (1, 1, 2, 2)) == pytest.approx(1 / 7)
    assert qatm.response_roc([0.9, 0.8], [0.85, 0.1]) == pytest.approx(0.75)


def test_best_window_and_workers():
    m = np.zeros((3, 3))
    m[1, 1] = 1.0
    assert qatm.best_window(m, 1, 1) == (1, 1, 1.0)
    old = qatm.worker_count()
    qatm.set_worker_count(2)
    assert qatm.worker_count() == 2
    qatm.set_worker_count(old)
