import numpy as np
import pytest

from ztrack import kalman
from ztrack.geometry import BoundingBox


def _box(cx, cy, w, h):
    return BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def _is_spd(m):
    if not np.allclose(m, m.T, rtol=0, atol=1e-9 * max(1.0, np.abs(m).max())):
        return False
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def test_noise_constants():
    assert kalman.STD_WEIGHT_POSITION == 1 / 20
    assert kalman.STD_WEIGHT_VELOCITY == 1 / 160


def test_initiate_mean():
    s = kalman.initiate(BoundingBox(0, 0, 10, 20))
    np.testing.assert_array_equal(s.mean, [5, 10, 0.5, 20, 0, 0, 0, 0])
    assert _is_spd(s.covariance)


def test_predict_from_rest_keeps_position():
    s0 = kalman.initiate(BoundingBox(3, 4, 30, 44))
    s1 = kalman.predict(s0)
    np.testing.assert_allclose(s1.mean[:4], s0.mean[:4], atol=1e-9)
    assert np.trace(s1.covariance) > np.trace(s0.covariance)


def test_update_with_predicted_box_is_fixed_point():
    s = kalman.predict(kalman.initiate(BoundingBox(3, 4, 30, 44)))
    post = kalman.update(s, BoundingBox(*s.to_xyxy()))
    np.testing.assert_allclose(post.mean[:4], s.mean[:4], atol=1e-9)


def test_update_gain_matches_scalar_filter():
    # Box centred at cx=0 with h=20: wp*h = 1, wv*h = 0.125.
    # prior var 2^2 + 1.25^2 (velocity coupling) + 1^2 (process) = 6.5625, meas var 1.
    s = kalman.predict(kalman.initiate(_box(0, 0, 10, 20)))
    post = kalman.update(s, _box(10, 0, 10, 20))
    expected = 10 * 6.5625 / 7.5625
    assert post.mean[0] == pytest.approx(expected, rel=1e-12)
    assert 0 < post.mean[0] < 10


def test_update_shrinks_observed_block():
    s = kalman.predict(kalman.initiate(_box(50, 50, 20, 40)))
    post = kalman.update(s, _box(55, 48, 22, 38))
    assert np.trace(post.covariance[:4, :4]) < np.trace(s.covariance[:4, :4])


def test_constant_velocity_is_learned():
    s = kalman.initiate(_box(0, 0, 10, 20))
    for cx in (5, 10):
        s = kalman.update(kalman.predict(s), _box(cx, 0, 10, 20))
    assert s.mean[4] > 0
    nxt = kalman.predict(s)
    assert nxt.mean[0] > s.mean[0]


def test_deterministic_bitwise():
    a = kalman.update(kalman.predict(kalman.initiate(_box(1, 2, 3, 4))), _box(2, 2, 3, 4))
    b = kalman.update(kalman.predict(kalman.initiate(_box(1, 2, 3, 4))), _box(2, 2, 3, 4))
    assert a.mean.tobytes() == b.mean.tobytes()
    assert a.covariance.tobytes() == b.covariance.tobytes()


def test_random_interleaving_stays_spd():
    rng = np.random.default_rng(11)
    for _ in range(5):
        s = kalman.initiate(_box(*rng.uniform(0, 200, 2), *rng.uniform(5, 60, 2)))
        for _ in range(120):
            if rng.random() < 0.5:
                s = kalman.predict(s)
            else:
                s = kalman.update(s, _box(*rng.uniform(0, 200, 2), *rng.uniform(5, 60, 2)))
            assert _is_spd(s.covariance)


@pytest.mark.parametrize("k", [1, 5, 50])
def test_repeated_updates_follow_information_averaging(k):
    # Without predict there is no process noise: the x variance follows
    # 1/P_k = 1/P_0 + k/R with P_0 = 4R, so the residual is offset / (1 + 4k).
    s = kalman.initiate(_box(0, 0, 10, 20))
    for _ in range(k):
        s = kalman.update(s, _box(10, 0, 10, 20))
    assert 10 - s.mean[0] == pytest.approx(10 / (1 + 4 * k), rel=1e-9)
