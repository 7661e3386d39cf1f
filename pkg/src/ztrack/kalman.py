"""Constant-velocity Kalman filter over ``(cx, cy, aspect, height)`` box state.

The 8-dimensional state is ``(cx, cy, a, h, vcx, vcy, va, vh)`` where ``a`` is
width / height and the velocities are per-slice rates. Only the first four
components are observed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ztrack.geometry import BoundingBox

STD_WEIGHT_POSITION = 1.0 / 20
STD_WEIGHT_VELOCITY = 1.0 / 160

NDIM = 4

_MOTION = np.eye(2 * NDIM)
_MOTION[:NDIM, NDIM:] = np.eye(NDIM)
_OBSERVE = np.eye(NDIM, 2 * NDIM)


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def to_xyxy(self) -> tuple[float, float, float, float]:
        """Corner-form box of the current mean (may be degenerate)."""
        cx, cy, a, h = (float(v) for v in self.mean[:NDIM])
        w = a * h
        return (cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


def box_to_measurement(box: BoundingBox) -> np.ndarray:
    cx, cy = box.center
    return np.array([cx, cy, box.width / box.height, box.height], dtype=float)


def initiate(box: BoundingBox) -> KalmanState:
    """Start a track at ``box`` with zero velocity."""
    measurement = box_to_measurement(box)
    mean = np.r_[measurement, np.zeros(NDIM)]
    h = measurement[3]
    std = [
        2 * STD_WEIGHT_POSITION * h,
        2 * STD_WEIGHT_POSITION * h,
        1e-2,
        2 * STD_WEIGHT_POSITION * h,
        10 * STD_WEIGHT_VELOCITY * h,
        10 * STD_WEIGHT_VELOCITY * h,
        1e-5,
        10 * STD_WEIGHT_VELOCITY * h,
    ]
    return KalmanState(mean, np.diag(np.square(std)))


def predict(state: KalmanState) -> KalmanState:
    """Advance one slice: position += velocity, covariance inflated by process noise."""
    h = state.mean[3]
    std_pos = [STD_WEIGHT_POSITION * h, STD_WEIGHT_POSITION * h, 1e-2, STD_WEIGHT_POSITION * h]
    std_vel = [STD_WEIGHT_VELOCITY * h, STD_WEIGHT_VELOCITY * h, 1e-5, STD_WEIGHT_VELOCITY * h]
    motion_cov = np.diag(np.square(np.r_[std_pos, std_vel]))

    mean = _MOTION @ state.mean
    covariance = _MOTION @ state.covariance @ _MOTION.T + motion_cov
    return KalmanState(mean, _symmetrize(covariance))


def project(state: KalmanState) -> tuple[np.ndarray, np.ndarray]:
    """Observed mean and innovation covariance (state uncertainty + measurement noise)."""
    h = state.mean[3]
    std = [STD_WEIGHT_POSITION * h, STD_WEIGHT_POSITION * h, 1e-1, STD_WEIGHT_POSITION * h]
    noise = np.diag(np.square(std))
    mean = _OBSERVE @ state.mean
    covariance = _OBSERVE @ state.covariance @ _OBSERVE.T + noise
    return mean, covariance


def update(state: KalmanState, measurement: BoundingBox) -> KalmanState:
    """Incorporate an associated box measurement."""
    z = box_to_measurement(measurement)
    projected_mean, projected_cov = project(state)
    noise = projected_cov - _OBSERVE @ state.covariance @ _OBSERVE.T

    chol = scipy.linalg.cho_factor(projected_cov, lower=True, check_finite=False)
    gain = scipy.linalg.cho_solve(chol, (state.covariance @ _OBSERVE.T).T, check_finite=False).T

    innovation = z - projected_mean
    mean = state.mean + gain @ innovation
    # Joseph form keeps the covariance positive-definite over long runs.
    i_kh = np.eye(2 * NDIM) - gain @ _OBSERVE
    covariance = i_kh @ state.covariance @ i_kh.T + gain @ noise @ gain.T
    return KalmanState(mean, _symmetrize(covariance))


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0
