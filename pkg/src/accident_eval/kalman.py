"""Constant-velocity Kalman filter over (cx, cy, s, r) box measurements.

State vector: [cx, cy, s, r, v_cx, v_cy, v_s] — box center, area, aspect
ratio, and the velocities of the first three (aspect ratio carries none).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sidecars import BoundingBox

AREA_EPS = 1e-6

# transition: cx += v_cx, cy += v_cy, s += v_s
F = np.eye(7)
F[0, 4] = F[1, 5] = F[2, 6] = 1.0
H = np.eye(4, 7)


@dataclass(frozen=True)
class KalmanParams:
    """Noise magnitudes; diagonals follow the usual tracking-by-detection choice."""

    initial_cov: tuple[float, ...] = (10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4)
    process_noise: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4)
    measurement_noise: tuple[float, ...] = (1.0, 1.0, 10.0, 10.0)


DEFAULT_PARAMS = KalmanParams()


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray            # shape (7,)
    covariance: np.ndarray      # shape (7, 7), symmetric PSD
    area_clamped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mean", np.array(self.mean, dtype=float))
        object.__setattr__(self, "covariance", np.array(self.covariance, dtype=float))

    def bbox(self) -> BoundingBox:
        return measurement_to_bbox(self.mean[:4])


def bbox_to_measurement(box: BoundingBox) -> np.ndarray:
    w, h = box.width, box.height
    cx, cy = box.center
    return np.array([cx, cy, w * h, w / h], dtype=float)


def measurement_to_bbox(z: np.ndarray) -> BoundingBox:
    cx, cy, s, r = float(z[0]), float(z[1]), float(z[2]), float(z[3])
    s = max(s, AREA_EPS)
    r = max(r, AREA_EPS)
    w = np.sqrt(s * r)
    h = s / w
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


def kalman_init(box: BoundingBox, params: KalmanParams = DEFAULT_PARAMS) -> KalmanState:
    """Fresh state at the measured box, zero velocities, diagonal covariance."""
    mean = np.zeros(7)
    mean[:4] = bbox_to_measurement(box)
    return KalmanState(mean=mean, covariance=np.diag(params.initial_cov))


def kalman_predict(state: KalmanState, params: KalmanParams = DEFAULT_PARAMS) -> KalmanState:
    mean = F @ state.mean
    clamped = False
    if mean[2] <= 0:
        mean[2] = AREA_EPS
        clamped = True
    cov = F @ state.covariance @ F.T + np.diag(params.process_noise)
    cov = (cov + cov.T) / 2.0
    return KalmanState(mean=mean, covariance=cov, area_clamped=clamped)


def kalman_update(
    state: KalmanState, box: BoundingBox, params: KalmanParams = DEFAULT_PARAMS
) -> KalmanState:
    z = bbox_to_measurement(box)
    R = np.diag(params.measurement_noise)
    S = H @ state.covariance @ H.T + R
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ValueError("singular innovation covariance; check noise configuration")
    K = state.covariance @ H.T @ np.linalg.inv(S)
    mean = state.mean + K @ (z - H @ state.mean)
    # Joseph form keeps the covariance PSD under roundoff
    ImKH = np.eye(7) - K @ H
    cov = ImKH @ state.covariance @ ImKH.T + K @ R @ K.T
    cov = (cov + cov.T) / 2.0
    return KalmanState(mean=mean, covariance=cov)
