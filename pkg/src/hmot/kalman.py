"""Constant-velocity Kalman filtering for 2D (image) and 3D (world) tracks.

2D noise follows the height-proportional convention (position/size std =
w_p * h, velocity std = w_v * h), which keeps behavior scale-invariant
across near and far objects. 3D noise is a fixed diagonal in metric units.
The emitted box of an updated track is the raw observation; the filtered
mean only drives prediction and association.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericFailureError
from .types import (
    DIM_OBS_2D,
    DIM_OBS_3D,
    DIM_STATE_2D,
    DIM_STATE_3D,
    IX_THETA_3D,
    Detection,
    State,
    State2D,
    State3D,
    normalize_heading,
    observation_2d,
    observation_3d,
)


def wrap_innovation(delta: float) -> float:
    """Wrap an angle difference into (-pi, pi]."""
    wrapped = normalize_heading(delta)
    if wrapped == -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class Noise2D:
    """Height-proportional noise weights for the image-space filter."""

    w_p: float = 1.0 / 20.0    # position/size std per unit box height
    w_v: float = 1.0 / 160.0   # velocity std per unit box height
    aspect_proc_std: float = 1e-2
    aspect_vel_proc_std: float = 1e-5
    aspect_meas_std: float = 1e-1
    init_pos_factor: float = 2.0
    init_vel_var_ratio: float = 10.0


@dataclass(frozen=True)
class Noise3D:
    """Fixed diagonal noise (meters / radians) for the world-space filter."""

    pos_proc_std: float = 1.0
    size_proc_std: float = 0.1
    heading_proc_std: float = 0.1
    vel_proc_std: float = 0.5
    pos_meas_std: float = 0.5
    size_meas_std: float = 0.1
    heading_meas_std: float = 0.1
    init_vel_var_ratio: float = 10.0


class MotionModel2D:
    """State (cx, cy, gamma, h, vcx, vcy, vgamma, vh); observes the first 4."""

    dim_state = DIM_STATE_2D
    dim_obs = DIM_OBS_2D
    heading_index: int | None = None
    state_cls = State2D

    def __init__(self, noise: Noise2D | None = None):
        self.noise = noise or Noise2D()
        self.F = np.eye(self.dim_state)
        for i in range(self.dim_obs):
            self.F[i, self.dim_obs + i] = 1.0
        self.H = np.eye(self.dim_obs, self.dim_state)

    def observation(self, det: Detection) -> np.ndarray:
        return observation_2d(det.box)

    def process_noise(self, mean: np.ndarray) -> np.ndarray:
        h = mean[3]
        n = self.noise
        std = [n.w_p * h, n.w_p * h, n.aspect_proc_std, n.w_p * h,
               n.w_v * h, n.w_v * h, n.aspect_vel_proc_std, n.w_v * h]
        return np.diag(np.square(std))

    def measurement_noise(self, mean: np.ndarray) -> np.ndarray:
        h = mean[3]
        n = self.noise
        std = [n.w_p * h, n.w_p * h, n.aspect_meas_std, n.w_p * h]
        return np.diag(np.square(std))

    def initial_state(self, obs: np.ndarray) -> State2D:
        n = self.noise
        h = obs[3]
        mean = np.concatenate([obs, np.zeros(self.dim_obs)])
        pos_var = (n.init_pos_factor * n.w_p * h) ** 2
        aspect_var = n.aspect_proc_std ** 2
        variances = np.array([pos_var, pos_var, aspect_var, pos_var])
        cov = np.diag(np.concatenate([variances, n.init_vel_var_ratio * variances]))
        return State2D(mean, cov)

    def _check_extents(self, mean: np.ndarray) -> bool:
        return mean[2] > 0 and mean[3] > 0


class MotionModel3D:
    """State (cx, cy, cz, h, w, l, theta, vcx, vcy, vcz); observes the first 7."""

    dim_state = DIM_STATE_3D
    dim_obs = DIM_OBS_3D
    heading_index = IX_THETA_3D
    state_cls = State3D

    def __init__(self, noise: Noise3D | None = None):
        self.noise = noise or Noise3D()
        self.F = np.eye(self.dim_state)
        for i in range(3):
            self.F[i, 7 + i] = 1.0
        self.H = np.eye(self.dim_obs, self.dim_state)
        n = self.noise
        self._Q = np.diag(np.square([
            n.pos_proc_std, n.pos_proc_std, n.pos_proc_std,
            n.size_proc_std, n.size_proc_std, n.size_proc_std,
            n.heading_proc_std,
            n.vel_proc_std, n.vel_proc_std, n.vel_proc_std,
        ]))
        self._R = np.diag(np.square([
            n.pos_meas_std, n.pos_meas_std, n.pos_meas_std,
            n.size_meas_std, n.size_meas_std, n.size_meas_std,
            n.heading_meas_std,
        ]))

    def observation(self, det: Detection) -> np.ndarray:
        return observation_3d(det.box)

    def process_noise(self, mean: np.ndarray) -> np.ndarray:
        return self._Q

    def measurement_noise(self, mean: np.ndarray) -> np.ndarray:
        return self._R

    def initial_state(self, obs: np.ndarray) -> State3D:
        n = self.noise
        mean = np.concatenate([obs, np.zeros(3)])
        pos_var = n.pos_meas_std ** 2
        variances = np.concatenate([
            np.diag(self._R),
            np.full(3, n.init_vel_var_ratio * pos_var),
        ])
        return State3D(mean, np.diag(variances))

    def _check_extents(self, mean: np.ndarray) -> bool:
        return bool(np.all(mean[3:6] > 0))


MotionModel = MotionModel2D | MotionModel3D


def init_track_state(det: Detection, model: MotionModel) -> State:
    """State for a freshly created track: observation copied, zero velocity."""
    return model.initial_state(model.observation(det))


def _ensure_valid(mean: np.ndarray, cov: np.ndarray, model, what: str) -> None:
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericFailureError(f"{what} produced non-finite values")
    if not model._check_extents(mean):
        raise NumericFailureError(f"{what} produced non-positive box extents")


def predict(state: State, model: MotionModel) -> State:
    """One constant-velocity step: mean' = F mean, cov' = F cov F^T + Q."""
    mean = model.F @ state.mean
    cov = model.F @ state.cov @ model.F.T + model.process_noise(state.mean)
    cov = 0.5 * (cov + cov.T)
    if model.heading_index is not None:
        mean[model.heading_index] = normalize_heading(mean[model.heading_index])
    _ensure_valid(mean, cov, model, "predict")
    return model.state_cls(mean, cov)


def _innovation(state: State, obs: np.ndarray, model: MotionModel) -> np.ndarray:
    """Observation-space innovation, heading ambiguity resolved.

    The heading component is wrapped into (-pi, pi]; if it still exceeds
    pi/2 in magnitude the detector likely reported the box flipped by pi,
    so the innovation is shifted by pi (and re-wrapped) before use.
    """
    y = obs - model.H @ state.mean
    hi = model.heading_index
    if hi is not None:
        delta = wrap_innovation(y[hi])
        if abs(delta) > math.pi / 2.0:
            delta = wrap_innovation(delta + math.pi)
        y[hi] = delta
    return y


def _innovation_cov(state: State, model: MotionModel) -> np.ndarray:
    return model.H @ state.cov @ model.H.T + model.measurement_noise(state.mean)


def update(state: State, det: Detection, model: MotionModel) -> State:
    """Standard Kalman measurement update with the detection's observation."""
    obs = model.observation(det)
    y = _innovation(state, obs, model)
    S = _innovation_cov(state, model)
    try:
        chol = scipy.linalg.cho_factor(S, lower=True, check_finite=False)
        gain = scipy.linalg.cho_solve(chol, (state.cov @ model.H.T).T, check_finite=False).T
    except scipy.linalg.LinAlgError as exc:
        raise NumericFailureError(f"singular innovation covariance: {exc}") from exc
    mean = state.mean + gain @ y
    cov = state.cov - gain @ S @ gain.T
    cov = 0.5 * (cov + cov.T)
    if model.heading_index is not None:
        mean[model.heading_index] = normalize_heading(mean[model.heading_index])
    _ensure_valid(mean, cov, model, "update")
    return model.state_cls(mean, cov)


def mahalanobis_sq(state: State, det: Detection, model: MotionModel) -> float:
    """Squared Mahalanobis distance of the observation under the innovation
    covariance: y^T S^-1 y over the observed components."""
    y = _innovation(state, model.observation(det), model)
    S = _innovation_cov(state, model)
    try:
        chol = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"singular innovation covariance: {exc}") from exc
    z = scipy.linalg.solve_triangular(chol, y, lower=True, check_finite=False)
    return float(z @ z)
