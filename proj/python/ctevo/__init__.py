"""Continuous-time stereo event-camera visual odometry."""

from ._core import (
    Error,
    StereoCamera,
    adjoint,
    default_config_text,
    evaluate,
    exp_map,
    hat,
    interpolate,
    left_jacobian,
    left_jacobian_inv,
    log_map,
    run,
    simulate,
    vee,
)

__all__ = [
    "Error",
    "StereoCamera",
    "adjoint",
    "default_config_text",
    "evaluate",
    "exp_map",
    "hat",
    "interpolate",
    "left_jacobian",
    "left_jacobian_inv",
    "log_map",
    "run",
    "simulate",
    "vee",
]
