"""Numpy neural engine for the patch classifier."""

from .adam import AdamState, adam_step
from .config import SMALL_CONFIG, NetworkConfig, param_count, param_shapes
from .encoding import assignment_weights, encoding_forward
from .layers import conv2d, cross_entropy_loss, fire_forward, linear, maxpool2, relu, softmax
from .network import (
    backward,
    cast_params,
    forward,
    init_params,
    loss_and_grads,
    network_forward,
    patch_to_tensor,
    predict_proba,
)
from .weights import load_weights, read_tensors, save_weights

__all__ = [
    "AdamState",
    "NetworkConfig",
    "SMALL_CONFIG",
    "adam_step",
    "assignment_weights",
    "backward",
    "cast_params",
    "conv2d",
    "cross_entropy_loss",
    "encoding_forward",
    "fire_forward",
    "forward",
    "init_params",
    "linear",
    "load_weights",
    "loss_and_grads",
    "maxpool2",
    "network_forward",
    "param_count",
    "param_shapes",
    "patch_to_tensor",
    "predict_proba",
    "read_tensors",
    "relu",
    "save_weights",
    "softmax",
]
