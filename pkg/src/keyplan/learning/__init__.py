"""Networks, training and environment encoding."""

from .cvae import CvaeModel, TrainConfig, XTransform, elbo_loss, kl_standard_gaussian, sample_cvae, train_cvae
from .encoding import EnvEncoding, condition_vector, encode_environment
from .keypoint_net import KeypointNet, predict_keypoints, train_keypoint_net, unroll_sequence
from .mlp import Adam, Mlp, mlp_forward, mlp_gradients

__all__ = [
    "Adam", "CvaeModel", "EnvEncoding", "KeypointNet", "Mlp", "TrainConfig", "XTransform",
    "condition_vector", "elbo_loss", "encode_environment", "kl_standard_gaussian", "mlp_forward",
    "mlp_gradients", "predict_keypoints", "sample_cvae", "train_cvae", "train_keypoint_net",
    "unroll_sequence",
]
