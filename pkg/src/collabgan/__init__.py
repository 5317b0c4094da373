"""Collaborative GAN sampling on a synthetic 2-D mixture benchmark.

A small numpy library that trains MLP GANs on an imbalanced 8-Gaussian
mixture and post-processes the trained pair: gradient-based sample
refinement at a chosen generator layer, discriminator shaping on the
refined distribution, accept-reject samplers (rejection / MH independence
chains), and discriminator optimality diagnostics (Brier, Z, ECE).
"""

from .nn import (
    AdamState,
    ContractViolation,
    ForwardTrace,
    MlpLayer,
    MlpModel,
    adam_step,
    glorot_init,
    input_gradient,
    mlp_backward,
    mlp_forward,
    partial_forward,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ContractViolation",
    "ForwardTrace",
    "MlpLayer",
    "MlpModel",
    "adam_step",
    "glorot_init",
    "input_gradient",
    "mlp_backward",
    "mlp_forward",
    "partial_forward",
    "__version__",
]
