"""Numerical reference for the residual bottleneck adapter.

The block is ``y = x + up(act(down(x)))``: a down-projection to a small
bottleneck, an activation, an up-projection back to the model width, and
a residual connection. The up-projection (weights and bias) is
initialized to exactly zero, so a freshly initialized adapter is the
exact identity and training starts from the backbone's behavior.

This is a single-vector verification implementation, not a training
kernel: forward, analytic backward, and trainable-parameter accounting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erf

DEFAULT_INIT_SCALE = 1e-3


class Activation(Enum):
    RELU = "relu"
    GELU = "gelu"


@dataclass(frozen=True)
class AdapterConfig:
    """Shape of the adapter stack.

    ``num_layers`` counts backbone layers that each receive one adapter;
    the default 48 covers a 24-layer encoder plus a 24-layer decoder of
    width 1024.
    """

    model_dim: int = 1024
    bottleneck_dim: int = 64
    num_layers: int = 48
    activation: Activation = Activation.RELU

    def __post_init__(self) -> None:
        if self.model_dim < 1 or self.bottleneck_dim < 1:
            raise ValueError("model_dim and bottleneck_dim must be >= 1")
        if self.num_layers < 0:
            raise ValueError("num_layers must be >= 0")


@dataclass(frozen=True, eq=False)
class AdapterParams:
    """Weights and biases of one adapter block (float64 arrays)."""

    down_weights: np.ndarray  # (model_dim, bottleneck_dim)
    down_bias: np.ndarray     # (bottleneck_dim,)
    up_weights: np.ndarray    # (bottleneck_dim, model_dim)
    up_bias: np.ndarray       # (model_dim,)

    def __post_init__(self) -> None:
        d, b = self.down_weights.shape
        if self.down_bias.shape != (b,) or self.up_weights.shape != (b, d) \
                or self.up_bias.shape != (d,):
            raise ValueError("inconsistent parameter shapes")
        for a in (self.down_weights, self.down_bias, self.up_weights, self.up_bias):
            if not np.all(np.isfinite(a)):
                raise ValueError("parameters must be finite")

    @property
    def model_dim(self) -> int:
        return self.down_weights.shape[0]

    @property
    def bottleneck_dim(self) -> int:
        return self.down_weights.shape[1]

    def to_dict(self) -> dict:
        """Flat JSON-ready dict (matrices as nested lists)."""
        return {
            "down_weights": self.down_weights.tolist(),
            "down_bias": self.down_bias.tolist(),
            "up_weights": self.up_weights.tolist(),
            "up_bias": self.up_bias.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdapterParams":
        return cls(
            down_weights=np.asarray(data["down_weights"], dtype=np.float64),
            down_bias=np.asarray(data["down_bias"], dtype=np.float64),
            up_weights=np.asarray(data["up_weights"], dtype=np.float64),
            up_bias=np.asarray(data["up_bias"], dtype=np.float64),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "AdapterParams":
        return cls.from_dict(json.loads(text))


def adapter_init(
    cfg: AdapterConfig, seed: int, scale: float = DEFAULT_INIT_SCALE
) -> AdapterParams:
    """Near-zero initialization that makes the block the exact identity.

    The down-projection gets small zero-mean gaussian noise (so gradients
    can break symmetry); the up-projection and both biases are exactly
    zero, which zeroes the non-residual branch. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    d, b = cfg.model_dim, cfg.bottleneck_dim
    return AdapterParams(
        down_weights=rng.normal(0.0, scale, size=(d, b)),
        down_bias=np.zeros(b),
        up_weights=np.zeros((b, d)),
        up_bias=np.zeros(d),
    )


def _activate(h: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(h, 0.0)
    # Exact (erf-based) GELU.
    return 0.5 * h * (1.0 + erf(h / math.sqrt(2.0)))


def _activate_grad(h: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (h > 0.0).astype(h.dtype)
    cdf = 0.5 * (1.0 + erf(h / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * h * h) / math.sqrt(2.0 * math.pi)
    return cdf + h * pdf


def adapter_forward(
    x: np.ndarray, params: AdapterParams, activation: Activation = Activation.RELU
) -> np.ndarray:
    """Apply the adapter to one vector: ``x + up(act(down(x)))``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.model_dim,):
        raise ValueError(
            f"input shape {x.shape} does not match model_dim {params.model_dim}"
        )
    h = x @ params.down_weights + params.down_bias
    a = _activate(h, activation)
    return x + (a @ params.up_weights + params.up_bias)


def adapter_backward(
    x: np.ndarray,
    params: AdapterParams,
    upstream_grad: np.ndarray,
    activation: Activation = Activation.RELU,
) -> tuple[np.ndarray, AdapterParams]:
    """Analytic gradients of :func:`adapter_forward`.

    ``upstream_grad`` is dL/dy. Returns (dL/dx, parameter gradients); the
    gradients reuse the :class:`AdapterParams` container shape-for-shape.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(upstream_grad, dtype=np.float64)
    d = params.model_dim
    if x.shape != (d,) or g.shape != (d,):
        raise ValueError("input and upstream gradient must both have model_dim length")

    h = x @ params.down_weights + params.down_bias
    a = _activate(h, activation)

    grad_up_bias = g.copy()
    grad_up_weights = np.outer(a, g)
    da = g @ params.up_weights.T
    dh = da * _activate_grad(h, activation)
    grad_down_bias = dh
    grad_down_weights = np.outer(x, dh)
    grad_x = g + dh @ params.down_weights.T

    grads = AdapterParams(
        down_weights=grad_down_weights,
        down_bias=grad_down_bias,
        up_weights=grad_up_weights,
        up_bias=grad_up_bias,
    )
    return grad_x, grads


def adapter_param_count(cfg: AdapterConfig) -> int:
    """Trainable parameters of the whole adapter stack.

    Per layer: a (model_dim x bottleneck_dim) weight with bottleneck_dim
    bias, and a (bottleneck_dim x model_dim) weight with model_dim bias.
    """
    d, b = cfg.model_dim, cfg.bottleneck_dim
    return cfg.num_layers * (d * b + b + b * d + d)


def format_param_count(count: int) -> str:
    """Human form, e.g. ``3,196,416 (~ 3.2 M)``."""
    return f"{count:,} (~ {count / 1e6:.1f} M)"
