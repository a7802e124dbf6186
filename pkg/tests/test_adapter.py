"""Adapter forward/backward/init against hand arithmetic and finite differences."""

import numpy as np
import pytest

from sotkit import (
    Activation,
    AdapterConfig,
    AdapterParams,
    adapter_backward,
    adapter_forward,
    adapter_init,
    adapter_param_count,
)


def tiny_params():
    # model_dim 2, bottleneck 1: down = [[1],[0]], up = [[1, 0]], zero biases.
    return AdapterParams(
        down_weights=np.array([[1.0], [0.0]]),
        down_bias=np.zeros(1),
        up_weights=np.array([[1.0, 0.0]]),
        up_bias=np.zeros(2),
    )


def random_params(rng, d, b):
    # O(1)-scale weights keep relu pre-activations away from the kink.
    return AdapterParams(
        down_weights=rng.normal(0, 1 / np.sqrt(d), size=(d, b)),
        down_bias=rng.normal(0, 0.5, size=b),
        up_weights=rng.normal(0, 1 / np.sqrt(b), size=(b, d)),
        up_bias=rng.normal(0, 0.5, size=d),
    )


def fd_param_gradients(x, params, g, activation, step=1e-5):
    """Central finite differences of L = g . forward(x) wrt every parameter."""
    grads = {}
    for name in ("down_weights", "down_bias", "up_weights", "up_bias"):
        base = getattr(params, name).copy()
        grad = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            for sign in (+1, -1):
                perturbed = base.copy()
                perturbed[idx] += sign * step
                p = AdapterParams(**{**_asdict(params), name: perturbed})
                y = adapter_forward(x, p, activation)
                grad[idx] += sign * float(g @ y)
        grads[name] = grad / (2 * step)
    return grads


def fd_input_gradient(x, params, g, activation, step=1e-5):
    grad = np.zeros_like(x)
    for i in range(len(x)):
        for sign in (+1, -1):
            xp = x.copy()
            xp[i] += sign * step
            grad[i] += sign * float(g @ adapter_forward(xp, params, activation))
    return grad / (2 * step)


def _asdict(params):
    return {
        "down_weights": params.down_weights,
        "down_bias": params.down_bias,
        "up_weights": params.up_weights,
        "up_bias": params.up_bias,
    }


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum.reduce([np.abs(a), np.abs(b), np.ones_like(a)]))


class TestInit:
    def test_up_projection_is_exactly_zero(self):
        p = adapter_init(AdapterConfig(8, 3, 1), seed=0)
        assert not p.up_weights.any()
        assert not p.up_bias.any()
        assert not p.down_bias.any()

    def test_deterministic_per_seed(self):
        cfg = AdapterConfig(8, 3, 1)
        a, b = adapter_init(cfg, seed=7), adapter_init(cfg, seed=7)
        assert np.array_equal(a.down_weights, b.down_weights)
        other = adapter_init(cfg, seed=8)
        assert not np.array_equal(a.down_weights, other.down_weights)

    def test_identity_at_init(self):
        p = adapter_init(AdapterConfig(4, 2, 1), seed=7)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=4)
            y = adapter_forward(x, p)
            assert np.array_equal(y, x)

    def test_down_weights_scale(self):
        p = adapter_init(AdapterConfig(64, 16, 1), seed=1)
        assert 0 < np.abs(p.down_weights).max() < 0.01


class TestForward:
    def test_hand_arithmetic_positive_branch(self):
        y = adapter_forward(np.array([1.0, 5.0]), tiny_params(), Activation.RELU)
        assert np.array_equal(y, np.array([2.0, 5.0]))

    def test_hand_arithmetic_relu_zeroes_branch(self):
        y = adapter_forward(np.array([-1.0, 5.0]), tiny_params(), Activation.RELU)
        assert np.array_equal(y, np.array([-1.0, 5.0]))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            adapter_forward(np.zeros(3), tiny_params())

    def test_gelu_matches_reference_values(self):
        # gelu(1) = 0.5 * 1 * (1 + erf(1/sqrt(2))) ~= 0.841345
        p = tiny_params()
        y = adapter_forward(np.array([1.0, 0.0]), p, Activation.GELU)
        assert y[0] == pytest.approx(1.0 + 0.8413447460685429, rel=1e-12)


class TestBackward:
    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(2)
        p = random_params(rng, 4, 2)
        dx, grads = adapter_backward(rng.normal(size=4), p, np.zeros(4))
        assert not dx.any()
        for name in _asdict(grads):
            assert not getattr(grads, name).any()

    def test_input_gradient_is_upstream_at_init(self):
        p = adapter_init(AdapterConfig(6, 2, 1), seed=3)
        rng = np.random.default_rng(3)
        x, g = rng.normal(size=6), rng.normal(size=6)
        dx, _ = adapter_backward(x, p, g)
        assert np.array_equal(dx, g)

    @pytest.mark.parametrize("activation", [Activation.RELU, Activation.GELU])
    def test_matches_finite_differences_small(self, activation):
        rng = np.random.default_rng(11)
        for _ in range(5):
            x = rng.normal(size=4)
            g = rng.normal(size=4)
            p = random_params(rng, 4, 2)
            dx, grads = adapter_backward(x, p, g, activation)
            fd = fd_param_gradients(x, p, g, activation)
            for name in fd:
                assert rel_err(getattr(grads, name), fd[name]) < 1e-6
            assert rel_err(dx, fd_input_gradient(x, p, g, activation)) < 1e-6

    def test_shape_mismatch_rejected(self):
        p = tiny_params()
        with pytest.raises(ValueError):
            adapter_backward(np.zeros(2), p, np.zeros(3))


class TestParamCount:
    def test_zero_layers(self):
        assert adapter_param_count(AdapterConfig(1024, 32, 0)) == 0

    @pytest.mark.parametrize(
        "bottleneck,expected",
        [(32, 3_196_416), (64, 6_343_680), (128, 12_638_208), (256, 25_227_264)],
    )
    def test_published_scale_counts(self, bottleneck, expected):
        cfg = AdapterConfig(1024, bottleneck, 48)
        count = adapter_param_count(cfg)
        assert count == expected
        # Two weight matrices with their biases, per layer.
        d, b = 1024, bottleneck
        assert count == 48 * ((d * b + b) + (b * d + d))

    def test_affine_in_bottleneck(self):
        d, layers = 1024, 48
        slope = layers * (2 * d + 1)
        c = lambda b: adapter_param_count(AdapterConfig(d, b, layers))
        for b in (2, 3, 17, 64, 255):
            assert c(b + 1) - c(b) == slope

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            AdapterConfig(0, 1, 1)
        with pytest.raises(ValueError):
            AdapterConfig(1, 0, 1)


class TestSerialization:
    def test_json_round_trip(self):
        p = adapter_init(AdapterConfig(4, 2, 1), seed=5)
        q = AdapterParams.from_json(p.to_json())
        for name in _asdict(p):
            assert np.array_equal(getattr(p, name), getattr(q, name))

    def test_inconsistent_shapes_rejected(self):
        with pytest.raises(ValueError):
            AdapterParams(np.zeros((2, 1)), np.zeros(1), np.zeros((1, 2)), np.zeros(3))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            AdapterParams(
                np.array([[np.nan]]), np.zeros(1), np.zeros((1, 1)), np.zeros(1)
            )
