"""Whole-network analytic gradients against central finite differences."""

import numpy as np
import pytest

from cxrnet.model import Inception, InceptionSpec, Network
from cxrnet.nn import Conv2D, Dense, Flatten, MaxPool2D, ReLU, grad_check


def jitter(net: Network, seed: int, scale: float = 0.05) -> Network:
    """Nudge all parameters off their init, in particular the zero biases.

    A freshly initialized network can hold pre-activations exactly on the
    ReLU kink (zero bias + a fully-dead input region), where one-sided
    finite differences disagree with the subgradient by construction.
    """
    rng = np.random.default_rng(seed)
    for _, p, _ in net.named_parameters():
        p += rng.uniform(-scale, scale, p.shape).astype(p.dtype)
    return net


def test_linear_dense_network_is_exact():
    net = Network([Dense(12, 5, name="fc", rng=np.random.default_rng(0))])
    x = np.random.default_rng(1).standard_normal((3, 12)).astype(np.float32)
    assert grad_check(net, x, loss="linear", seed=0) < 1e-6


def test_linear_conv_stack_is_exact():
    rng = np.random.default_rng(2)
    net = Network(
        [
            Conv2D(2, 3, 3, name="c1", rng=rng),
            Conv2D(3, 2, 3, stride=2, name="c2", rng=rng),
        ]
    )
    x = np.random.default_rng(3).standard_normal((2, 2, 8, 8)).astype(np.float32)
    assert grad_check(net, x, loss="linear", seed=1) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_conv_pool_dense_stack(seed):
    rng = np.random.default_rng(100 + seed)
    net = Network(
        [
            Conv2D(1, 4, 3, name="conv", rng=rng),
            ReLU(),
            MaxPool2D(2, 2),
            Flatten(),
            Dense(4 * 4 * 4, 3, name="fc", rng=rng),
        ]
    )
    jitter(net, 200 + seed)
    x = np.random.default_rng(seed).standard_normal((2, 1, 8, 8)).astype(np.float32)
    labels = np.array([0, 2])
    assert grad_check(net, x, labels, h=1e-4, seed=seed) < 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_inception_module_at_16x16(seed):
    spec = InceptionSpec(b1=8, b2_reduce=12, b2=16, b3_reduce=2, b3=4, b4=4)
    net = Network(
        [
            Inception(3, spec, name="inc", rng=np.random.default_rng(300 + seed)),
            Flatten(),
            Dense(spec.out_channels * 16 * 16, 4, name="fc", rng=np.random.default_rng(400 + seed)),
        ]
    )
    jitter(net, 500 + seed)
    x = np.random.default_rng(seed).standard_normal((1, 3, 16, 16)).astype(np.float32)
    err = grad_check(net, x, np.array([1]), h=1e-6, samples_per_tensor=10, seed=seed)
    assert err < 1e-3


def test_sampling_visits_every_tensor_and_is_deterministic():
    net = Network([Dense(6, 3, name="fc", rng=np.random.default_rng(4))])
    x = np.random.default_rng(5).standard_normal((2, 6)).astype(np.float32)
    e1 = grad_check(net, x, loss="linear", samples_per_tensor=2, seed=9)
    e2 = grad_check(net, x, loss="linear", samples_per_tensor=2, seed=9)
    assert e1 == e2 < 1e-6


def test_ce_mode_requires_labels():
    net = Network([Dense(4, 2, name="fc", rng=np.random.default_rng(6))])
    x = np.zeros((1, 4), dtype=np.float32)
    with pytest.raises(ValueError, match="labels"):
        grad_check(net, x)


def test_rejects_unknown_loss():
    net = Network([Dense(4, 2, name="fc", rng=np.random.default_rng(7))])
    with pytest.raises(ValueError, match="loss"):
        grad_check(net, np.zeros((1, 4), dtype=np.float32), loss="mse")
