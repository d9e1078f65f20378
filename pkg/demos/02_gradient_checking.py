"""Verify analytic backpropagation against central finite differences.

Checks individual layer types, then a width-reduced build of the full
architecture, and prints the worst relative error for each. Linear stacks
agree to rounding; ReLU stacks are checked at a generic parameter point
(small jitter off the zero-bias init) with a small step so probe-induced
kink crossings do not contaminate the comparison.

Run:  python3 demos/02_gradient_checking.py
"""

import numpy as np

from cxrnet.model import Inception, InceptionSpec, Network, build_proposed_cnn
from cxrnet.nn import Conv2D, Dense, Flatten, MaxPool2D, ReLU, grad_check


def jitter(net, seed, scale=0.05):
    rng = np.random.default_rng(seed)
    for _, p, _ in net.named_parameters():
        p += rng.uniform(-scale, scale, p.shape).astype(p.dtype)
    return net


def report(name, err, budget):
    flag = "ok" if err < budget else "FAIL"
    print(f"{name:34s} {err:10.3e}  (budget {budget:g})  {flag}")


def main():
    rng = np.random.default_rng(0)

    net = Network([Dense(12, 5, name="fc", rng=rng)])
    x = np.random.default_rng(1).standard_normal((3, 12)).astype(np.float32)
    report("dense (linear)", grad_check(net, x, loss="linear"), 1e-6)

    net = Network([Conv2D(2, 4, 3, name="conv", rng=rng)])
    x = np.random.default_rng(2).standard_normal((2, 2, 8, 8)).astype(np.float32)
    report("conv 3x3 (linear)", grad_check(net, x, loss="linear"), 1e-6)

    net = jitter(
        Network(
            [
                Conv2D(1, 4, 3, name="conv", rng=rng),
                ReLU(),
                MaxPool2D(2, 2),
                Flatten(),
                Dense(4 * 4 * 4, 3, name="fc", rng=rng),
            ]
        ),
        seed=3,
    )
    x = np.random.default_rng(4).standard_normal((2, 1, 8, 8)).astype(np.float32)
    report("conv-relu-pool-dense", grad_check(net, x, np.array([0, 2]), h=1e-4), 1e-3)

    spec = InceptionSpec(b1=8, b2_reduce=12, b2=16, b3_reduce=2, b3=4, b4=4)
    net = jitter(
        Network(
            [
                Inception(3, spec, name="inc", rng=rng),
                Flatten(),
                Dense(spec.out_channels * 16 * 16, 4, name="fc", rng=rng),
            ]
        ),
        seed=5,
    )
    x = np.random.default_rng(6).standard_normal((1, 3, 16, 16)).astype(np.float32)
    err = grad_check(net, x, np.array([1]), h=1e-6, samples_per_tensor=10)
    report("inception block @16x16", err, 1e-3)

    reduced = build_proposed_cnn((1, 32, 32), 4, width_divisor=8)
    net = jitter(Network.from_spec(reduced, seed=0), seed=100)
    print(f"\nfull architecture / 8 ({net.num_parameters()} parameters):")
    rng2 = np.random.default_rng(7)
    x = rng2.random((2, 1, 32, 32), dtype=np.float32)
    labels = rng2.integers(0, 4, size=2)
    err = grad_check(net, x, labels, h=1e-6, samples_per_tensor=24)
    report("width-reduced network @32x32", err, 1e-3)


if __name__ == "__main__":
    main()
