"""
Reverse-mode autodiff on numpy arrays
=====================================

Build a tiny MLP, differentiate a loss, and compare against central
differences.
"""

import numpy as np

from gdbn import tensor as T
from gdbn.nn import AdamState, adam_step, finite_difference_check, init_mlp, mlp_apply

rng = np.random.default_rng(0)

# a 2 -> 8 -> 1 network and a toy regression target
net = init_mlp([2, 8, 1], rng)
x = rng.normal(size=(64, 2))
y = np.sin(x[:, :1]) * x[:, 1:]


def loss():
    pred = mlp_apply(net, T.constant(x))
    return T.mean(T.square(T.sub(pred, y)))


# backward() fills .grad on every leaf that requires it
print("loss before:", loss().item())
report = finite_difference_check(loss, net.parameters())
print("gradient check max relative error: %.2e" % report.max_error)

# a few hundred Adam steps
opt = AdamState(lr=1e-2)
params = net.parameters()
for step in range(300):
    for p in params:
        p.zero_grad()
    value = loss()
    value.backward()
    adam_step(opt, params, [p.grad for p in params])
print("loss after 300 Adam steps:", loss().item())
