"""The reverse-mode core in one page.

Tensors record onto the ambient Tape; backward() replays the tape.
Every gradient in the package flows through this mechanism, including
the window-extremum priors, so a finite-difference probe is shown too.

Run:  python3 demos/03_autodiff.py
"""

import numpy as np

from wdesnow import PatchSpec, Tape, Tensor, channel_prior_map, conv2d
from wdesnow.autodiff import mul, relu, tsum

rng = np.random.default_rng(1)

x = Tensor(rng.normal(size=(3, 8, 8)))
w = Tensor(rng.normal(size=(4, 3, 3, 3)) * 0.2)
b = Tensor(np.zeros(4))

with Tape() as tape:
    y = relu(conv2d(x, w, b, padding=1))
    loss = tsum(mul(y, y))      # sum of squares
    tape.backward(loss)

print("loss:", float(loss.data))
print("grad shapes:", x.grad.shape, w.grad.shape, b.grad.shape)

# check one coordinate of dL/dw against a central difference
i = (2, 1, 0, 1)
eps = 1e-6


def f(delta):
    w2 = Tensor(w.data.copy())
    w2.data[i] += delta
    y = relu(conv2d(x, w2, b, padding=1))
    return float(tsum(mul(y, y)).data)


fd = (f(eps) - f(-eps)) / (2 * eps)
print(f"analytic {w.grad[i]:.6f}  finite-diff {fd:.6f}")

# the prior map is a selection, so its gradient is a scatter of ones
# back to whichever pixel won each window
img = Tensor(rng.random((3, 6, 6)))
with Tape() as tape:
    m = channel_prior_map(img, "contradict", PatchSpec(3))
    tape.backward(tsum(m.values))
print("prior-map gradient mass per channel:", img.grad.sum(axis=(1, 2)))
print("(sums to the number of output pixels:", img.grad.sum(), ")")
