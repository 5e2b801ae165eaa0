"""Dynamic convolution and the three-stage restoration network.

Run:  python3 demos/04_network.py
"""

import numpy as np

from wdesnow import (NetConfig, Tensor, conv2d, dynamic_conv_forward,
                     init_weights, model_forward, parameter_count)

rng = np.random.default_rng(5)

# a dynamic layer carries several kernels and blends their OUTPUTS by a
# per-image weight vector.  with a one-hot vector it collapses to the
# plain convolution; anything else is a true mixture.
x = Tensor(rng.normal(size=(3, 12, 12)))
kernels = [(Tensor(rng.normal(size=(3, 3, 3, 3))), Tensor(np.zeros(3)))
           for _ in range(4)]
one_hot = Tensor(np.array([0.0, 1.0, 0.0, 0.0]))
mix = Tensor(np.array([0.4, 0.1, 0.3, 0.2]))

collapsed = dynamic_conv_forward(x, kernels, one_hot)
plain = conv2d(x, kernels[1][0], kernels[1][1], padding=1)
print("one-hot equals kernel 1:", np.array_equal(collapsed.data, plain.data))
print("mixture output stats:",
      dynamic_conv_forward(x, kernels, mix).data.std().round(3))

# the full model: attention front end, two wavelet-domain enhancement
# stages, residual reconstruction.  configs scale the width down for
# desk-size experiments.
full = NetConfig()
toy = NetConfig(toy_scale_factor=8)
print(f"full-width parameters: {parameter_count(full):,}")
print(f"toy-width parameters:  {parameter_count(toy):,}")

w = init_weights(toy, seed=0)
img = rng.random((3, 32, 32))
out = model_forward(img, w)
# the final projection starts at zero, so before training the network
# is exactly the identity
print("untrained model is identity:", np.array_equal(out.data, img))
