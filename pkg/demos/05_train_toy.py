"""Overfit two synthetic pairs at desk scale and watch the loss move.

Takes around half a minute.  Run:  python3 demos/05_train_toy.py
"""

import numpy as np

from wdesnow import (NetConfig, PairSample, SnowParams, Tensor, TrainConfig,
                     init_weights, model_forward, psnr, synth_snow, train)


def smooth(seed, h=32, w=32):
    rng = np.random.default_rng(seed)
    rows = np.linspace(0, 1, h)[None, :, None]
    cols = np.linspace(0, 1, w)[None, None, :]
    img = 0.5 + 0.25 * np.sin(2 * np.pi * (rows + cols)
                              + rng.uniform(0, 2 * np.pi, (3, 1, 1)))
    img += 0.05 * rng.standard_normal((3, h, w))
    return (img - img.min()) / (img.max() - img.min()) * 0.75


pairs = []
for seed in (0, 1):
    clean = smooth(seed)
    degraded = synth_snow(clean, SnowParams(rng_seed=seed))
    pairs.append(PairSample(f"p{seed}", degraded, Tensor(clean)))

cfg = TrainConfig(batch_size=2, epochs=100, lr_schedule=((1, 100, 1e-3),),
                  lambda_ccl=0.1, patch=15, seed=0)
weights = init_weights(NetConfig(toy_scale_factor=8), seed=0)
weights, log = train(weights, pairs, cfg)

for epoch, mean in log.epoch_means[::20] + [log.epoch_means[-1]]:
    print(f"epoch {epoch:3d}   loss {mean:.4f}")

for s in pairs:
    before = psnr(s.degraded.data, s.clean.data)
    after = psnr(model_forward(s.degraded, weights).data, s.clean.data)
    print(f"{s.name}: {before:.1f} dB -> {after:.1f} dB")
