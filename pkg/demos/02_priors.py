"""Channel extremum maps, and why the contradict map flags snow.

Snow is white: bright in every channel.  The contradict map takes the
per-pixel channel minimum, then the patch maximum, so any patch touching
a flake reports a high value even where the scene itself is dark.

Run:  python3 demos/02_priors.py
"""

import numpy as np

from wdesnow import (PatchSpec, SnowParams, ccl_loss, channel_prior_map,
                     synth_snow)

rng = np.random.default_rng(3)
clean = np.clip(0.35 + 0.1 * rng.standard_normal((3, 48, 48)), 0, 0.6)
snowy = synth_snow(clean, SnowParams(rng_seed=3)).data

patch = PatchSpec(15)
for name, im in (("clean", clean), ("snowy", snowy)):
    row = []
    for kind in ("dark", "contradict", "bright"):
        m = channel_prior_map(im, kind, patch).values.data
        row.append(f"{kind} {m.mean():.3f}")
    print(f"{name:6s} " + "   ".join(row))

# the gap in the contradict means is what the training loss penalizes
loss = ccl_loss(snowy, clean, patch)
print("contradict-channel loss between the pair:", float(loss.data))
print("same image against itself:", float(ccl_loss(clean, clean, patch).data))
