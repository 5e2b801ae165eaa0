"""Drive every CLI subcommand in a temp directory.

The same flows work from a shell via the `wdesnow` entry point, e.g.
  wdesnow synth clean/ pairs/ --seed 7
  wdesnow train pairs/degraded pairs/clean run/ --epochs 40 --lr 1e-3
  wdesnow infer run/weights.wts pairs/degraded restored/
  wdesnow eval restored/ pairs/clean scores.csv

Run:  python3 demos/06_cli_walkthrough.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from wdesnow import Tensor, encode_png
from wdesnow.cli import main

root = Path(tempfile.mkdtemp(prefix="wdesnow_demo_"))
clean_dir = root / "clean"
clean_dir.mkdir()
rng = np.random.default_rng(11)
for i in range(2):
    img = np.clip(0.3 + 0.2 * np.cumsum(
        rng.standard_normal((3, 24, 24)), axis=2) / 4, 0.05, 0.8)
    encode_png(Tensor(img), clean_dir / f"scene{i}.png")

def run(args):
    rc = main(args)
    assert rc == 0, f"{args[0]} exited {rc}"


print("== synth ==")
# writes paired clean/ and degraded/ subdirectories under snowy/
run(["synth", str(clean_dir), str(root / "snowy"), "--seed", "7"])
snowy = root / "snowy" / "degraded"

print("== decompose / reconstruct ==")
run(["decompose", str(clean_dir / "scene0.png"), str(root / "pyr"),
     "--levels", "2"])
run(["reconstruct", str(root / "pyr" / "pyramid.wts"),
     str(root / "rebuilt.png")])

print("== priors ==")
run(["priors", str(snowy / "scene0.png"), str(root / "maps")])
print((root / "maps" / "stats.json").read_text().strip())

print("== train (tiny, a few seconds) ==")
cfg = root / "cfg.json"
cfg.write_text(json.dumps({"net": {"toy_scale_factor": 16},
                           "train": {"epochs": 8, "batch_size": 2,
                                     "patch": 5,
                                     "lr_schedule": [[1, 8, 1e-3]]}}))
run(["train", str(snowy), str(clean_dir), str(root / "run"),
     "--config", str(cfg), "--seed", "0"])

print("== infer / eval ==")
run(["infer", str(root / "run" / "weights.wts"), str(snowy),
     str(root / "restored")])
run(["eval", str(root / "restored"), str(clean_dir),
     str(root / "scores.csv")])
print((root / "scores.csv").read_text().strip())
print("workspace:", root)
