"""Desk-scale training loop: shuffled mini-batch Adam, a piecewise-constant
learning-rate schedule, per-step loss logging, and paired-PNG dataset
loading.

The objective is L1 reconstruction plus a weighted contradict-channel term:
total = l1(restored, clean) + lambda_ccl * ccl(restored, clean).  Every run
is a pure function of (initial weights, dataset, config): the only RNG is
seeded from the config and drives batch shuffling alone.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor, add, adam_step, l1_loss, scale
from .network import ModelWeights, model_forward
from .pngio import decode_png, pad_to_multiple
from .priors import PatchSpec, ccl_loss


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4
    epochs: int = 10
    # inclusive epoch ranges: ((start, end, lr), ...) partitioning [1, epochs]
    lr_schedule: tuple = ((1, 10, 1e-4),)
    lambda_ccl: float = 0.1
    patch: int = 15
    seed: int = 0
    checkpoint_every: int = 0   # epochs between checkpoints; 0 = none

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lambda_ccl < 0:
            raise ValueError("lambda_ccl must be nonnegative")
        if self.patch < 1 or self.patch % 2 == 0:
            raise ValueError(f"patch must be odd, got {self.patch}")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be nonnegative")
        sched = tuple(tuple(entry) for entry in self.lr_schedule)
        if not sched:
            raise ValueError("lr_schedule must not be empty")
        expected = 1
        for start, end, lr in sched:
            if start != expected or end < start:
                raise ValueError(
                    f"lr_schedule ranges must partition [1, {self.epochs}] "
                    f"in order; got segment ({start}, {end})")
            if lr < 0:
                raise ValueError(f"learning rate {lr} is negative")
            expected = end + 1
        if expected != self.epochs + 1:
            raise ValueError(
                f"lr_schedule covers [1, {expected - 1}] "
                f"but epochs = {self.epochs}")
        object.__setattr__(self, "lr_schedule", sched)

    def lr_for_epoch(self, epoch: int) -> float:
        for start, end, lr in self.lr_schedule:
            if start <= epoch <= end:
                return lr
        raise ValueError(f"epoch {epoch} outside [1, {self.epochs}]")


PAPER_SCHEDULE = ((1, 30, 1e-4), (31, 60, 1e-5), (61, 100, 1e-6))


def compress_schedule(schedule, new_epochs: int):
    """Rescale a schedule's epoch ranges onto [1, new_epochs].

    Segment boundaries move proportionally (rounded); segments squeezed to
    nothing are dropped.  The result partitions [1, new_epochs] and keeps
    the learning-rate sequence.
    """
    if new_epochs < 1:
        raise ValueError("new_epochs must be >= 1")
    old_total = schedule[-1][1]
    out = []
    start = 1
    for i, (_, end, lr) in enumerate(schedule):
        new_end = (new_epochs if i == len(schedule) - 1
                   else round(end * new_epochs / old_total))
        if new_end >= start:
            out.append((start, new_end, lr))
            start = new_end + 1
    return tuple(out)


@dataclass
class PairSample:
    name: str
    degraded: object   # Tensor 3HW
    clean: object      # Tensor 3HW


@dataclass
class TrainLog:
    steps: list = field(default_factory=list)        # (epoch, step, loss, lr)
    epoch_means: list = field(default_factory=list)  # (epoch, mean loss)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,step,loss,lr\n")
            for epoch, step, loss, lr in self.steps:
                fh.write(f"{epoch},{step},{loss!r},{lr!r}\n")


def total_loss(restored, clean, config: TrainConfig):
    """l1 + lambda * contradict-channel distance (pure l1 when lambda=0)."""
    if not isinstance(clean, Tensor):
        clean = Tensor(clean)
    rec = l1_loss(restored, clean)
    if config.lambda_ccl == 0.0:
        return rec
    cc = ccl_loss(restored, clean, PatchSpec(config.patch))
    return add(rec, scale(cc, config.lambda_ccl))


def train(weights: ModelWeights, dataset, config: TrainConfig,
          checkpoint_dir=None, checkpoint_writer=None):
    """Optimize `weights` in place; returns (weights, TrainLog).

    checkpoint_writer(weights, path) is called every checkpoint_every
    epochs when both it and checkpoint_dir are provided.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    dataset = [
        PairSample(
            s.name,
            s.degraded if isinstance(s.degraded, Tensor) else Tensor(s.degraded),
            s.clean if isinstance(s.clean, Tensor) else Tensor(s.clean))
        for s in dataset
    ]
    shapes = {s.degraded.data.shape for s in dataset}
    shapes |= {s.clean.data.shape for s in dataset}
    if len(shapes) != 1:
        raise ValueError(f"dataset extents disagree: {sorted(shapes)}")

    rng = np.random.default_rng(config.seed)
    params = weights.parameters()
    state = {}
    log = TrainLog()
    step = 0
    for epoch in range(1, config.epochs + 1):
        lr = config.lr_for_epoch(epoch)
        order = rng.permutation(len(dataset))
        epoch_losses = []
        for lo in range(0, len(order), config.batch_size):
            batch = [dataset[i] for i in order[lo:lo + config.batch_size]]
            weights.zero_grads()
            with Tape() as tape:
                acc = None
                for sample in batch:
                    restored = model_forward(sample.degraded, weights)
                    term = total_loss(restored, sample.clean, config)
                    acc = term if acc is None else add(acc, term)
                loss = scale(acc, 1.0 / len(batch))
                tape.backward(loss)
            adam_step(params, lr, state)
            step += 1
            value = float(loss.data)
            epoch_losses.append(value)
            log.steps.append((epoch, step, value, lr))
        log.epoch_means.append((epoch, float(np.mean(epoch_losses))))
        if (checkpoint_dir and checkpoint_writer and config.checkpoint_every
                and epoch % config.checkpoint_every == 0):
            path = os.path.join(checkpoint_dir, f"epoch{epoch:04d}.wts")
            checkpoint_writer(weights, path)
    return weights, log


def load_pairs(degraded_dir, clean_dir) -> list:
    """Pair same-named PNGs from two directories, padded to multiples of 4.

    Both images of a pair are reflect-padded identically so they stay
    aligned; names without a partner are an error.
    """
    def listing(d):
        try:
            names = sorted(f for f in os.listdir(d)
                           if f.lower().endswith(".png"))
        except OSError as exc:
            raise ValueError(f"cannot list {d}: {exc}") from exc
        return names

    deg_names = listing(degraded_dir)
    cln_names = listing(clean_dir)
    orphans = sorted(set(deg_names) ^ set(cln_names))
    if orphans:
        raise ValueError(f"unmatched files between directories: {orphans}")
    dataset = []
    for name in deg_names:
        deg = decode_png(os.path.join(degraded_dir, name))
        cln = decode_png(os.path.join(clean_dir, name))
        if deg.data.shape != cln.data.shape:
            raise ValueError(
                f"{name}: degraded {deg.data.shape} vs clean "
                f"{cln.data.shape}")
        deg, _ = pad_to_multiple(deg)
        cln, _ = pad_to_multiple(cln)
        dataset.append(PairSample(name=name, degraded=deg, clean=cln))
    return dataset
