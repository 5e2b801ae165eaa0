"""Training loop: schedule semantics, loss composition, determinism,
dataset loading."""

import os

import numpy as np
import pytest

from wdesnow.autodiff import Tensor, l1_loss
from wdesnow.network import NetConfig, init_weights
from wdesnow.pngio import encode_png
from wdesnow.synth import SnowParams, synth_snow
from wdesnow.training import (PAPER_SCHEDULE, PairSample, TrainConfig,
                              compress_schedule, load_pairs, total_loss,
                              train)

TINY = NetConfig(toy_scale_factor=16)   # 4 channels
TOY = NetConfig(toy_scale_factor=8)     # 8 channels


def contradict_scan(data, size):
    """Inline oracle: channel minimum, then clipped windowed maximum."""
    h, w = data.shape[1:]
    half = size // 2
    field = data.min(axis=0)
    out = np.empty((h, w))
    for r in range(h):
        for c in range(w):
            win = field[max(0, r - half):r + half + 1,
                        max(0, c - half):c + half + 1]
            out[r, c] = win.max()
    return out


def smooth_pair(seed, h=16, w=16):
    rng = np.random.default_rng(seed)
    rows = np.linspace(0, 1, h)[None, :, None]
    cols = np.linspace(0, 1, w)[None, None, :]
    phase = rng.uniform(0, 2 * np.pi, size=(3, 1, 1))
    clean = 0.45 + 0.3 * np.sin(2 * np.pi * (rows + cols) + phase)
    clean = np.clip(clean, 0.0, 1.0)
    degraded = synth_snow(clean, SnowParams(rng_seed=seed)).data
    return PairSample(f"pair{seed}", Tensor(degraded), Tensor(clean))


# --------------------------------------------------------------------------
# schedule

def test_paper_schedule_phases():
    cfg = TrainConfig(batch_size=16, epochs=100, lr_schedule=PAPER_SCHEDULE)
    assert cfg.lr_for_epoch(1) == 1e-4
    assert cfg.lr_for_epoch(30) == 1e-4
    assert cfg.lr_for_epoch(31) == 1e-5
    assert cfg.lr_for_epoch(60) == 1e-5
    assert cfg.lr_for_epoch(61) == 1e-6
    assert cfg.lr_for_epoch(100) == 1e-6


def test_lr_outside_configured_epochs_rejected():
    cfg = TrainConfig(epochs=10, lr_schedule=((1, 10, 1e-4),))
    with pytest.raises(ValueError, match="outside"):
        cfg.lr_for_epoch(11)


@pytest.mark.parametrize("epochs,schedule", [
    (10, ((2, 10, 1e-4),)),                    # does not start at 1
    (10, ((1, 5, 1e-4), (7, 10, 1e-5))),       # gap at 6
    (10, ((1, 5, 1e-4), (5, 10, 1e-5))),       # overlap at 5
    (10, ((1, 5, 1e-4),)),                     # leaves 6..10 uncovered
    (10, ((1, 12, 1e-4),)),                    # runs past the final epoch
    (10, ((1, 0, 1e-4),)),                     # empty range
    (10, ((1, 10, -1e-4),)),                   # negative rate
    (10, ()),                                  # no segments at all
])
def test_bad_schedules_rejected(epochs, schedule):
    with pytest.raises(ValueError):
        TrainConfig(epochs=epochs, lr_schedule=schedule)


def test_compress_schedule_scales_boundaries_proportionally():
    assert compress_schedule(PAPER_SCHEDULE, 500) == (
        (1, 150, 1e-4), (151, 300, 1e-5), (301, 500, 1e-6))
    assert compress_schedule(PAPER_SCHEDULE, 10) == (
        (1, 3, 1e-4), (4, 6, 1e-5), (7, 10, 1e-6))
    # squeezing drops vanished segments but still partitions [1, n]
    for n in (1, 2, 3, 7):
        sched = compress_schedule(PAPER_SCHEDULE, n)
        TrainConfig(epochs=n, lr_schedule=sched)   # validates the partition
    with pytest.raises(ValueError):
        compress_schedule(PAPER_SCHEDULE, 0)


def test_zero_learning_rate_freezes_weights():
    weights = init_weights(TINY, seed=3)
    reference = init_weights(TINY, seed=3)
    pair = smooth_pair(0)
    cfg = TrainConfig(batch_size=1, epochs=3, lr_schedule=((1, 3, 0.0),),
                      lambda_ccl=0.0, seed=0)
    train(weights, [pair], cfg)
    for name, param in weights.params.items():
        assert np.array_equal(param.data, reference.params[name].data), name


# --------------------------------------------------------------------------
# loss composition

def test_total_loss_zero_for_identical_pair():
    img = Tensor(np.random.default_rng(0).random((3, 8, 8)))
    cfg = TrainConfig(lambda_ccl=0.1, patch=3)
    assert float(total_loss(img, Tensor(img.data.copy()), cfg).data) == 0.0


def test_total_loss_lambda_zero_is_exactly_l1():
    rng = np.random.default_rng(1)
    a, b = Tensor(rng.random((3, 8, 8))), Tensor(rng.random((3, 8, 8)))
    cfg = TrainConfig(lambda_ccl=0.0)
    assert float(total_loss(a, b, cfg).data) == float(l1_loss(a, b).data)


def test_total_loss_handbuilt_pair_matches_manual_sum():
    rng = np.random.default_rng(2)
    restored = rng.random((3, 4, 4))
    clean = rng.random((3, 4, 4))
    lam = 0.7
    cfg = TrainConfig(lambda_ccl=lam, patch=3)
    got = float(total_loss(Tensor(restored), Tensor(clean), cfg).data)
    l1 = np.abs(restored - clean).mean()
    ccl = np.abs(contradict_scan(restored, 3) - contradict_scan(clean, 3)).mean()
    assert got == pytest.approx(l1 + lam * ccl, abs=1e-12)


def test_total_loss_never_below_l1():
    rng = np.random.default_rng(3)
    for _ in range(5):
        a, b = Tensor(rng.random((3, 8, 8))), Tensor(rng.random((3, 8, 8)))
        cfg = TrainConfig(lambda_ccl=0.3, patch=3)
        assert float(total_loss(a, b, cfg).data) >= float(l1_loss(a, b).data)


# --------------------------------------------------------------------------
# the loop

def test_train_rejects_empty_dataset():
    with pytest.raises(ValueError, match="empty"):
        train(init_weights(TINY, seed=0), [], TrainConfig())


def test_train_rejects_extent_mismatch():
    pairs = [smooth_pair(0, 16, 16), smooth_pair(1, 16, 20)]
    with pytest.raises(ValueError, match="extents"):
        train(init_weights(TINY, seed=0), pairs, TrainConfig())


def test_training_is_bitwise_deterministic():
    pairs = [smooth_pair(0), smooth_pair(1), smooth_pair(2)]
    cfg = TrainConfig(batch_size=2, epochs=3, lr_schedule=((1, 3, 1e-3),),
                      lambda_ccl=0.1, patch=5, seed=11)
    runs = []
    for _ in range(2):
        weights, log = train(init_weights(TINY, seed=5), list(pairs), cfg)
        runs.append((weights, log))
    w0, log0 = runs[0]
    w1, log1 = runs[1]
    assert log0.steps == log1.steps
    assert log0.epoch_means == log1.epoch_means
    for name, param in w0.params.items():
        assert param.data.tobytes() == w1.params[name].data.tobytes(), name


def test_overfit_smoke_reduces_loss():
    pairs = [smooth_pair(0), smooth_pair(1)]
    cfg = TrainConfig(batch_size=2, epochs=30, lr_schedule=((1, 30, 1e-3),),
                      lambda_ccl=0.1, patch=5, seed=0)
    _, log = train(init_weights(TOY, seed=0), pairs, cfg)
    assert log.epoch_means[-1][1] < log.epoch_means[0][1]


def test_overfit_two_images_500_steps_reaches_tenth_of_initial():
    # the long-running memorization check: two 32x32 pairs, toy width,
    # 500 steps at a flat 1e-3 drive the loss under a tenth of its start
    pairs = [smooth_pair(0, 32, 32), smooth_pair(1, 32, 32)]
    cfg = TrainConfig(batch_size=2, epochs=500, lr_schedule=((1, 500, 1e-3),),
                      lambda_ccl=0.1, patch=15, seed=0)
    _, log = train(init_weights(TOY, seed=0), pairs, cfg)
    first = log.steps[0][2]
    final = log.steps[-1][2]
    assert final <= 0.1 * first, f"{final:.4f} vs initial {first:.4f}"


def test_step_log_records_epoch_step_loss_lr():
    pairs = [smooth_pair(0), smooth_pair(1)]
    cfg = TrainConfig(batch_size=1, epochs=2, lr_schedule=((1, 1, 1e-3), (2, 2, 1e-4)),
                      lambda_ccl=0.0, seed=0)
    _, log = train(init_weights(TINY, seed=0), pairs, cfg)
    assert [(e, s) for e, s, _, _ in log.steps] == [(1, 1), (1, 2), (2, 3), (2, 4)]
    assert [lr for _, _, _, lr in log.steps] == [1e-3, 1e-3, 1e-4, 1e-4]
    assert len(log.epoch_means) == 2


def test_csv_log_round_trips_exact_floats(tmp_path):
    pairs = [smooth_pair(0)]
    cfg = TrainConfig(batch_size=1, epochs=2, lr_schedule=((1, 2, 1e-3),),
                      lambda_ccl=0.1, patch=5, seed=0)
    _, log = train(init_weights(TINY, seed=0), pairs, cfg)
    path = tmp_path / "log.csv"
    log.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,step,loss,lr"
    assert len(lines) == 1 + len(log.steps)
    for line, (epoch, step, loss, lr) in zip(lines[1:], log.steps):
        fields = line.split(",")
        assert (int(fields[0]), int(fields[1])) == (epoch, step)
        assert float(fields[2]) == loss
        assert float(fields[3]) == lr


def test_checkpoint_callback_fires_on_schedule(tmp_path):
    pairs = [smooth_pair(0)]
    cfg = TrainConfig(batch_size=1, epochs=5, lr_schedule=((1, 5, 1e-3),),
                      lambda_ccl=0.0, seed=0, checkpoint_every=2)
    calls = []
    train(init_weights(TINY, seed=0), pairs, cfg,
          checkpoint_dir=str(tmp_path),
          checkpoint_writer=lambda w, p: calls.append(p))
    assert [os.path.basename(p) for p in calls] == [
        "epoch0002.wts", "epoch0004.wts"]


# --------------------------------------------------------------------------
# dataset loading

def write_pair_dirs(tmp_path, names, shape=(3, 10, 12)):
    deg_dir = tmp_path / "degraded"
    cln_dir = tmp_path / "clean"
    deg_dir.mkdir()
    cln_dir.mkdir()
    rng = np.random.default_rng(0)
    for name in names:
        encode_png(Tensor(rng.random(shape)), deg_dir / name)
        encode_png(Tensor(rng.random(shape)), cln_dir / name)
    return deg_dir, cln_dir


def test_load_pairs_matches_and_pads(tmp_path):
    deg_dir, cln_dir = write_pair_dirs(tmp_path, ["b.png", "a.png", "c.png"])
    dataset = load_pairs(deg_dir, cln_dir)
    assert [s.name for s in dataset] == ["a.png", "b.png", "c.png"]
    for s in dataset:
        # 10x12 reflect-pads up to 12x12
        assert s.degraded.data.shape == (3, 12, 12)
        assert s.clean.data.shape == (3, 12, 12)


def test_load_pairs_empty_dirs_give_empty_dataset(tmp_path):
    deg_dir, cln_dir = write_pair_dirs(tmp_path, [])
    assert load_pairs(deg_dir, cln_dir) == []
    with pytest.raises(ValueError, match="empty"):
        train(init_weights(TINY, seed=0), load_pairs(deg_dir, cln_dir),
              TrainConfig())


def test_load_pairs_orphan_is_named(tmp_path):
    deg_dir, cln_dir = write_pair_dirs(tmp_path, ["a.png", "b.png"])
    (cln_dir / "b.png").unlink()
    with pytest.raises(ValueError, match="b.png"):
        load_pairs(deg_dir, cln_dir)


def test_load_pairs_extent_mismatch_is_named(tmp_path):
    deg_dir, cln_dir = write_pair_dirs(tmp_path, ["a.png"])
    encode_png(Tensor(np.zeros((3, 8, 8))), cln_dir / "a.png")
    with pytest.raises(ValueError, match="a.png"):
        load_pairs(deg_dir, cln_dir)


def test_load_pairs_rejects_undecodable_file(tmp_path):
    deg_dir, cln_dir = write_pair_dirs(tmp_path, ["a.png"])
    (deg_dir / "a.png").write_bytes(b"not a png at all")
    with pytest.raises(ValueError, match="cannot decode"):
        load_pairs(deg_dir, cln_dir)
