"""Command-line surface: decompose/reconstruct, priors, synth, train,
infer, eval, and config printing.

Exit codes: 0 success, 2 bad invocation (argparse), 3 bad data (unreadable
files, config/validation failures, any per-image failure in batch
commands), 4 unexpected internal failure.  All commands are deterministic
given their seed inputs, so repeated runs produce diff-identical outputs.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .config import PRESETS, format_defaults, load_config
from .metrics import evaluate_pair
from .network import BAND_NAMES, init_weights, model_forward
from .pngio import crop_to, decode_png, encode_png, pad_to_multiple
from .priors import KINDS, PatchSpec, channel_prior_map
from .synth import synth_snow
from .training import TrainConfig, compress_schedule, load_pairs, train
from .wavelets import Pyramid, ComplexSubband, dtcwt_forward, dwt2, idtcwt, idwt2
from .weights_io import load_weights, save_weights, weights_from_arrays
from .autodiff import Tensor

DWT_BANDS = ("lh", "hl", "hh")


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _fail(msg):
    raise ValueError(msg)


def _resolve_config(args):
    base = PRESETS[args.preset]()
    if getattr(args, "config", None):
        return load_config(args.config, base)
    return base


def _load_padded(path):
    image = decode_png(path)
    h, w = image.data.shape[1:]
    padded, size = pad_to_multiple(image)
    if padded.data.shape[1:] != (h, w):
        ph, pw = padded.data.shape[1:]
        _warn(f"{path}: padded {h}x{w} to {ph}x{pw} (reflected edges)")
    return padded, size


def _display_map(mag: np.ndarray) -> Tensor:
    """Collapse channels and normalize a magnitude field for a PNG."""
    field = mag.mean(axis=0)
    peak = field.max()
    if peak > 0:
        field = field / peak
    return Tensor(field[None])


# ---------------------------------------------------------------------------
# decompose / reconstruct

def _pyramid_arrays(pyr: Pyramid, original, size):
    items = {"original": original.data,
             "orig_rows": np.float64(size[0]),
             "orig_cols": np.float64(size[1]),
             "low": pyr.lowpass.data}
    for lvl, bands in enumerate(pyr.highpass, start=1):
        for sb in bands:
            token = BAND_NAMES[int(sb.direction)]
            items[f"level{lvl}.b{token}.re"] = sb.real.data
            items[f"level{lvl}.b{token}.im"] = sb.imag.data
    return items


def _dwt_arrays(ll, details, original, size):
    items = {"original": original.data,
             "orig_rows": np.float64(size[0]),
             "orig_cols": np.float64(size[1]),
             "low": ll.data}
    for lvl, det in enumerate(details, start=1):
        for key in DWT_BANDS:
            items[f"level{lvl}.{key}"] = det[key].data
    return items


def cmd_decompose(args):
    image, size = _load_padded(args.image)
    os.makedirs(args.outdir, exist_ok=True)
    rows = []
    if args.transform == "dtcwt":
        pyr = dtcwt_forward(image, args.levels)
        encode_png(_display_map(np.abs(pyr.lowpass.data)),
                   os.path.join(args.outdir, "low.png"))
        rows.append(("0", "low", float((pyr.lowpass.data ** 2).sum())))
        for lvl, bands in enumerate(pyr.highpass, start=1):
            for direction in sorted((sb.direction for sb in bands)):
                sb = pyr.band(lvl - 1, direction)
                token = BAND_NAMES[int(direction)]
                encode_png(_display_map(sb.magnitude()),
                           os.path.join(args.outdir, f"L{lvl}_{token}.png"))
                rows.append((str(lvl), token, sb.energy()))
        items = _pyramid_arrays(pyr, image, size)
    else:
        ll, details = dwt2(image, args.levels)
        encode_png(_display_map(np.abs(ll.data)),
                   os.path.join(args.outdir, "low.png"))
        rows.append(("0", "low", float((ll.data ** 2).sum())))
        for lvl, det in enumerate(details, start=1):
            for key in DWT_BANDS:
                encode_png(_display_map(np.abs(det[key].data)),
                           os.path.join(args.outdir, f"L{lvl}_{key}.png"))
                rows.append((str(lvl), key, float((det[key].data ** 2).sum())))
        items = _dwt_arrays(ll, details, image, size)
    with open(os.path.join(args.outdir, "energy.csv"), "w") as fh:
        fh.write("level,band,energy\n")
        for level, band, energy in rows:
            fh.write(f"{level},{band},{energy!r}\n")
    save_weights(items, os.path.join(args.outdir, "pyramid.wts"))
    print(f"wrote {len(rows)} subband maps to {args.outdir}")
    return 0


def _rebuild_pyramid(arrays):
    """Reassemble either transform's levels from container names."""
    tokens = {v: k for k, v in BAND_NAMES.items()}
    levels = 0
    while any(name.startswith(f"level{levels + 1}.") for name in arrays):
        levels += 1
    if levels == 0:
        _fail("container holds no detail levels")
    if any(name.endswith(".re") for name in arrays):
        highpass = []
        for lvl in range(1, levels + 1):
            bands = []
            for token, direction in tokens.items():
                re = arrays.get(f"level{lvl}.b{token}.re")
                im = arrays.get(f"level{lvl}.b{token}.im")
                if re is None or im is None:
                    _fail(f"container missing subband {token} at level {lvl}")
                bands.append(ComplexSubband(direction=float(direction),
                                            real=Tensor(re), imag=Tensor(im)))
            highpass.append(bands)
        return Pyramid(levels=levels, lowpass=Tensor(arrays["low"]),
                       highpass=highpass), "dtcwt"
    details = []
    for lvl in range(1, levels + 1):
        det = {}
        for key in DWT_BANDS:
            band = arrays.get(f"level{lvl}.{key}")
            if band is None:
                _fail(f"container missing subband {key} at level {lvl}")
            det[key] = Tensor(band)
        details.append(det)
    return (Tensor(arrays["low"]), details), "dwt"


def cmd_reconstruct(args):
    arrays = load_weights(args.pyramid)
    if "low" not in arrays:
        _fail(f"{args.pyramid}: not a decomposition container (no lowpass)")
    rebuilt, transform = _rebuild_pyramid(arrays)
    if transform == "dtcwt":
        image = idtcwt(rebuilt)
    else:
        image = idwt2(*rebuilt)
    if "original" in arrays:
        err = float(np.abs(image.data - arrays["original"]).max())
        print(f"max reconstruction error: {err:.3e}")
    size = (int(arrays["orig_rows"]), int(arrays["orig_cols"])) \
        if "orig_rows" in arrays else image.data.shape[1:]
    encode_png(crop_to(image, size), args.output)
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# priors

def cmd_priors(args):
    run = _resolve_config(args)
    patch = PatchSpec(args.patch) if args.patch else run.patch
    image = decode_png(args.image)
    os.makedirs(args.outdir, exist_ok=True)
    stats = {}
    for kind in KINDS:
        values = channel_prior_map(image, kind, patch).values.data
        encode_png(Tensor(values), os.path.join(args.outdir, f"{kind}.png"))
        stats[kind] = {"mean": float(values.mean()),
                       "min": float(values.min()),
                       "max": float(values.max())}
    with open(os.path.join(args.outdir, "stats.json"), "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(KINDS)} maps to {args.outdir}")
    return 0


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args):
    run = _resolve_config(args)
    names = sorted(f for f in os.listdir(args.cleandir)
                   if f.lower().endswith(".png"))
    if not names:
        _warn(f"no PNG files in {args.cleandir}")
    deg_dir = os.path.join(args.outdir, "degraded")
    cln_dir = os.path.join(args.outdir, "clean")
    os.makedirs(deg_dir, exist_ok=True)
    os.makedirs(cln_dir, exist_ok=True)
    base_seed = args.seed if args.seed is not None else run.snow.rng_seed
    for index, name in enumerate(names):
        clean = decode_png(os.path.join(args.cleandir, name))
        params = dataclasses.replace(run.snow, rng_seed=base_seed + index)
        degraded = synth_snow(clean, params)
        encode_png(clean, os.path.join(cln_dir, name))
        encode_png(degraded, os.path.join(deg_dir, name))
    print(f"wrote {len(names)} pairs to {args.outdir}")
    return 0


# ---------------------------------------------------------------------------
# train

def _train_config(args, base: TrainConfig) -> TrainConfig:
    overrides = {}
    for flag in ("seed", "batch_size", "lambda_ccl", "checkpoint_every"):
        value = getattr(args, flag)
        if value is not None:
            overrides[flag] = value
    epochs = args.epochs if args.epochs is not None else base.epochs
    if args.lr is not None:
        overrides["lr_schedule"] = ((1, epochs, args.lr),)
        overrides["epochs"] = epochs
    elif args.epochs is not None:
        overrides["lr_schedule"] = compress_schedule(base.lr_schedule, epochs)
        overrides["epochs"] = epochs
    return dataclasses.replace(base, **overrides) if overrides else base


def cmd_train(args):
    run = _resolve_config(args)
    tcfg = _train_config(args, run.train)
    dataset = load_pairs(args.degraded, args.clean)
    weights = init_weights(run.net, seed=tcfg.seed)
    os.makedirs(args.outdir, exist_ok=True)
    weights, log = train(weights, dataset, tcfg,
                         checkpoint_dir=args.outdir,
                         checkpoint_writer=save_weights)
    save_weights(weights, os.path.join(args.outdir, "weights.wts"))
    log.write_csv(os.path.join(args.outdir, "loss.csv"))
    for epoch, mean in log.epoch_means:
        print(f"epoch {epoch}: mean loss {mean:.6f} "
              f"lr {tcfg.lr_for_epoch(epoch):g}")
    return 0


# ---------------------------------------------------------------------------
# infer / eval

def cmd_infer(args):
    weights = weights_from_arrays(load_weights(args.weights))
    names = sorted(f for f in os.listdir(args.indir)
                   if f.lower().endswith(".png"))
    os.makedirs(args.outdir, exist_ok=True)
    failures = []
    for name in names:
        try:
            image, size = _load_padded(os.path.join(args.indir, name))
            restored = model_forward(image, weights)
            encode_png(crop_to(restored, size), os.path.join(args.outdir, name))
        except ValueError as exc:
            failures.append(name)
            _warn(f"skipping {name}: {exc}")
    print(f"restored {len(names) - len(failures)} of {len(names)} images")
    return 3 if failures else 0


def cmd_eval(args):
    a_names = sorted(f for f in os.listdir(args.restored)
                     if f.lower().endswith(".png"))
    b_names = sorted(f for f in os.listdir(args.reference)
                     if f.lower().endswith(".png"))
    failures = [n for n in set(a_names) ^ set(b_names)]
    for name in sorted(failures):
        _warn(f"skipping {name}: present in only one directory")
    rows = []
    for name in sorted(set(a_names) & set(b_names)):
        try:
            restored = decode_png(os.path.join(args.restored, name))
            reference = decode_png(os.path.join(args.reference, name))
            report = evaluate_pair(restored, reference)
            rows.append((name, report.psnr_db, report.ssim))
        except ValueError as exc:
            failures.append(name)
            _warn(f"skipping {name}: {exc}")
    with open(args.output, "w") as fh:
        fh.write("name,psnr_db,ssim\n")
        for name, value, ssim in rows:
            fh.write(f"{name},{value!r},{ssim!r}\n")
    if rows:
        finite = [v for _, v, _ in rows if np.isfinite(v)]
        mean_psnr = float(np.mean(finite)) if finite else float("inf")
        print(f"evaluated {len(rows)} pairs; mean PSNR "
              f"{mean_psnr:.2f} dB, mean SSIM "
              f"{float(np.mean([s for _, _, s in rows])):.4f}")
    return 3 if failures else 0


# ---------------------------------------------------------------------------
# config

def cmd_config(args):
    if args.action == "show-defaults":
        print(format_defaults(args.preset))
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file overlaying the preset")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk",
                   help="base settings (default: desk)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wdesnow",
        description="Wavelet-domain snow removal toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose",
                       help="split an image into wavelet subbands")
    p.add_argument("image")
    p.add_argument("outdir")
    p.add_argument("--transform", choices=("dtcwt", "dwt"), default="dtcwt")
    p.add_argument("--levels", type=int, default=1)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct",
                       help="invert a decomposition container back to a PNG")
    p.add_argument("pyramid")
    p.add_argument("output")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("priors", help="export dark/contradict/bright maps")
    p.add_argument("image")
    p.add_argument("outdir")
    p.add_argument("--patch", type=int)
    _add_config_flags(p)
    p.set_defaults(func=cmd_priors)

    p = sub.add_parser("synth", help="degrade clean images with snow")
    p.add_argument("cleandir")
    p.add_argument("outdir")
    p.add_argument("--seed", type=int)
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit the restoration network")
    p.add_argument("degraded")
    p.add_argument("clean")
    p.add_argument("outdir")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float,
                   help="flat learning rate replacing the schedule")
    p.add_argument("--lambda-ccl", type=float, dest="lambda_ccl")
    p.add_argument("--checkpoint-every", type=int, dest="checkpoint_every")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="restore a directory of images")
    p.add_argument("weights")
    p.add_argument("indir")
    p.add_argument("outdir")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="PSNR/SSIM over paired directories")
    p.add_argument("restored")
    p.add_argument("reference")
    p.add_argument("output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("config", help="inspect configuration")
    p.add_argument("action", choices=("show-defaults",))
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.set_defaults(func=cmd_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
