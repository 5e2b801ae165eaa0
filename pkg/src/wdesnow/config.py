"""JSON run configuration: one document covering the network, training,
snow generator, and prior-window settings.

A config file supplies any subset of the keys; everything unspecified
falls back to the preset's defaults.  Unknown section or field names are
collected and rejected in one error so a typo never silently reverts a
value to its default.
"""

import dataclasses
import json

from .network import NetConfig
from .priors import PatchSpec
from .synth import SnowParams
from .training import PAPER_SCHEDULE, TrainConfig


@dataclasses.dataclass(frozen=True)
class RunConfig:
    net: NetConfig
    train: TrainConfig
    snow: SnowParams
    patch: PatchSpec


_SECTIONS = {"net": NetConfig, "train": TrainConfig,
             "snow": SnowParams, "patch": PatchSpec}


def default_config() -> RunConfig:
    """Desk-scale defaults: narrow model, small batches."""
    return RunConfig(net=NetConfig(toy_scale_factor=8),
                     train=TrainConfig(),
                     snow=SnowParams(),
                     patch=PatchSpec())


def paper_config() -> RunConfig:
    """Full-scale settings: wide model, batch 16, 100-epoch decay schedule."""
    return RunConfig(net=NetConfig(),
                     train=TrainConfig(batch_size=16, epochs=100,
                                       lr_schedule=PAPER_SCHEDULE),
                     snow=SnowParams(),
                     patch=PatchSpec())


PRESETS = {"desk": default_config, "paper": paper_config}


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def config_from_dict(data: dict, base: RunConfig = None) -> RunConfig:
    """Overlay a parsed JSON document on `base` (desk defaults if omitted)."""
    if base is None:
        base = default_config()
    if not isinstance(data, dict):
        raise ValueError(f"config root must be an object, got {type(data).__name__}")
    bad = [f"{name}" for name in data if name not in _SECTIONS]
    sections = {}
    for name, cls in _SECTIONS.items():
        overrides = data.get(name, {})
        if not isinstance(overrides, dict):
            raise ValueError(f"config section {name!r} must be an object")
        known = {f.name for f in dataclasses.fields(cls)}
        bad.extend(f"{name}.{key}" for key in overrides if key not in known)
        sections[name] = {k: _tuplify(v) for k, v in overrides.items()
                          if k in known}
    if bad:
        raise ValueError(f"unknown config keys: {', '.join(sorted(bad))}")
    return RunConfig(**{
        name: dataclasses.replace(getattr(base, name), **sections[name])
        for name in _SECTIONS})


def config_to_dict(config: RunConfig) -> dict:
    return {name: dataclasses.asdict(getattr(config, name))
            for name in _SECTIONS}


def load_config(path, base: RunConfig = None) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data, base)


def format_defaults(preset: str = "desk") -> str:
    """Render a preset's full settings as pretty-printed JSON."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; "
                         f"choose from {sorted(PRESETS)}")
    return json.dumps(config_to_dict(PRESETS[preset]()), indent=2)
