"""Configuration: defaults, named profiles and experiment config files."""

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ValidationError

SCHEMA_VERSION = 1

# Output locations
DEFAULT_OUTPUT_ROOT = "runs"
OUTPUT_ENV_VAR = "DAN_LAB_OUT"

# Evaluation defaults
DEFAULT_EVAL_SAMPLES = 10000
DEFAULT_MMD_SAMPLES = 2000
DEFAULT_CAPTURE_SIGMAS = 3.0
DEFAULT_MIN_FRAC = 0.02

# 8-Gaussian ring
RING_MODES = 8
RING_RADIUS = 2.0
RING_VARIANCE = 0.01


def _ring_dict():
    from .core.data import ring_mixture
    return ring_mixture(RING_MODES, RING_RADIUS, RING_VARIANCE).to_dict()


@dataclass
class EvalSettings:
    n_samples: int = DEFAULT_EVAL_SAMPLES
    capture_radius_sigmas: float = DEFAULT_CAPTURE_SIGMAS
    capture_min_frac: float = DEFAULT_MIN_FRAC
    mmd_samples: int = DEFAULT_MMD_SAMPLES

    def problems(self):
        found = []
        if self.n_samples < 1:
            found.append(f"eval.n_samples must be at least 1, got {self.n_samples}")
        if self.capture_radius_sigmas <= 0:
            found.append("eval.capture_radius_sigmas must be positive")
        if not 0 <= self.capture_min_frac <= 1:
            found.append("eval.capture_min_frac must lie in [0, 1]")
        if self.mmd_samples < 1:
            found.append("eval.mmd_samples must be at least 1")
        return found


@dataclass
class AnalysisSettings:
    """1-D densities and grid of the gradient weighting study."""

    px: dict = field(default_factory=lambda: {
        "means": [[-2.0], [2.0]], "variances": [0.0625, 0.0625], "weights": [0.5, 0.5],
    })
    pg: dict = field(default_factory=lambda: {
        "means": [[-2.0]], "variances": [0.0625], "weights": [1.0],
    })
    grid_min: float = -4.0
    grid_max: float = 4.0
    grid_points: int = 801
    radius_sigmas: float = 3.0

    def problems(self):
        found = []
        if self.grid_points < 2:
            found.append("analysis.grid_points must be at least 2")
        if not self.grid_max > self.grid_min:
            found.append("analysis.grid_max must exceed analysis.grid_min")
        return found


@dataclass
class ExperimentConfig:
    """Everything one experiment needs; nested sections mirror the JSON file."""

    name: str = "experiment"
    train: object = None
    data: object = None
    noise: object = None
    networks: object = None
    eval: EvalSettings = field(default_factory=EvalSettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    out_dir: str = None

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "train": asdict(self.train),
            "data": self.data.to_dict(),
            "noise": self.noise.to_dict(),
            "networks": asdict(self.networks),
            "eval": asdict(self.eval),
            "analysis": copy.deepcopy(asdict(self.analysis)),
            "out_dir": self.out_dir,
        }


def _section(cls, raw, section, found):
    """Build a dataclass section, reporting unknown keys and bad types."""
    if not isinstance(raw, dict):
        found.append(f"{section} must be a mapping")
        return cls()
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            found.append(f"unknown key {section}.{key}")
    values = {}
    defaults = cls()
    for key, value in raw.items():
        if key not in known:
            continue
        default = getattr(defaults, key)
        if isinstance(default, bool) or default is None:
            values[key] = value
        elif isinstance(default, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if isinstance(value, bool) or not isinstance(value, int):
                found.append(f"{section}.{key} must be an integer, got {value!r}")
                continue
            values[key] = value
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                found.append(f"{section}.{key} must be a number, got {value!r}")
                continue
            values[key] = float(value)
        elif isinstance(default, list):
            if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                found.append(f"{section}.{key} must be a list of numbers, got {value!r}")
                continue
            if any(isinstance(v, float) and not v.is_integer() for v in value):
                found.append(f"{section}.{key} must be a list of integers, got {value!r}")
                continue
            values[key] = [int(v) for v in value]
        else:
            values[key] = value
    return cls(**values)


TOP_LEVEL_KEYS = ("schema_version", "name", "train", "data", "noise", "networks", "eval", "analysis", "out_dir")
REQUIRED_KEYS = ("schema_version", "train")


def parse_config(raw, base=None):
    """
    Build and validate an ExperimentConfig from a parsed JSON mapping.

    Missing optional sections come from base (a config dict), or the
    built-in defaults. Every problem found is reported at once.

    Raises:
        ValidationError: listing every violated field
    """
    from .core.data import MixtureSpec, NoiseSpec
    from .core.training import NetworkDims, TrainConfig

    found = []
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    for key in REQUIRED_KEYS:
        if key not in raw:
            found.append(f"missing required field {key}")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            found.append(f"unknown key {key}")
    if "schema_version" in raw and raw["schema_version"] != SCHEMA_VERSION:
        found.append(f"schema_version must be {SCHEMA_VERSION}, got {raw['schema_version']!r}")

    merged = copy.deepcopy(base) if base else {}
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "data":
            merged[key].update(copy.deepcopy(value))
        else:
            merged[key] = copy.deepcopy(value)

    train = _section(TrainConfig, merged.get("train", {}), "train", found)
    networks = _section(NetworkDims, merged.get("networks", {}), "networks", found)
    eval_settings = _section(EvalSettings, merged.get("eval", {}), "eval", found)
    analysis = _section(AnalysisSettings, merged.get("analysis", {}), "analysis", found)

    data = None
    try:
        raw_data = merged.get("data") or _ring_dict()
        unknown = set(raw_data) - {"means", "variances", "weights"}
        found.extend(f"unknown key data.{k}" for k in sorted(unknown))
        data = MixtureSpec.from_dict(raw_data)
    except ValidationError as e:
        found.extend(f"data: {p}" for p in e.problems)
    except (KeyError, TypeError, ValueError) as e:
        found.append(f"data: malformed mixture ({e})")

    noise = None
    try:
        raw_noise = merged.get("noise") or {"dim": 256}
        unknown = set(raw_noise) - {"dim", "distribution"}
        found.extend(f"unknown key noise.{k}" for k in sorted(unknown))
        noise = NoiseSpec.from_dict(raw_noise)
    except ValidationError as e:
        found.extend(f"noise: {p}" for p in e.problems)
    except (KeyError, TypeError, ValueError) as e:
        found.append(f"noise: malformed spec ({e})")

    found.extend(train.problems())
    found.extend(networks.problems(data.dim if data else None, noise.dim if noise else None))
    found.extend(eval_settings.problems())
    found.extend(analysis.problems())
    for key in ("px", "pg"):
        try:
            MixtureSpec.from_dict(getattr(analysis, key))
        except ValidationError as e:
            found.extend(f"analysis.{key}: {p}" for p in e.problems)
        except (KeyError, TypeError, ValueError) as e:
            found.append(f"analysis.{key}: malformed mixture ({e})")

    if found:
        raise ValidationError(found)
    return ExperimentConfig(
        name=str(merged.get("name", "experiment")),
        train=train,
        data=data,
        noise=noise,
        networks=networks,
        eval=eval_settings,
        analysis=analysis,
        out_dir=merged.get("out_dir"),
    )


def _profile(name, **train):
    cfg = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "train": {
            "iterations": 25000,
            "batch_size": 512,
            "k": 1,
            "lr": 1e-4,
            "beta1": 0.5,
            "lambda1": 0.0,
            "lambda2": 1.0,
            "snapshot_every": 1000,
        },
        "data": _ring_dict(),
        "noise": {"dim": 256, "distribution": "uniform"},
        "networks": {
            "generator": [256, 128, 128, 128, 2],
            "discriminator": [2, 32, 32, 32, 1],
            "phi": [2, 32, 32],
            "head": [32, 32, 1],
            "generator_out_act": "none",
        },
    }
    cfg["train"].update(train)
    return cfg


PROFILES = {
    "gauss8-gan": lambda: _profile("gauss8-gan", xi="gan", lambda1=1.0, lambda2=0.0),
    "gauss8-dan-s": lambda: _profile("gauss8-dan-s", xi="S"),
    "gauss8-dan-2s": lambda: _profile("gauss8-dan-2s", xi="2S"),
    "gauss8-dan-s-mixed": lambda: _profile("gauss8-dan-s-mixed", xi="S", lambda1=1.0, lambda2=0.2),
    "fig1": lambda: _profile("fig1", xi="S"),
}


def profile_dict(name):
    try:
        return PROFILES[name]()
    except KeyError:
        raise ValidationError(f"unknown profile {name!r} (known: {', '.join(PROFILES)})") from None


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read config {path}: {e}") from e


def load_config(source):
    """
    Load an ExperimentConfig from a profile name or a JSON file path.

    A file may name a profile under "name"; its sections then override the
    profile's values.
    """
    if source in PROFILES:
        return parse_config(profile_dict(source))
    raw = read_json(source)
    base = PROFILES[raw["name"]]() if isinstance(raw, dict) and raw.get("name") in PROFILES else None
    return parse_config(raw, base=base)


def save_config(cfg, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(cfg.to_dict(), f, indent=2)
        f.write("\n")
    return path


def with_seed(cfg, seed):
    """Copy of cfg with train.seed replaced."""
    raw = cfg.to_dict()
    raw["train"]["seed"] = int(seed)
    return parse_config(raw)


@dataclass
class SweepSpec:
    """A base experiment run once per seed, with optional per-seed overrides."""

    base: ExperimentConfig
    seeds: list
    overrides: dict = field(default_factory=dict)
    parallelism: int = 1

    def run_config(self, seed):
        raw = self.base.to_dict()
        raw["train"]["seed"] = int(seed)
        for section, values in self.overrides.get(str(seed), {}).items():
            if isinstance(values, dict) and isinstance(raw.get(section), dict):
                raw[section].update(values)
            else:
                raw[section] = values
        return parse_config(raw)


SWEEP_KEYS = ("schema_version", "base", "seeds", "overrides", "parallelism")


def parse_sweep(raw):
    found = []
    if not isinstance(raw, dict):
        raise ValidationError("sweep spec must be a JSON object")
    for key in raw:
        if key not in SWEEP_KEYS:
            found.append(f"unknown key {key}")
    for key in ("schema_version", "base", "seeds"):
        if key not in raw:
            found.append(f"missing required field {key}")
    if found:
        raise ValidationError(found)

    base_raw = raw["base"]
    base = load_config(base_raw) if isinstance(base_raw, str) else parse_config(
        base_raw, base=PROFILES[base_raw["name"]]() if base_raw.get("name") in PROFILES else None
    )
    seeds = raw["seeds"]
    if not isinstance(seeds, list) or not seeds or any(not isinstance(s, int) or isinstance(s, bool) for s in seeds):
        found.append("seeds must be a non-empty list of integers")
    elif len(set(seeds)) != len(seeds):
        found.append("seeds must be distinct")
    parallelism = raw.get("parallelism", 1)
    if not isinstance(parallelism, int) or parallelism < 1:
        found.append(f"parallelism must be at least 1, got {parallelism!r}")
    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        found.append("overrides must map seeds to config sections")
    if found:
        raise ValidationError(found)
    spec = SweepSpec(base=base, seeds=list(seeds), overrides=overrides, parallelism=parallelism)
    for seed in spec.seeds:
        spec.run_config(seed)
    return spec


def load_sweep(path):
    return parse_sweep(read_json(path))
