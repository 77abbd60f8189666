"""Experiment configuration: flat ``key = value`` files and built-in profiles."""
import os
from dataclasses import dataclass, field, fields

from .datasets import DESK_BURGERS_GRID, FULL_BURGERS_GRID, GridSpec, read_keyvalue
from .errors import ConfigError, ParameterError
from .gan import GanConfig, _fmt_value, _parse_value
from .metrics import DEFAULT_INTERVALS

_BURGERS_DESK = {
    "schema": "burgers",
    "grid": DESK_BURGERS_GRID.format(),
    "norm_ranges": "v=0.2:4.8",
    "recon_grid": DESK_BURGERS_GRID.format(),
    "mode": "gan",
}
_BURGERS_FULL = dict(_BURGERS_DESK, grid=FULL_BURGERS_GRID.format(), norm_ranges="",
                      recon_grid="t=0.2:4.8:0.2;x=0.2:4.8:0.2;v=2.0")

PROFILES = {
    "burgers-desk-rbfc": dict(_BURGERS_DESK, discriminator="rbfc",
                              generator_arch="G(62,128*2,4)", discriminator_arch="D(4,(42,43,43),1)"),
    "burgers-desk-rbf": dict(_BURGERS_DESK, discriminator="rbf",
                             generator_arch="G(62,128*1,4)", discriminator_arch="D(4,128*1,1)"),
    "burgers-desk-gan": dict(_BURGERS_DESK, discriminator="fcn",
                             generator_arch="G(62,64*1,4)", discriminator_arch="D(4,64*1,1)"),
    "burgers-desk-fcn": dict(_BURGERS_DESK, model="regressor", regressor_arch="F(3,32*5,1)"),
    "burgers-full-rbfc": dict(_BURGERS_FULL, discriminator="rbfc",
                               generator_arch="G(62,128*2,4)", discriminator_arch="D(4,(42,43,43),1)"),
    "burgers-full-rbf": dict(_BURGERS_FULL, discriminator="rbf",
                              generator_arch="G(62,1024*1,4)", discriminator_arch="D(4,1024*1,1)"),
    "burgers-full-gan": dict(_BURGERS_FULL, discriminator="fcn",
                              generator_arch="G(62,64*1,4)", discriminator_arch="D(4,64*1,1)"),
    "burgers-full-fcn": dict(_BURGERS_FULL, model="regressor", regressor_arch="F(3,32*5,1)"),
    "cylinder-cgan": dict(schema="cylinder", mode="cgan", discriminator="fcn",
                          generator_arch="G(62,512*1,4)", discriminator_arch="D(7,512*1,1)"),
    "cylinder-rbf": dict(schema="cylinder", mode="cgan", discriminator="rbf",
                         generator_arch="G(62,512*2,4)", discriminator_arch="D(7,512*1,1)"),
    "cylinder-rbfc": dict(schema="cylinder", mode="cgan", discriminator="rbfc",
                          generator_arch="G(62,128*3,4)", discriminator_arch="D(7,(42,43,43),1)"),
    "cylinder-fcn": dict(schema="cylinder", model="regressor", regressor_arch="F(3,32*5,4)"),
    "m6-cgan": dict(schema="m6", mode="cgan", discriminator="fcn",
                    generator_arch="G(62,512,9)", discriminator_arch="D(12,512,1)"),
    "m6-rbf": dict(schema="m6", mode="cgan", discriminator="rbf",
                   generator_arch="G(62,512,9)", discriminator_arch="D(12,512,1)"),
    "m6-rbfc": dict(schema="m6", mode="cgan", discriminator="rbfc",
                    generator_arch="G(62,128,9)", discriminator_arch="D(12,(42,43,43),1)"),
    "m6-fcn": dict(schema="m6", model="regressor", regressor_arch="F(3,32*5,9)"),
}


@dataclass
class ExperimentConfig:
    name: str = ""
    profile: str = ""
    model: str = "gan"
    schema: str = "burgers"
    data: str = ""
    design_dim: int = 0
    grid: str = DESK_BURGERS_GRID.format()
    family: str = "hump"
    norm_ranges: str = ""
    split: str = "8:1:1"
    split_seed: int = 0
    eval_split: str = "test"
    intervals: str = ",".join(f"{a}:{b}" for a, b in DEFAULT_INTERVALS)
    coverage_column: str = "u"
    coverage_threshold: float = 2.0
    recon_grid: str = ""
    recon_samples: int = 20000
    recon_neighbors: int = 8
    record_timing: bool = False
    gan: GanConfig = field(default_factory=GanConfig)

    def __post_init__(self):
        if self.model not in ("gan", "regressor"):
            raise ConfigError(f"model must be 'gan' or 'regressor', got {self.model!r}")
        if self.eval_split not in ("train", "val", "test"):
            raise ConfigError(f"eval_split must be train, val or test, got {self.eval_split!r}")
        if self.data and not os.path.isfile(self.data):
            raise ConfigError(f"data file {self.data!r} does not exist")
        if self.recon_samples < 1 or self.recon_neighbors < 1:
            raise ConfigError("recon_samples and recon_neighbors must be positive")
        try:
            self.split_ratios()
            self.interval_list()
            self.norm_range_map()
            if self.schema == "burgers" and not self.data:
                GridSpec.parse(self.grid)
            if self.recon_grid:
                GridSpec.parse(self.recon_grid)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    def split_ratios(self):
        try:
            vals = tuple(float(s) for s in self.split.split(":"))
        except ValueError:
            raise ConfigError(f"split must look like 8:1:1, got {self.split!r}") from None
        if len(vals) != 3 or min(vals) <= 0:
            raise ConfigError(f"split must be three positive ratios, got {self.split!r}")
        return vals

    def interval_list(self):
        out = []
        for part in filter(None, (p.strip() for p in self.intervals.split(","))):
            try:
                lo, hi = (int(s) for s in part.split(":"))
            except ValueError:
                raise ConfigError(f"bad interval {part!r}; expected lo:hi") from None
            out.append((lo, hi))
        return out

    def norm_range_map(self):
        out = {}
        for part in filter(None, (p.strip() for p in self.norm_ranges.split(";"))):
            try:
                name, rng = part.split("=")
                lo, hi = (float(s) for s in rng.split(":"))
            except ValueError:
                raise ConfigError(f"bad norm range {part!r}; expected name=lo:hi") from None
            out[name.strip()] = (lo, hi)
        return out

    def to_mapping(self):
        out = {}
        for f in fields(self):
            if f.name == "gan":
                continue
            out[f.name] = _fmt_value(getattr(self, f.name))
        out.update(self.gan.to_mapping())
        return out

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())


_OWN_KEYS = {f.name: f.type for f in fields(ExperimentConfig) if f.name != "gan"}
_GAN_KEYS = {f.name: f.type for f in fields(GanConfig)}


def resolve_config(path=None, profile=None, overrides=None):
    """Merge profile defaults, a config file and explicit overrides (in that order)."""
    try:
        file_kv = read_keyvalue(path) if path else {}
    except (OSError, ParameterError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    profile = profile or file_kv.get("profile", "")
    merged = {}
    if profile:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; available: {sorted(PROFILES)}")
        merged.update(PROFILES[profile])
        merged["profile"] = profile
    merged.update(file_kv)
    if profile:
        merged["profile"] = profile
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    own, gan = {}, {}
    for k, v in merged.items():
        if k in _OWN_KEYS:
            own[k] = _parse_value(_OWN_KEYS[k], v, k)
        elif k in _GAN_KEYS:
            gan[k] = _parse_value(_GAN_KEYS[k], v, k)
        else:
            raise ConfigError(f"unknown config key {k!r}")
    if "split_seed" not in own and "seed" in gan:
        own["split_seed"] = gan["seed"]
    if not own.get("name"):
        own["name"] = profile or "run"
    return ExperimentConfig(gan=GanConfig(**gan), **own)
