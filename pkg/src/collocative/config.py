"""INI-backed run configuration shared by the pipeline and the command line."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigParseError, DataError, InvalidParams
from .evidence.selection import EVALUATORS
from .network import LR_SCHEDULES, ModelConfig
from .signal import SyntheticParams
from .tensor import METRICS, MULTI_VIEW, ViewSpec


def benchmark_synth():
    """Generator settings of the reference synthetic dataset (noisy, with timing variability)."""
    return SyntheticParams(noise_std=0.05, rr_jitter=0.015, beat_jitter=0.01,
                           amplitude_jitter=0.05)


@dataclass
class RunConfig:
    manifest: Path | None = None
    out_dir: Path = Path("collo-out")
    segments: int = 64
    views: tuple = MULTI_VIEW
    widths: tuple = (8, 16, 32, 64)
    kernel_size: int = 3
    pool: int = 2
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 20
    batch_size: int = 32
    lr_schedule: str = "cosine"
    dtype: str = "float32"
    use_cag: bool = True
    cag_alpha: float = 0.25
    cag_beta: float = 0.0
    cag_gamma: float = 0.5
    cag_period: float | None = None  # None: estimate from the training signals
    folds: int = 10
    seed: int = 0
    t_max: int = 10
    h_max: int = 6
    evaluator: str = "accuracy"
    heldout: float = 0.2
    forest_rounds: int = 30
    train_final: bool = True
    synth: SyntheticParams = field(default_factory=benchmark_synth)
    synth_count: int = 200

    def __post_init__(self):
        self.views = tuple(v if isinstance(v, ViewSpec) else ViewSpec.parse(v) for v in self.views)
        self.widths = tuple(int(w) for w in self.widths)
        if self.manifest is not None:
            self.manifest = Path(self.manifest)
        self.out_dir = Path(self.out_dir)
        if not self.views:
            raise InvalidParams("view list is empty")
        for name in ("segments", "epochs", "batch_size", "folds", "t_max", "h_max", "synth_count"):
            if getattr(self, name) < 1:
                raise InvalidParams(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise InvalidParams("learning_rate must be positive")
        if not 0 < self.heldout < 1:
            raise InvalidParams("heldout must lie in (0, 1)")
        if self.evaluator not in EVALUATORS:
            raise InvalidParams(f"evaluator must be one of {EVALUATORS}")
        if self.lr_schedule not in LR_SCHEDULES:
            raise InvalidParams(f"lr_schedule must be one of {LR_SCHEDULES}")
        self.model_config(0)  # validates the architecture against the segment count

    def model_config(self, seed, period=None):
        period = self.cag_period if period is None else period
        return ModelConfig(
            input_size=self.segments,
            in_channels=len(self.views),
            widths=self.widths,
            kernel_size=self.kernel_size,
            pool=self.pool,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=int(seed),
            use_cag=self.use_cag,
            cag_init=(self.cag_alpha, self.cag_beta, self.cag_gamma,
                      12.0 if period is None else float(period)),
            dtype=self.dtype,
            lr_schedule=self.lr_schedule,
        )

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def default_manifest(self):
        return Path(self.out_dir) / "data" / "manifest.csv"

    def require_manifest(self):
        """The configured manifest, falling back to the one ``synth`` writes."""
        if self.manifest is None:
            fallback = self.default_manifest()
            if not fallback.exists():
                raise DataError(f"no [data] manifest configured and {fallback} does not exist")
            self.manifest = fallback
        if not self.manifest.exists():
            raise DataError(f"{self.manifest}: manifest not found")
        return self.manifest


def derive_seed(root, *path):
    """Child seed for a named sub-task; every random stream descends from ``root``."""
    return int(np.random.SeedSequence([int(root), *path]).generate_state(1)[0])


_SECTIONS = {
    "data": ("manifest", "segments", "views"),
    "model": ("widths", "kernel_size", "pool", "learning_rate", "momentum", "epochs",
              "batch_size", "lr_schedule", "dtype", "use_cag"),
    "cag": ("alpha", "beta", "gamma", "period"),
    "cv": ("folds", "seed"),
    "evidence": ("t_max", "h_max", "evaluator", "heldout", "forest_rounds"),
    "output": ("dir", "train_final"),
    "synth": ("count", "sample_rate", "duration_s", "rr_interval_s", "class_effect",
              "noise_std", "rr_jitter", "beat_jitter", "amplitude_jitter"),
}
_RENAMED = {("cag", "alpha"): "cag_alpha", ("cag", "beta"): "cag_beta",
            ("cag", "gamma"): "cag_gamma", ("cag", "period"): "cag_period",
            ("output", "dir"): "out_dir", ("synth", "count"): "synth_count"}
_SYNTH_KEYS = ("sample_rate", "duration_s", "rr_interval_s", "class_effect", "noise_std",
               "rr_jitter", "beat_jitter", "amplitude_jitter")


def _convert(name, text, base):
    text = text.strip()
    if name in ("manifest", "out_dir"):
        p = Path(text)
        return p if p.is_absolute() else base / p
    if name == "views":
        return tuple(ViewSpec.parse(v.strip()) for v in text.split(",") if v.strip())
    if name == "widths":
        return tuple(int(w) for w in text.split(",") if w.strip())
    if name in ("use_cag", "train_final"):
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "yes", "1", "on")
    if name == "cag_period":
        return None if text.lower() == "auto" else float(text)
    if name in ("lr_schedule", "dtype", "evaluator"):
        return text
    default = next(f.default for f in fields(RunConfig) if f.name == name)
    return type(default)(text) if not isinstance(default, float) else float(text)


def load_config(path=None, text=None):
    """Parse an INI file (or string).  Relative paths resolve against the file's folder."""
    parser = configparser.ConfigParser()
    base = Path(".")
    try:
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise DataError(f"{path}: config file not found")
            parser.read_string(path.read_text(), source=str(path))
            base = path.parent
        elif text is not None:
            parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"{path or '<string>'}: {exc}") from exc
    kw, synth = {}, {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigParseError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigParseError(f"unknown key {key!r} in [{section}]")
            try:
                if section == "synth" and key in _SYNTH_KEYS:
                    synth[key] = float(value) if key != "sample_rate" else int(value)
                else:
                    name = _RENAMED.get((section, key), key)
                    kw[name] = _convert(name, value, base)
            except ValueError as exc:
                raise ConfigParseError(f"[{section}] {key} = {value!r}: {exc}") from exc
    try:
        params = replace(benchmark_synth(), **synth)
        params.validate()
        return RunConfig(synth=params, **kw)
    except InvalidParams as exc:
        raise ConfigParseError(str(exc)) from exc


def dump_config(cfg):
    """INI text that :func:`load_config` maps back to ``cfg``."""
    s = cfg.synth
    period = "auto" if cfg.cag_period is None else repr(float(cfg.cag_period))
    lines = [
        "[data]",
        f"manifest = {'' if cfg.manifest is None else Path(cfg.manifest).resolve()}",
        f"segments = {cfg.segments}",
        f"views = {', '.join(v.name for v in cfg.views)}",
        "",
        "[model]",
        f"widths = {', '.join(str(w) for w in cfg.widths)}",
        f"kernel_size = {cfg.kernel_size}",
        f"pool = {cfg.pool}",
        f"learning_rate = {cfg.learning_rate!r}",
        f"momentum = {cfg.momentum!r}",
        f"epochs = {cfg.epochs}",
        f"batch_size = {cfg.batch_size}",
        f"lr_schedule = {cfg.lr_schedule}",
        f"dtype = {cfg.dtype}",
        f"use_cag = {str(cfg.use_cag).lower()}",
        "",
        "[cag]",
        f"alpha = {cfg.cag_alpha!r}",
        f"beta = {cfg.cag_beta!r}",
        f"gamma = {cfg.cag_gamma!r}",
        f"period = {period}",
        "",
        "[cv]",
        f"folds = {cfg.folds}",
        f"seed = {cfg.seed}",
        "",
        "[evidence]",
        f"t_max = {cfg.t_max}",
        f"h_max = {cfg.h_max}",
        f"evaluator = {cfg.evaluator}",
        f"heldout = {cfg.heldout!r}",
        f"forest_rounds = {cfg.forest_rounds}",
        "",
        "[output]",
        f"dir = {Path(cfg.out_dir).resolve()}",
        f"train_final = {str(cfg.train_final).lower()}",
        "",
        "[synth]",
        f"count = {cfg.synth_count}",
        *(f"{k} = {getattr(s, k)!r}" for k in _SYNTH_KEYS),
    ]
    if cfg.manifest is None:
        lines.pop(1)
    return "\n".join(lines) + "\n"


__all__ = ["RunConfig", "load_config", "dump_config", "derive_seed", "METRICS"]
