"""Run configuration: a flat, versioned key = value text format.

One assignment per line, ``#`` comments and blank lines ignored.
The first assignment must be ``config_version = 1``.  Unknown keys are
rejected.  ``none`` denotes an unset optional; ``theta_grid`` is a
comma-joined list.  Environment variables are never consulted: a run
is reproducible from the config file and seeds alone.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigError

CONFIG_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    # data
    dataset: str = ""
    label_column: str | None = None  # column name; "x14" etc. when headerless
    delimiter: str = ","
    has_header: bool = True
    train_fraction: float = 0.7
    split_seed: int = 0
    # model: builtin forest or external oracle process
    model: str = "forest"
    oracle_command: str | None = None
    oracle_timeout: float = 30.0
    num_categories: int | None = None  # required for oracle models
    num_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None
    forest_seed: int = 0
    # interpretable features
    q: int = 4
    # perturbation / surrogate fitting
    num_samples: int = 1000
    kernel_width: float | None = None
    ridge_strength: float = 1.0
    explain_seed: int = 0
    # factorization
    k: int = 10
    nmf_max_iters: int = 500
    nmf_tol: float = 1e-5
    nmf_seed: int = 0
    # rule extraction
    r_max: int = 5
    theta_grid: tuple | None = None  # None -> deciles of W's positive entries
    kmeans_restarts: int = 10
    cluster_seed: int = 0
    # output
    out_dir: str = "out"

    def validate(self) -> "RunConfig":
        if not self.dataset:
            raise ConfigError("dataset path is required")
        if self.model not in ("forest", "oracle"):
            raise ConfigError("model must be 'forest' or 'oracle'")
        if self.model == "oracle":
            if not self.oracle_command:
                raise ConfigError("oracle model requires oracle_command")
            if self.num_categories is None:
                raise ConfigError("oracle model requires num_categories")
        if self.model == "forest" and self.label_column is None:
            raise ConfigError("forest model requires label_column")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.q < 2:
            raise ConfigError("q must be >= 2")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.r_max < 1:
            raise ConfigError("r_max must be >= 1")
        if self.theta_grid is not None and len(self.theta_grid) == 0:
            raise ConfigError("theta_grid must not be empty")
        return self


_BOOL_FIELDS = {"has_header"}
_INT_FIELDS = {"split_seed", "num_categories", "num_trees",
               "max_depth", "min_leaf", "features_per_split", "forest_seed",
               "q", "num_samples", "explain_seed", "k", "nmf_max_iters",
               "nmf_seed", "r_max", "kmeans_restarts", "cluster_seed"}
_FLOAT_FIELDS = {"train_fraction", "oracle_timeout", "kernel_width",
                 "ridge_strength", "nmf_tol"}
_OPTIONAL_FIELDS = {"label_column", "oracle_command", "num_categories",
                    "max_depth", "features_per_split", "kernel_width",
                    "theta_grid"}
_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL_FIELDS and raw.lower() == "none":
        return None
    if key in _BOOL_FIELDS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        if key == "theta_grid":
            return tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw


def _format_value(key: str, value) -> str:
    if value is None:
        return "none"
    if key in _BOOL_FIELDS:
        return "true" if value else "false"
    if key == "theta_grid":
        return ",".join(repr(float(v)) for v in value)
    if key in _FLOAT_FIELDS:
        return repr(float(value))
    return str(value)


def parse_config(text: str) -> RunConfig:
    values = {}
    version_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key == "config_version":
            if int(raw.strip()) != CONFIG_VERSION:
                raise ConfigError(f"unsupported config_version {raw.strip()}")
            version_seen = True
            continue
        if not version_seen:
            raise ConfigError("config_version must be the first assignment")
        if key not in _FIELD_NAMES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    if not version_seen:
        raise ConfigError("missing config_version")
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: RunConfig) -> str:
    lines = [f"config_version = {CONFIG_VERSION}"]
    for f in fields(RunConfig):
        lines.append(f"{f.name} = {_format_value(f.name, getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def save_config(config: RunConfig, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_config(config))


def apply_overrides(config: RunConfig, overrides: dict) -> RunConfig:
    """Overlay non-None values (already typed) onto a config."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(changes) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return replace(config, **changes) if changes else config
