"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import ConfigError, InvalidArgument

EXPERIMENTS = ("spectrum", "compare", "factorize", "douglas", "dichotomy", "multiplier", "codim", "paper-suite")
FAMILIES = ("tikhonov", "cutoff", "spectral_cutoff", "landweber")

# operators each experiment needs: (min, max)
ARITY = {
    "spectrum": (1, None),
    "compare": (2, 2),
    "factorize": (2, 2),
    "douglas": (2, 2),
    "dichotomy": (2, 2),
    "multiplier": (2, 2),
    "codim": (1, 1),
    "paper-suite": (0, 0),
}

DEFAULT_LEVELS = {"douglas": (64, 128, 256)}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    ``operators`` are gallery identifiers; for ``multiplier`` they name
    ``M:<fname>`` operators, the first being ``H'``.
    """

    experiment: str
    operators: tuple = ()
    levels: tuple = (256,)
    window: Optional[tuple] = None
    family: str = "tikhonov"
    output_dir: str = "out"
    alphas: Optional[tuple] = None
    rank: Optional[int] = None
    m: int = 2
    precision: Optional[int] = None
    refinement: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "operators": list(self.operators),
            "levels": list(self.levels),
            "window": list(self.window) if self.window else None,
            "family": self.family,
            "alphas": list(self.alphas) if self.alphas else None,
            "rank": self.rank,
            "m": self.m,
            "precision": self.precision,
            "refinement": list(self.refinement) if self.refinement else None,
        }

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return validate(replace(self, **kw))


def _ints(key, text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from None


def _floats(key, text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def parse_window(text: str) -> tuple:
    """``"a:b"`` or ``"a,b"`` -> ``(a, b)``."""
    sep = ":" if ":" in text else ","
    parts = [p.strip() for p in text.split(sep)]
    try:
        a, b = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"window must look like a:b, got {text!r}") from None
    if not 1 <= a <= b:
        raise ConfigError(f"window needs 1 <= a <= b, got {text!r}")
    return (a, b)


def _single_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text. Lines are ``key = value``; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key = key.strip().lower().replace("-", "_")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    if "experiment" not in raw:
        raise ConfigError("missing key 'experiment'")
    kw = {"experiment": raw.pop("experiment")}
    for key, value in raw.items():
        if key == "operators":
            kw[key] = tuple(x.strip() for x in value.split(",") if x.strip())
        elif key == "levels":
            kw[key] = _ints(key, value)
        elif key == "window":
            kw[key] = parse_window(value)
        elif key == "family":
            kw[key] = value
        elif key in ("output_dir", "out"):
            kw["output_dir"] = value
        elif key == "alphas":
            kw[key] = _floats(key, value)
        elif key == "refinement":
            kw[key] = _floats(key, value)
        elif key in ("rank", "m", "precision"):
            kw[key] = _single_int(key, value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    if "levels" not in kw and kw["experiment"] in DEFAULT_LEVELS:
        kw["levels"] = DEFAULT_LEVELS[kw["experiment"]]
    return validate(ExperimentConfig(**kw))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check experiment name, arity, identifiers, levels and family."""
    from .gallery import parse_id

    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
    lo, hi = ARITY[cfg.experiment]
    n = len(cfg.operators)
    if n < lo or (hi is not None and n > hi):
        want = f"exactly {lo}" if lo == hi else f"at least {lo}"
        raise ConfigError(f"{cfg.experiment} needs {want} operator(s), got {n}")
    for ident in cfg.operators:
        try:
            for part in ident.split("*"):
                family, args = parse_id(part)
                if family == "multiplier":
                    from .multipliers import multiplier_from_name

                    multiplier_from_name(args[0])
        except InvalidArgument as exc:
            raise ConfigError(str(exc)) from None
    if cfg.experiment == "multiplier" and not all(op.startswith("M:") and "*" not in op for op in cfg.operators):
        raise ConfigError("multiplier experiment needs two M:<fname> operators")
    if not cfg.levels or any(N < 1 for N in cfg.levels):
        raise ConfigError(f"levels must be positive, got {cfg.levels}")
    if any(b <= a for a, b in zip(cfg.levels, cfg.levels[1:])):
        raise ConfigError(f"levels must be increasing, got {cfg.levels}")
    if cfg.family not in FAMILIES:
        raise ConfigError(f"unknown family {cfg.family!r}; expected tikhonov, cutoff or landweber")
    if cfg.rank is not None and cfg.rank < 1:
        raise ConfigError("rank must be positive")
    if cfg.m < 1:
        raise ConfigError("m must be positive")
    if cfg.precision is not None and cfg.precision < 53:
        raise ConfigError("precision must be at least 53 bits")
    return cfg
