"""Sweep configuration: JSON files, presets and grid expansion."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError

MODELS = ("gmm", "mlm", "nc")
DEFAULT_TRIALS = 20
FULL_TRIALS = 100

# Axes a grid may vary.  ``mu_scale`` is ||mu|| / sqrt(p); ``mu_norm`` is the
# absolute mean norm.  ``m``, ``q``, ``r`` select a bi-level MLM spectrum (in
# which case ``p`` is derived from ``n`` and ``m``).
AXES = ("k", "mu_scale", "mu_norm", "m", "q", "r", "p", "n")


@dataclass
class SweepConfig:
    experiment: str
    model: str
    grid: dict
    trials: int = DEFAULT_TRIALS
    base_seed: int = 0
    interp_tol: float = 1e-6
    solver_tol: float = 1e-8
    n_test: int = 0
    balanced: bool = False
    constants: dict = field(default_factory=lambda: {"C1": 1.0, "C2": 1.0, "C3": 1.0, "C4": 1.0})
    timing: bool = False
    output: str = "sweep.csv"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not isinstance(self.grid, dict) or not self.grid:
            raise ConfigError("grid must be a non-empty mapping of axis -> values")
        unknown = set(self.grid) - set(AXES)
        if unknown:
            raise ConfigError(f"unknown grid axes: {sorted(unknown)}")
        for axis, values in self.grid.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"grid axis {axis!r} needs a non-empty list")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if self.n_test < 0:
            raise ConfigError("n_test must be >= 0")
        bilevel = {"m", "q", "r"} & set(self.grid)
        if bilevel and (self.model != "mlm" or bilevel != {"m", "q", "r"}):
            raise ConfigError("bi-level axes m, q, r go together and only with model 'mlm'")
        need = {"n", "k"} | (set() if bilevel else {"p"})
        missing = need - set(self.grid)
        if missing:
            raise ConfigError(f"grid is missing axes {sorted(missing)}")
        if self.model == "gmm" and not ({"mu_scale", "mu_norm"} & set(self.grid)):
            raise ConfigError("gmm grids need mu_scale or mu_norm")
        for point in self.points():
            _check_point(self.model, point)

    def points(self) -> list[dict]:
        """Cartesian product in the fixed axis order of ``AXES``."""
        axes = [a for a in AXES if a in self.grid]
        out = []
        for combo in itertools.product(*(self.grid[a] for a in axes)):
            out.append(dict(zip(axes, combo)))
        return out

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _check_point(model, point) -> None:
    n, k = int(point["n"]), int(point["k"])
    if n < 1 or k < 2:
        raise ConfigError(f"need n >= 1 and k >= 2 at {point}")
    if "p" in point and int(point["p"]) < k:
        raise ConfigError(f"need p >= k at {point}")
    if model == "nc" and n % k:
        raise ConfigError(f"nc points need n divisible by k at {point}")


def load_config(path, overrides: dict | None = None) -> SweepConfig:
    """Read a JSON config; ``overrides`` (non-None values) win over the file."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(raw, overrides)


def from_dict(raw: dict, overrides: dict | None = None) -> SweepConfig:
    known = {f.name for f in fields(SweepConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    try:
        return SweepConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _n_range(lo, hi, step):
    return list(range(lo, hi + 1, step))


def preset(name: str, paper_scale: bool = False) -> SweepConfig:
    """Built-in sweep configurations by name."""
    trials = FULL_TRIALS if paper_scale else DEFAULT_TRIALS
    table = {
        "support-gmm-a": dict(
            model="gmm",
            grid={"k": [4, 7], "mu_scale": [0.2, 0.3, 0.4], "p": [1000], "n": _n_range(10, 100, 10)},
        ),
        "support-gmm-b": dict(
            model="gmm",
            grid={"k": [3, 6], "mu_scale": [0.2, 0.3, 0.4], "p": [1000], "n": _n_range(10, 100, 10)},
        ),
        "support-mlm": dict(
            model="mlm",
            grid={"k": [3, 4, 5, 6], "mu_scale": [1.0], "p": [1000], "n": _n_range(10, 100, 10)},
        ),
        "benign-gmm-a": dict(
            model="gmm",
            n_test=10_000,
            grid={"k": [4], "mu_scale": [0.2, 0.3, 0.4], "p": [50, 100, 200, 400, 600, 800, 1000, 1200], "n": [40]},
        ),
        "benign-gmm-b": dict(
            model="gmm",
            n_test=10_000,
            grid={"k": [6], "mu_scale": [0.2, 0.3, 0.4], "p": [50, 100, 200, 400, 600, 800, 1000, 1200], "n": [30]},
        ),
        "benign-mlm-bilevel": dict(
            model="mlm",
            n_test=20_000,
            grid={"k": [3], "m": [1.7], "q": [0.2, 0.5, 0.8], "r": [0.5], "n": [20, 40, 80]},
        ),
        "neural-collapse": dict(
            model="nc",
            grid={"k": [3, 4, 8], "p": [16], "n": [24, 48]},
        ),
    }
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(table)}")
    return SweepConfig(experiment=name, trials=trials, output=f"{name}.csv", **table[name])


PRESETS = (
    "support-gmm-a",
    "support-gmm-b",
    "support-mlm",
    "benign-gmm-a",
    "benign-gmm-b",
    "benign-mlm-bilevel",
    "neural-collapse",
)


def resolve_mu_norm(point: dict, p: int) -> float:
    if "mu_norm" in point:
        return float(point["mu_norm"])
    if "mu_scale" in point:
        return float(point["mu_scale"]) * math.sqrt(p)
    return math.nan
