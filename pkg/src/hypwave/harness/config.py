"""Strict JSON run configuration.

Every field has a default; unknown keys are rejected so that a misspelt
setting can never silently fall back to its default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

SCENARIOS = (
    "linear_dispersal",
    "defocus_radial_scatter",
    "focus_small_data",
    "focus_negative_energy",
    "morawetz_budget",
    "strichartz_region",
    "pointwise_bound",
)

# natural sign of the nonlinearity per scenario, used when zeta is omitted
SCENARIO_ZETA = {
    "linear_dispersal": 0,
    "focus_small_data": 1,
    "focus_negative_energy": 1,
}
# sign constraints that a scenario cannot run without
REQUIRED_ZETA = {
    "linear_dispersal": 0,
    "defocus_radial_scatter": -1,
    "focus_small_data": 1,
    "focus_negative_energy": 1,
    "morawetz_budget": -1,
}

FAMILIES = {
    "gaussian": {"A": 1.0, "r0": 0.0, "w": 1.0},
    "f_R": {"R": 2.0},
    "spectral_bump": {"lambda0": 4.0, "w": 1.0, "A": 1.0},
    "file": {"path": None},
    "zero": {},
}

DEFAULT_INITIAL = {"family": "gaussian", "A": 1.0, "r0": 0.0, "w": 1.0}
SMALL_INITIAL = {"family": "gaussian", "A": 0.2, "r0": 0.0, "w": 1.0}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class SimConfig:
    n: int = 3
    zeta: int = -1
    r_max: float = 30.0
    n_r: int = 1024
    lambda_max: float = 32.0
    n_lambda: int = 1024
    h: float = 0.01
    t_end: float = 40.0
    callback_stride: int = 50
    initial_data: dict = field(default_factory=lambda: dict(DEFAULT_INITIAL))
    velocity: dict = field(default_factory=lambda: {"family": "zero"})
    scenario: str = "defocus_radial_scatter"
    seed: int = 0
    output_dir: str = "out"
    snapshot_times: tuple = ()
    ensemble_size: int = 50

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        return d

    def checksum(self) -> str:
        """Digest of the normalized config; identifies a run in output headers.

        ``output_dir`` is excluded so the same run written to two places shares a checksum.
        """
        d = self.to_dict()
        del d["output_dir"]
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "SimConfig":
        return parse_dict({**self.to_dict(), **changes})


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SimConfig))


def emit(cfg: SimConfig) -> str:
    """Canonical JSON rendering; ``emit(parse(emit(c)))`` is a fixed point."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)


def _number(d: dict, key: str, *, integer: bool = False) -> float | int:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{key} must be an integer")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    return float(v)


def _descriptor(raw, key: str, default: dict) -> dict:
    if raw is None:
        raw = default
    if not isinstance(raw, dict):
        raise ConfigError(f"{key} must be an object")
    family = raw.get("family", default["family"])
    if family not in FAMILIES:
        raise ConfigError(f"{key}.family must be one of {sorted(FAMILIES)}, got {family!r}")
    params = FAMILIES[family]
    unknown = sorted(set(raw) - set(params) - {"family"})
    if unknown:
        raise ConfigError(f"{key}: unknown key(s) {unknown} for family {family!r}")
    out = {"family": family}
    for name, value in params.items():
        v = raw.get(name, value)
        if name == "path":
            if not isinstance(v, str):
                raise ConfigError(f"{key}.path is required for family 'file'")
            if not Path(v).is_file():
                raise ConfigError(f"{key}.path: file not found: {v}")
            out[name] = v
            continue
        out[name] = _number({f"{key}.{name}": v}, f"{key}.{name}")
    if family == "gaussian" and out["w"] <= 0:
        raise ConfigError(f"{key}.w must be positive")
    if family == "spectral_bump" and out["w"] <= 0:
        raise ConfigError(f"{key}.w must be positive")
    if family == "f_R" and out["R"] <= 0:
        raise ConfigError(f"{key}.R must be positive")
    return out


def parse_dict(raw: dict) -> SimConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    d = {f.name: (f.default if f.default is not dataclasses.MISSING else f.default_factory())
         for f in dataclasses.fields(SimConfig)}
    d.update(raw)

    scenario = d["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}")
    if "zeta" not in raw:
        d["zeta"] = SCENARIO_ZETA.get(scenario, -1)
    if "initial_data" not in raw and scenario == "focus_small_data":
        d["initial_data"] = dict(SMALL_INITIAL)

    n = _number(d, "n", integer=True)
    if n not in (3, 4, 5):
        raise ConfigError("n must be 3, 4, or 5")
    zeta = _number(d, "zeta", integer=True)
    if zeta not in (-1, 0, 1):
        raise ConfigError("zeta must be -1, 0, or 1")
    if scenario in REQUIRED_ZETA and zeta != REQUIRED_ZETA[scenario]:
        raise ConfigError(f"zeta must be {REQUIRED_ZETA[scenario]} for scenario {scenario}")
    r_max = _number(d, "r_max")
    if r_max < 10:
        raise ConfigError("r_max must be >= 10")
    lambda_max = _number(d, "lambda_max")
    if lambda_max < 16:
        raise ConfigError("lambda_max must be >= 16")
    n_r = _number(d, "n_r", integer=True)
    n_lambda = _number(d, "n_lambda", integer=True)
    for key, v in (("n_r", n_r), ("n_lambda", n_lambda)):
        if v < 256:
            raise ConfigError(f"{key} must be >= 256")
    h = _number(d, "h")
    if not 0 < h <= 0.1:
        raise ConfigError("h must be in (0, 0.1]")
    t_end = _number(d, "t_end")
    if not t_end > 0:
        raise ConfigError("t_end must be positive")
    stride = _number(d, "callback_stride", integer=True)
    if stride < 1:
        raise ConfigError("callback_stride must be >= 1")
    seed = _number(d, "seed", integer=True)
    if seed < 0:
        raise ConfigError("seed must be >= 0")
    ensemble = _number(d, "ensemble_size", integer=True)
    if ensemble < 10:
        raise ConfigError("ensemble_size must be >= 10")
    if not isinstance(d["output_dir"], str) or not d["output_dir"]:
        raise ConfigError("output_dir must be a non-empty string")
    snaps = d["snapshot_times"]
    if not isinstance(snaps, (list, tuple)):
        raise ConfigError("snapshot_times must be a list")
    snaps = tuple(sorted(_number({"snapshot_times": s}, "snapshot_times") for s in snaps))
    if any(not 0 <= s <= t_end for s in snaps):
        raise ConfigError("snapshot_times must lie in [0, t_end]")

    return SimConfig(
        n=n, zeta=zeta, r_max=r_max, n_r=n_r, lambda_max=lambda_max, n_lambda=n_lambda, h=h,
        t_end=t_end, callback_stride=stride,
        initial_data=_descriptor(d["initial_data"], "initial_data", DEFAULT_INITIAL),
        velocity=_descriptor(d["velocity"], "velocity", {"family": "zero"}),
        scenario=scenario, seed=seed, output_dir=d["output_dir"], snapshot_times=snaps,
        ensemble_size=ensemble,
    )


def parse_config(text: str) -> SimConfig:
    """Parse and validate JSON text.

    Raises
    ------
    ConfigError
        on malformed JSON, unknown keys, out-of-range values, or missing files.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return parse_dict(raw)


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())
