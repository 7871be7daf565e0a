"""JSON run configuration: parsing, serialisation and provenance hashing.

Example::

    {
      "levels": [{"label": "5S1/2", "energy": 0.0}, ...],
      "transitions": [{"d": 1.0}, ...],
      "lifetimes": [26.2, 83.0, 112.0],           # ns, null = no decay
      "pulses": {"shape": "square", "ratios": [1, 1, 3], "total_time": 30.0},
      "channels": [{"from": 4, "to": 1, "rate": 0.001}],   # optional override
      "numerics": {"step_divisor": 2000, "samples": 500},  # optional
      "sweep": {"total_times": [...], "ratio_sets": [[...], ...]},  # optional
      "optimize": {"total_time": 30.0, "seeds": [[1, 1, 1]]}        # optional
    }

``pulses`` takes either ``durations`` (ns) or ``ratios`` plus ``total_time``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from . import __version__
from .dynamics import DEFAULT_SAMPLES, DEFAULT_STEP_DIVISOR, DecayChannel
from .model import SHAPES, LadderSystem, ratios_to_durations, rb_default, validate_system

REQUIRED_KEYS = ("levels", "transitions", "lifetimes")
OPTIONAL_KEYS = ("pulses", "channels", "numerics", "sweep", "optimize")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class PulsePlan:
    shape: str = "square"
    durations: tuple[float, ...] | None = None
    ratios: tuple[float, ...] | None = None
    total_time: float | None = None

    def resolve(self) -> list[float]:
        if self.durations is not None:
            return list(self.durations)
        return ratios_to_durations(self.total_time, self.ratios)


@dataclass(frozen=True)
class RunConfig:
    system: LadderSystem
    pulses: PulsePlan | None = None
    channels: tuple[DecayChannel, ...] | None = None
    numerics: dict | None = None
    sweep: dict | None = None
    optimize: dict | None = None

    @property
    def step_divisor(self) -> float:
        return float((self.numerics or {}).get("step_divisor", DEFAULT_STEP_DIVISOR))

    @property
    def samples(self) -> int:
        return int((self.numerics or {}).get("samples", DEFAULT_SAMPLES))

    def without_decay(self) -> "RunConfig":
        chans = None if self.channels is None else ()
        return replace(self, system=self.system.without_decay(), channels=chans)

    def with_step_divisor(self, k: float) -> "RunConfig":
        numerics = dict(self.numerics or {})
        numerics["step_divisor"] = k
        return replace(self, numerics=numerics)

    def config_hash(self) -> str:
        text = json.dumps(to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def provenance(self) -> str:
        return f"ladder-inversion {__version__} config_hash={self.config_hash()}"


def _number(value, path, positive=False, allow_null=False):
    if value is None and allow_null:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if positive and not value > 0:
        raise ConfigError(path, f"must be > 0 (got {value})")
    return float(value)


def _list(value, path, length=None):
    if not isinstance(value, list):
        raise ConfigError(path, f"expected an array, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(value)}")
    return value


def _positive_list(value, path, length=None):
    return tuple(_number(x, f"{path}[{i}]", positive=True)
                 for i, x in enumerate(_list(value, path, length)))


def _parse_pulses(raw, n) -> PulsePlan:
    if not isinstance(raw, dict):
        raise ConfigError("pulses", "expected an object")
    shape = raw.get("shape", "square")
    if shape not in SHAPES:
        raise ConfigError("pulses.shape", f"expected one of {SHAPES}, got {shape!r}")
    if "durations" in raw:
        return PulsePlan(shape, durations=_positive_list(raw["durations"], "pulses.durations", n - 1))
    if "ratios" not in raw:
        raise ConfigError("pulses", "needs 'durations' or 'ratios' with 'total_time'")
    if "total_time" not in raw:
        raise ConfigError("pulses.total_time", "missing key (required with 'ratios')")
    return PulsePlan(shape, ratios=_positive_list(raw["ratios"], "pulses.ratios", n - 1),
                     total_time=_number(raw["total_time"], "pulses.total_time", positive=True))


def _parse_channels(raw, n):
    out = []
    for i, ch in enumerate(_list(raw, "channels")):
        p = f"channels[{i}]"
        if not isinstance(ch, dict):
            raise ConfigError(p, "expected an object")
        for key in ("from", "to", "rate"):
            if key not in ch:
                raise ConfigError(f"{p}.{key}", "missing key")
        src, dst = ch["from"], ch["to"]
        if not (isinstance(src, int) and isinstance(dst, int) and 1 <= dst < src <= n):
            raise ConfigError(p, f"need integer levels with 1 <= to < from <= {n}")
        rate = _number(ch["rate"], f"{p}.rate")
        if rate < 0:
            raise ConfigError(f"{p}.rate", "must be >= 0")
        out.append(DecayChannel(src, dst, rate))
    return tuple(out)


def _parse_numerics(raw):
    if not isinstance(raw, dict):
        raise ConfigError("numerics", "expected an object")
    out = dict(raw)
    if "step_divisor" in raw:
        out["step_divisor"] = _number(raw["step_divisor"], "numerics.step_divisor", positive=True)
    if "samples" in raw:
        s = raw["samples"]
        if isinstance(s, bool) or not isinstance(s, int) or s < 1:
            raise ConfigError("numerics.samples", f"expected a positive integer, got {s!r}")
    return out


def _parse_sweep(raw, n):
    if not isinstance(raw, dict):
        raise ConfigError("sweep", "expected an object")
    out = dict(raw)
    if "total_times" in raw:
        out["total_times"] = list(_positive_list(raw["total_times"], "sweep.total_times"))
    if "ratio_sets" in raw:
        out["ratio_sets"] = [list(_positive_list(r, f"sweep.ratio_sets[{i}]", n - 1))
                             for i, r in enumerate(_list(raw["ratio_sets"], "sweep.ratio_sets"))]
    if "shape" in raw and raw["shape"] not in SHAPES:
        raise ConfigError("sweep.shape", f"expected one of {SHAPES}")
    return out


def _parse_optimize(raw, n):
    if not isinstance(raw, dict):
        raise ConfigError("optimize", "expected an object")
    out = dict(raw)
    if "total_time" in raw:
        out["total_time"] = _number(raw["total_time"], "optimize.total_time", positive=True)
    if "seeds" in raw:
        out["seeds"] = [list(_positive_list(r, f"optimize.seeds[{i}]", n - 1))
                        for i, r in enumerate(_list(raw["seeds"], "optimize.seeds"))]
    return out


def from_dict(raw: dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(key, "missing required key")
    unknown = set(raw) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    levels = _list(raw["levels"], "levels")
    n = len(levels)
    if n < 2:
        raise ConfigError("levels", "need at least 2 levels")
    energies, labels = [], []
    for i, lv in enumerate(levels):
        if not isinstance(lv, dict) or "energy" not in lv:
            raise ConfigError(f"levels[{i}].energy", "missing key")
        energies.append(_number(lv["energy"], f"levels[{i}].energy"))
        labels.append(lv.get("label"))
    d = []
    for i, tr in enumerate(_list(raw["transitions"], "transitions", n - 1)):
        if not isinstance(tr, dict) or "d" not in tr:
            raise ConfigError(f"transitions[{i}].d", "missing key")
        d.append(_number(tr["d"], f"transitions[{i}].d", positive=True))
    lifetimes = tuple(_number(x, f"lifetimes[{i}]", positive=True, allow_null=True)
                      for i, x in enumerate(_list(raw["lifetimes"], "lifetimes", n - 1)))

    if all(lab is None for lab in labels):
        labels = None
    else:
        labels = tuple(f"L{i + 1}" if lab is None else str(lab) for i, lab in enumerate(labels))
    system = LadderSystem(tuple(energies), tuple(d), lifetimes, labels)
    problems = validate_system(system)
    if problems:
        field_name = problems[0].split(":", 1)[0]
        raise ConfigError(field_name, "; ".join(problems))

    return RunConfig(
        system=system,
        pulses=_parse_pulses(raw["pulses"], n) if "pulses" in raw else None,
        channels=_parse_channels(raw["channels"], n) if "channels" in raw else None,
        numerics=_parse_numerics(raw["numerics"]) if "numerics" in raw else None,
        sweep=_parse_sweep(raw["sweep"], n) if "sweep" in raw else None,
        optimize=_parse_optimize(raw["optimize"], n) if "optimize" in raw else None,
    )


def to_dict(cfg: RunConfig) -> dict[str, Any]:
    sys = cfg.system
    if sys.labels is None:
        levels = [{"energy": e} for e in sys.energies]
    else:
        levels = [{"label": lab, "energy": e} for lab, e in zip(sys.labels, sys.energies)]
    out: dict[str, Any] = {
        "levels": levels,
        "transitions": [{"d": d} for d in sys.osc_strengths],
        "lifetimes": [None if math.isinf(t) else t for t in sys.lifetimes],
    }
    if cfg.pulses is not None:
        p = {"shape": cfg.pulses.shape}
        if cfg.pulses.durations is not None:
            p["durations"] = list(cfg.pulses.durations)
        else:
            p["ratios"] = list(cfg.pulses.ratios)
            p["total_time"] = cfg.pulses.total_time
        out["pulses"] = p
    if cfg.channels is not None:
        out["channels"] = [{"from": c.from_level, "to": c.to_level, "rate": c.rate} for c in cfg.channels]
    for key in ("numerics", "sweep", "optimize"):
        val = getattr(cfg, key)
        if val is not None:
            out[key] = val
    return out


def loads(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return from_dict(raw)


def dumps(cfg: RunConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    return loads(text)


def default_config() -> RunConfig:
    return RunConfig(system=rb_default(),
                     pulses=PulsePlan("square", ratios=(1.0, 1.0, 3.0), total_time=30.0))
