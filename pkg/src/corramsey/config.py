"""Run configuration: typed key-value parameters, config files, round trips."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .model import Param, ValidationError

COMMANDS = ("phase", "fisher", "gain", "sweep", "figure", "simulate", "estimate")
FORMATS = ("csv", "json")
SCHEMA_VERSION = "1"

FLOAT_KEYS = {"omega", "xi", "phi", "tau_r", "tau_o", "tau", "t2_star", "dd_exponent",
              "t1_cap", "t2_dd", "t_start", "total_time", "delta"}
INT_KEYS = {"n", "m", "trials", "resolution", "refine_steps", "n_phases"}
BOOL_KEYS = {"phase_average"}
CHOICE_KEYS = {
    "protocol": ("ramsey", "dd"),
    "kind": ("exact", "approx"),
    "target": ("phase_ramsey", "phase_dd", "fisher_ramsey", "fisher_dd", "fisher_approx_nr",
               "fisher_approx_dd", "gain_exact", "gain_approx"),
    "preset": ("fig2a", "fig2b", "fig3a", "fig3b", "fig3c"),
}
TEXT_KEYS = {"trace", "estimate", "x_axis", "y_axis", "bounds_omega", "bounds_xi", "bounds_phi"}

SIGNAL_KEYS = {"omega", "xi", "phi"}
NOISE_KEYS = {"t2_star", "dd_exponent", "t1_cap", "t2_dd"}
RAMSEY_KEYS = {"tau_r", "tau_o", "n", "total_time"}
DD_KEYS = {"m", "tau"}

ALLOWED = {
    "phase": {"protocol", "t_start", "delta"} | SIGNAL_KEYS | {"tau_r"} | DD_KEYS,
    "fisher": ({"protocol", "kind", "param", "phase_average", "t_start", "n_phases"}
               | SIGNAL_KEYS | NOISE_KEYS | RAMSEY_KEYS | DD_KEYS),
    "gain": {"kind", "param", "n_phases"} | SIGNAL_KEYS | NOISE_KEYS | {"tau_r", "tau_o"} | DD_KEYS,
    "figure": {"preset", "resolution", "n_phases"},
    "simulate": SIGNAL_KEYS | NOISE_KEYS | {"tau_r", "tau_o", "n"},
    "estimate": ({"trace", "trials", "estimate", "resolution", "refine_steps",
                  "bounds_omega", "bounds_xi", "bounds_phi"}
                 | SIGNAL_KEYS | NOISE_KEYS | {"tau_r", "tau_o", "n"}),
}
ALLOWED["sweep"] = ({"target", "x_axis", "y_axis"} | ALLOWED["fisher"] | ALLOWED["gain"]
                    | ALLOWED["phase"]) - {"protocol", "kind"}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_value(key: str, raw):
    """Convert one raw (string or JSON) value to its typed form."""
    try:
        if key in FLOAT_KEYS:
            value = float(raw)
            if math.isnan(value):
                raise ValueError
            return value
        if key in INT_KEYS:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw)
        if key in BOOL_KEYS:
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError
        if key == "param":
            return int(Param.coerce(raw))
        if key in CHOICE_KEYS:
            if raw not in CHOICE_KEYS[key]:
                raise ValidationError(key, f"{key} must be one of {', '.join(CHOICE_KEYS[key])}")
            return raw
        if key in TEXT_KEYS:
            return str(raw)
    except ValidationError:
        raise
    except (TypeError, ValueError):
        raise ValidationError(key, f"invalid value {raw!r} for {key}") from None
    raise ValidationError(key, f"unknown key {key!r}")


def parse_parameters(command: str, raw: dict) -> dict:
    allowed = ALLOWED[command]
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValidationError(unknown[0], f"unknown key(s) for {command}: {', '.join(unknown)}")
    return {key: parse_value(key, value) for key, value in raw.items()}


def parse_assignments(items) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValidationError("parameters", f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


@dataclass
class RunConfig:
    """Everything that determines a command's output.

    ``out`` and ``threads`` only affect where and how fast results are
    produced, never their content, so they are excluded from comparisons
    and from the copy echoed into output files.
    """

    command: str
    parameters: dict = field(default_factory=dict)
    format: str = "csv"
    seed: Optional[int] = None
    strict: bool = False
    out: Optional[str] = field(default=None, compare=False)
    threads: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError("command", f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ValidationError("format", f"format must be one of {', '.join(FORMATS)}")
        if self.seed is not None and not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed", "seed must be an unsigned 64-bit integer")
        if int(self.threads) < 1:
            raise ValidationError("threads", "threads must be a positive integer")
        self.parameters = parse_parameters(self.command, dict(self.parameters))

    def to_dict(self) -> dict:
        return {"command": self.command, "parameters": dict(sorted(self.parameters.items())),
                "format": self.format, "seed": self.seed, "strict": self.strict}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        extra = set(data) - {"command", "parameters", "format", "seed", "strict"}
        if extra:
            raise ValidationError(sorted(extra)[0], f"unknown config field(s): {', '.join(sorted(extra))}")
        return cls(data["command"], dict(data.get("parameters", {})), data.get("format", "csv"),
                   data.get("seed"), bool(data.get("strict", False)))


def read_config_file(path) -> tuple:
    """Load ``(parameters, settings)`` from a flat ``key = value`` file or a JSON results file.

    ``settings`` holds the non-parameter fields (format, seed, strict,
    command) when the file provides them.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        cfg = data.get("config", data)
        settings = {k: cfg[k] for k in ("command", "format", "seed", "strict") if k in cfg}
        return dict(cfg.get("parameters", {})), settings
    params, settings = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValidationError("config", f"{path}:{lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        if key in ("format", "command"):
            settings[key] = value
        elif key == "seed":
            settings[key] = int(value)
        elif key == "strict":
            settings[key] = parse_value("phase_average", value)
        else:
            params[key] = value
    return params, settings
