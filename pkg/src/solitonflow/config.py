"""Flat key/value scenario configuration.

Files hold `section.key = value` lines with `#` comments.  Unknown keys
are hard errors so a typo cannot silently disable an audit.  The
canonical serialization (sorted keys, 17-significant-digit floats) is
what the runner echoes next to its outputs; loading the echo reproduces
the run byte for byte.
"""

import math
from pathlib import Path

from .errors import ConfigurationError

_AUTO = "auto"

# key -> (type tag, default); "float" values serialize with %.17g
_SCHEMA = {
    "soliton.name": ("str", "gaussian"),
    "soliton.dim": ("int", 2),
    "soliton.params.radius": ("float", 0.0),   # 0 = background default
    "curve.kind": ("str", "circle"),
    "curve.N": ("int", 256),
    "curve.radius": ("float", math.sqrt(2.0)),
    "curve.center_x": ("float", 0.0),
    "curve.center_y": ("float", 0.0),
    "curve.a": ("float", 2.0),
    "curve.b": ("float", 1.0),
    "curve.theta": ("float", math.pi / 3.0),
    "curve.x0": ("float", 0.0),
    "curve.theta_wobble": ("float", 0.0),
    "curve.x_wobble": ("float", 0.0),
    "curve.custom.path": ("str", ""),
    "flow.kind": ("str", "normalized"),
    "flow.T": ("float_or_auto", 1.0),
    "flow.dt": ("float", 1e-4),
    # t_end is the absolute end time of an unnormalized run; s_end is the
    # duration of a normalized run (measured from the start clock -log T,
    # which may be estimated).  Only the key matching flow.kind is read.
    "flow.t_end": ("float", 0.5),
    "flow.s_end": ("float", 1.0),
    "flow.remesh_every": ("int", 0),
    "flow.cfl": ("float", 0.4),
    "flow.extinction_length": ("float", 1e-8),
    "flow.stop_residual": ("float", 0.0),
    "pilot.dt": ("float", 2e-4),
    "pilot.length_fraction": ("float", 0.45),
    "pilot.max_duration": ("float", 10.0),
    "pilot.sample_every": ("int", 25),
    "diagnostics.audit_monotonicity": ("int", 1),
    "diagnostics.c_prime": ("float", 0.0),
    "diagnostics.marked_vertex": ("int", 0),
    "diagnostics.b2_bound": ("float", 0.0),
    "diagnostics.monotonicity_slack": ("float", 1e-8),
    "diagnostics.derivative_rtol": ("float", 0.01),
    "output.snapshot_every": ("int", 100),
    "seed": ("int", 0),
}

_VALID_SOLITONS = ("gaussian", "sphere", "cylinder")
_VALID_CURVES = ("circle", "ellipse", "latitude", "custom")
_VALID_FLOWS = ("unnormalized", "normalized")


def _convert(key, tag, raw):
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "float_or_auto":
            return _AUTO if raw.lower() == _AUTO else float(raw)
        return raw
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text, base_dir=None):
    """Parse configuration text into the full key/value mapping with
    defaults applied; unknown keys raise."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, _SCHEMA[key][0], raw)

    cfg = {k: default for k, (_, default) in _SCHEMA.items()}
    cfg.update(values)
    validate_config(cfg, base_dir=base_dir)
    return cfg


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    return parse_config(path.read_text(), base_dir=path.parent)


def validate_config(cfg, base_dir=None):
    if cfg["soliton.name"] not in _VALID_SOLITONS:
        raise ConfigurationError(f"soliton.name must be one of {_VALID_SOLITONS}")
    if cfg["curve.kind"] not in _VALID_CURVES:
        raise ConfigurationError(f"curve.kind must be one of {_VALID_CURVES}")
    if cfg["flow.kind"] not in _VALID_FLOWS:
        raise ConfigurationError(f"flow.kind must be one of {_VALID_FLOWS}")
    for key in ("flow.dt", "flow.cfl", "pilot.dt",
                "diagnostics.monotonicity_slack", "diagnostics.derivative_rtol"):
        if not cfg[key] > 0:
            raise ConfigurationError(f"{key} must be positive")
    if cfg["flow.T"] != _AUTO and not cfg["flow.T"] > 0:
        raise ConfigurationError("flow.T must be positive or 'auto'")
    end_key = "flow.t_end" if cfg["flow.kind"] == "unnormalized" else "flow.s_end"
    if not cfg[end_key] > 0:
        raise ConfigurationError(f"{end_key} must be positive for "
                                 f"flow.kind={cfg['flow.kind']}")
    if cfg["curve.N"] < 16:
        raise ConfigurationError("curve.N must be at least 16")
    if cfg["curve.kind"] == "custom":
        raw = cfg["curve.custom.path"]
        if not raw:
            raise ConfigurationError("curve.kind=custom needs curve.custom.path")
        path = Path(raw)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.is_file():
            raise ConfigurationError(f"curve.custom.path not found: {path}")
        cfg["curve.custom.path"] = str(path)
    return cfg


def serialize_config(cfg):
    """Canonical text form: sorted keys, floats at 17 significant
    digits.  serialize(parse(serialize(cfg))) is byte-identical."""
    lines = []
    for key in sorted(cfg):
        tag = _SCHEMA[key][0]
        val = cfg[key]
        if tag == "int":
            text = str(int(val))
        elif tag == "float" or (tag == "float_or_auto" and val != _AUTO):
            text = "%.17g" % float(val)
        else:
            text = str(val)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
