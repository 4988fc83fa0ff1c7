"""File formats: signal CSV, scenario config (TOML) and key-value reports.

Signal CSV layout::

    # optional comment lines
    # columns: pf,amplitude,fm        (optional, for multi-column files)
    sample_rate=10000
    0.123
    ...

Values are written with 17 significant digits so a write/read round trip is
exact.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .hilbert import Signal, SignalError
from .motorsim import ConfigError, MotorFaultConfig, OperatingProfile, Schedule, SidebandComponent


class CSVFormatError(ValueError):
    def __init__(self, path: str | Path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _fmt(value: float) -> str:
    return "nan" if math.isnan(value) else format(float(value), ".17g")


def write_csv(
    path: str | Path,
    columns: dict[str, np.ndarray] | np.ndarray,
    sample_rate: float,
    comments: Iterable[str] = (),
) -> None:
    """Write one or more equally long columns in the signal CSV format."""
    if not isinstance(columns, dict):
        columns = {"value": np.asarray(columns)}
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float) for k in names]
    if len({d.size for d in data}) > 1:
        raise ValueError("all columns must have the same length")
    lines = [f"# {c}" for c in comments]
    if len(names) > 1:
        lines.append("# columns: " + ",".join(names))
    lines.append(f"sample_rate={_fmt(sample_rate)}")
    lines.extend(",".join(_fmt(v) for v in row) for row in zip(*data))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path: str | Path) -> tuple[dict[str, np.ndarray], float]:
    """Parse a signal CSV into ``({column: values}, sample_rate)``.

    Raises:
        CSVFormatError: with the offending line number.
    """
    names: list[str] | None = None
    sample_rate = None
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("columns:") and sample_rate is None:
                    names = [c.strip() for c in body[len("columns:"):].split(",")]
                continue
            if sample_rate is None:
                key, sep, value = line.partition("=")
                if not sep or key.strip() != "sample_rate":
                    raise CSVFormatError(path, lineno, "expected 'sample_rate=<Hz>' before the data")
                try:
                    sample_rate = float(value)
                except ValueError:
                    raise CSVFormatError(path, lineno, f"bad sample rate {value.strip()!r}") from None
                if not (math.isfinite(sample_rate) and sample_rate > 0):
                    raise CSVFormatError(path, lineno, f"sample rate must be > 0, got {value.strip()}")
                continue
            fields = line.split(",")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                raise CSVFormatError(path, lineno, f"not a number: {line!r}") from None
            width = len(names) if names else len(rows[0]) if rows else len(row)
            if len(row) != width:
                raise CSVFormatError(path, lineno, f"expected {width} values, got {len(row)}")
            rows.append(row)
    if sample_rate is None:
        raise CSVFormatError(path, 0, "missing 'sample_rate=<Hz>' line")
    if not rows:
        raise CSVFormatError(path, 0, "no data rows")
    table = np.array(rows, dtype=float)
    if names is None:
        names = ["value"] if table.shape[1] == 1 else [f"col{i}" for i in range(table.shape[1])]
    return {n: table[:, i] for i, n in enumerate(names)}, sample_rate


def write_signal(path: str | Path, signal: Signal, comments: Iterable[str] = ()) -> None:
    write_csv(path, signal.samples, signal.sample_rate, comments)


def read_signal(path: str | Path, column: str | None = None) -> Signal:
    """Load one column (the first by default) as a :class:`Signal`."""
    columns, fs = read_csv(path)
    key = column if column is not None else next(iter(columns))
    if key not in columns:
        raise CSVFormatError(path, 0, f"no column {key!r}; have {', '.join(columns)}")
    try:
        return Signal(columns[key], fs)
    except SignalError as exc:
        raise CSVFormatError(path, 0, str(exc)) from None


# --- scenario configuration -------------------------------------------------


def _schedule_to_dict(s: Schedule) -> dict:
    return {"kind": s.kind, "points": [list(p) for p in s.points]}


def _schedule_from(value: Any, name: str) -> Schedule:
    if isinstance(value, (int, float)):
        return Schedule.constant(float(value))
    if isinstance(value, dict):
        return Schedule(tuple(tuple(p) for p in value["points"]), kind=value.get("kind", "step"))
    if isinstance(value, list):
        return Schedule(tuple(tuple(p) for p in value))
    raise ConfigError(f"profile.{name}: expected a number, a list of [t, value] or a table")


def scenario_to_dict(config: MotorFaultConfig, profile: OperatingProfile, seed: int | None = None) -> dict:
    tree: dict[str, Any] = {
        "motor": {"i_f": config.i_f, "phi": config.phi, "f_supply": config.f_supply},
        "sidebands": [
            {
                "order": sb.order,
                "i_rbb1": sb.i_rbb1,
                "i_rbb2": sb.i_rbb2,
                "phi_rbb1": sb.phi_rbb1,
                "phi_rbb2": sb.phi_rbb2,
            }
            for sb in config.sidebands
        ],
        "profile": {
            "duration": profile.duration,
            "sample_rate": profile.sample_rate,
            "slip": _schedule_to_dict(profile.slip),
            "severity": _schedule_to_dict(profile.severity),
            "load_scale": _schedule_to_dict(profile.load_scale),
        },
    }
    if profile.noise_snr_db is not None:
        tree["profile"]["noise_snr_db"] = profile.noise_snr_db
    if config.metadata:
        tree["metadata"] = dict(config.metadata)
    if seed is not None:
        tree["seed"] = seed
    return tree


def scenario_from_dict(tree: dict) -> tuple[MotorFaultConfig, OperatingProfile]:
    try:
        motor = tree.get("motor", {})
        sidebands = tuple(
            SidebandComponent(
                order=int(sb["order"]),
                i_rbb1=float(sb["i_rbb1"]),
                i_rbb2=float(sb["i_rbb2"]),
                phi_rbb1=float(sb.get("phi_rbb1", 0.0)),
                phi_rbb2=float(sb.get("phi_rbb2", 0.0)),
            )
            for sb in tree.get("sidebands", [])
        )
        config = MotorFaultConfig(
            i_f=float(motor["i_f"]),
            phi=float(motor.get("phi", 0.0)),
            f_supply=float(motor.get("f_supply", 50.0)),
            sidebands=sidebands,
            metadata=dict(tree.get("metadata", {})),
        )
        prof = tree.get("profile", {})
        kwargs: dict[str, Any] = {}
        for key in ("duration", "sample_rate", "noise_snr_db"):
            if key in prof:
                kwargs[key] = float(prof[key])
        for key in ("slip", "severity", "load_scale"):
            if key in prof:
                kwargs[key] = _schedule_from(prof[key], key)
        profile = OperatingProfile(**kwargs)
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return config, profile


def load_scenario_config(path: str | Path) -> tuple[dict, MotorFaultConfig, OperatingProfile]:
    """Read a TOML scenario file; returns the raw tree too (for ``seed`` etc.)."""
    try:
        with open(path, "rb") as fh:
            tree = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    config, profile = scenario_from_dict(tree)
    return tree, config, profile


def dumps_toml(tree: dict) -> str:
    return tomli_w.dumps(_toml_safe(tree))


def write_toml(path: str | Path, tree: dict) -> None:
    Path(path).write_text(dumps_toml(tree), encoding="utf-8")


def read_toml(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _toml_safe(value: Any) -> Any:
    # TOML has no null; NaN is allowed
    if isinstance(value, dict):
        return {str(k): _toml_safe(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_toml_safe(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def apply_overrides(tree: dict, overrides: Sequence[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as TOML literals."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        node = tree
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a table")
        node[parts[-1]] = value
    return tree
