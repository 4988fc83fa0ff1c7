"""Command-line front end: ``rlmd-diag simulate | decompose | diagnose``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .diagnostics import DiagnosisConfig, DiagnosisReport, diagnose, native_frequency
from .hilbert import Signal, SignalError
from .motorsim import ConfigError, envelope_oracle, scenario, simulate_current
from .rlmd import Decomposition, RLMDConfig, decompose

logger = logging.getLogger("rlmd_diag")

EXIT_ERROR = 1


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    output_dir: Path
    input_path: Path | None = None
    scenario_name: str | None = None
    config_path: Path | None = None
    overrides: list[str] = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self) -> None:
        sources = [s for s in (self.input_path, self.scenario_name, self.config_path) if s is not None]
        if len(sources) != 1:
            raise UsageError("give exactly one of an input CSV, --scenario or --config")


class _Parser(argparse.ArgumentParser):
    # usage errors share the documented error exit code instead of argparse's 2
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _parse_band(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    try:
        band = (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must look like LOW:HIGH, got {text!r}") from None
    if not sep or not 0 <= band[0] < band[1]:
        raise argparse.ArgumentTypeError(f"band must look like LOW:HIGH with 0 <= LOW < HIGH, got {text!r}")
    return band


def _prepare_output(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _scenario_tree(manifest: RunManifest) -> dict:
    if manifest.config_path is not None:
        tree, _, _ = io.load_scenario_config(manifest.config_path)
    else:
        config, profile = scenario(manifest.scenario_name)
        tree = io.scenario_to_dict(config, profile)
    io.apply_overrides(tree, manifest.overrides)
    if manifest.seed is not None:
        tree["seed"] = manifest.seed
    return tree


def _simulated(manifest: RunManifest) -> tuple[dict, Signal]:
    tree = _scenario_tree(manifest)
    config, profile = io.scenario_from_dict(tree)
    return tree, simulate_current(config, profile, seed=int(tree.get("seed", 0)))


def _load_input(manifest: RunManifest) -> Signal:
    if manifest.input_path is not None:
        return io.read_signal(manifest.input_path)
    return _simulated(manifest)[1]


def cmd_simulate(manifest: RunManifest) -> list[Path]:
    tree, current = _simulated(manifest)
    config, profile = io.scenario_from_dict(tree)
    out = _prepare_output(manifest.output_dir)
    oracle = envelope_oracle(config, profile)
    io.write_signal(out / "current.csv", current, ["stator phase current [A]"])
    io.write_csv(
        out / "envelope_oracle.csv",
        {"a_m": oracle.a_m, "theta": oracle.theta},
        profile.sample_rate,
        ["closed-form envelope A_m [A] and phase theta [rad]"],
    )
    meta = dict(tree, n_samples=profile.n_samples)
    io.write_toml(out / "scenario.meta", meta)
    return [out / "current.csv", out / "envelope_oracle.csv", out / "scenario.meta"]


def _rlmd_config(args: argparse.Namespace) -> RLMDConfig:
    kwargs = {}
    if args.max_pfs is not None:
        kwargs["max_pfs"] = args.max_pfs
    if args.max_sift is not None:
        kwargs["max_sift"] = args.max_sift
    return RLMDConfig(**kwargs)


def _write_decomposition(out: Path, decomp: Decomposition) -> list[Path]:
    paths = []
    for i, pf in enumerate(decomp.pfs, start=1):
        path = out / f"pf_{i}.csv"
        io.write_csv(path, {"pf": pf.pf, "amplitude": pf.amplitude, "fm": pf.fm}, decomp.sample_rate)
        paths.append(path)
    io.write_csv(out / "residue.csv", decomp.residue, decomp.sample_rate)
    meta = {
        "n_samples": decomp.length,
        "sample_rate": decomp.sample_rate,
        "n_pfs": len(decomp.pfs),
        "pf": [
            {
                "index": i,
                "sift_count": pf.sift_count,
                "objective_trace": list(pf.objective_trace),
                "subset_sizes": list(pf.subset_sizes),
                "max_sift_hit": pf.max_sift_hit,
                "collapsed": pf.collapsed,
            }
            for i, pf in enumerate(decomp.pfs, start=1)
        ],
    }
    io.write_toml(out / "decomp.meta", meta)
    return paths + [out / "residue.csv", out / "decomp.meta"]


def cmd_decompose(manifest: RunManifest, config: RLMDConfig) -> list[Path]:
    signal = _load_input(manifest)
    out = _prepare_output(manifest.output_dir)
    return _write_decomposition(out, decompose(signal, config))


def _diagnosis_config(args: argparse.Namespace, overrides: Sequence[str]) -> DiagnosisConfig:
    tree: dict = {}
    io.apply_overrides(tree, overrides)
    names = {f.name for f in dataclasses.fields(DiagnosisConfig)} - {"rlmd", "band_hz"}
    unknown = set(tree) - names
    if unknown:
        raise ConfigError(f"unknown diagnosis setting(s): {', '.join(sorted(unknown))}")
    if args.band is not None:
        tree["band_hz"] = args.band
    if args.guard is not None:
        tree["guard_s"] = args.guard
    return DiagnosisConfig(rlmd=_rlmd_config(args), **tree)


def report_tree(report: DiagnosisReport, native_hz: float | None = None) -> dict:
    tree = {
        "verdict": report.verdict.value,
        "ripple_index": report.ripple_index,
        "tracked_frequency_hz": report.tracked_frequency_hz,
        "frequency_iqr_hz": report.frequency_iqr_hz,
        "dominant_pf_index": report.dominant_pf_index,
        "n_pfs": report.n_pfs,
        "amplitude_trend": [[t, a] for t, a in report.amplitude_trend],
        "thresholds": report.thresholds_used,
    }
    if native_hz is not None:
        tree["native_frequency_hz"] = native_hz
    return tree


def cmd_diagnose(manifest: RunManifest, config: DiagnosisConfig, plots: bool = True) -> DiagnosisReport:
    current = _load_input(manifest)
    report = diagnose(current, config)
    out = _prepare_output(manifest.output_dir)
    native_hz = None
    if report.track is not None:
        track = report.track
        io.write_csv(
            out / "features.csv",
            {"t": track.time, "ia": track.inst_amplitude, "if_hz": track.inst_frequency},
            current.sample_rate,
        )
        native = native_frequency(report.decomposition.pfs[track.dominant_pf_index], current.sample_rate)
        native[~track.valid] = np.nan
        native_hz = float(np.median(native[track.valid]))
        io.write_csv(
            out / "native_frequency.csv",
            {"t": track.time, "native_if_hz": native},
            current.sample_rate,
            ["frequency read off the PF's FM part, for comparison"],
        )
    else:
        io.write_csv(out / "features.csv", {"t": [], "ia": [], "if_hz": []}, current.sample_rate)
    io.write_toml(out / "report.txt", report_tree(report, native_hz))
    if plots:
        from .plots import write_figures

        write_figures(current, report, out / "figures")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rlmd-diag",
        description="RLMD + Hilbert-transform broken-rotor-bar diagnosis from stator current.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(p: argparse.ArgumentParser, with_input: bool) -> None:
        if with_input:
            p.add_argument("input", nargs="?", type=Path, help="signal CSV")
        p.add_argument("--scenario", help="canned scenario: healthy, severity_step, load_step")
        p.add_argument("--config", type=Path, help="scenario TOML file")
        p.add_argument("--seed", type=int, help="noise seed for simulated input")
        p.add_argument("-o", "--output", type=Path, default=Path("."), help="output directory")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="override a scenario (simulate) or diagnosis (diagnose) setting; repeatable",
        )

    def rlmd_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max-pfs", type=int, help="maximum number of product functions")
        p.add_argument("--max-sift", type=int, help="maximum sifting iterations per PF")

    p = sub.add_parser("simulate", help="generate a synthetic stator current")
    source(p, with_input=False)

    p = sub.add_parser("decompose", help="RLMD of a signal")
    source(p, with_input=True)
    rlmd_opts(p)

    p = sub.add_parser("diagnose", help="full HT-RLMD-HT diagnosis")
    source(p, with_input=True)
    rlmd_opts(p)
    p.add_argument("--band", type=_parse_band, help="fault band LOW:HIGH in Hz (default 1:20)")
    p.add_argument("--guard", type=float, help="guard band in seconds at both ends (default 0.1)")
    p.add_argument("--no-plots", action="store_true", help="skip the SVG figures")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("RLMD_DIAG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors EXIT_ERROR
        return int(exc.code or 0)
    try:
        manifest = RunManifest(
            command=args.command,
            output_dir=args.output,
            input_path=getattr(args, "input", None),
            scenario_name=args.scenario,
            config_path=args.config,
            overrides=[] if args.command == "diagnose" else args.overrides,
            seed=args.seed,
        )
        if args.command == "simulate":
            for path in cmd_simulate(manifest):
                print(path)
            return 0
        if args.command == "decompose":
            for path in cmd_decompose(manifest, _rlmd_config(args)):
                print(path)
            return 0
        config = _diagnosis_config(args, args.overrides)
        report = cmd_diagnose(manifest, config, plots=not args.no_plots)
        print(f"verdict: {report.verdict.value}")
        print(f"ripple index: {report.ripple_index:.4f}")
        if report.track is not None:
            print(f"tracked frequency: {report.tracked_frequency_hz:.2f} Hz (PF{report.dominant_pf_index + 1})")
        return report.verdict.exit_code
    except (UsageError, ConfigError, SignalError, io.CSVFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
