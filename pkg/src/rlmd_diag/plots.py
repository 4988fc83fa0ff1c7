"""Static SVG figures for a diagnosis run."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import DiagnosisReport  # noqa: E402
from .hilbert import Signal  # noqa: E402

# fixed hash salt and no timestamp keep the SVG output byte-stable
plt.rcParams["svg.hashsalt"] = "rlmd-diag"
_SVG_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def current_and_envelope(current: Signal, sce: Signal, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 3.5))
    ax.plot(current.time, current.samples, color="tab:blue", lw=0.5, label="stator current")
    ax.plot(sce.time, sce.samples, color="tab:red", lw=1.0, label="envelope (SCE)")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("current [A]")
    ax.legend(loc="upper right")
    return _save(fig, path)


def pf_stack(report: DiagnosisReport, path: Path) -> Path:
    decomp = report.decomposition
    rows = len(decomp.pfs) + 1
    t = np.arange(decomp.length) / decomp.sample_rate
    fig, axes = plt.subplots(rows, 1, figsize=(9, 1.2 * rows + 0.5), sharex=True, squeeze=False)
    for i, pf in enumerate(decomp.pfs):
        ax = axes[i, 0]
        ax.plot(t, pf.pf, lw=0.7, color="tab:red" if i == report.dominant_pf_index else "k")
        ax.set_ylabel(f"PF{i + 1}")
    axes[-1, 0].plot(t, decomp.residue, lw=0.7, color="tab:gray")
    axes[-1, 0].set_ylabel("res.")
    axes[-1, 0].set_xlabel("time [s]")
    return _save(fig, path)


def dominant_track(report: DiagnosisReport, directory: Path) -> list[Path]:
    track = report.track
    label = f"PF{track.dominant_pf_index + 1}"
    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(track.time, track.inst_amplitude, lw=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(f"IA of {label} [A]")
    ia = _save(fig, directory / "dominant_ia.svg")
    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(track.time, track.inst_frequency, lw=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(f"IF of {label} [Hz]")
    lo, hi = report.thresholds_used["band_low_hz"], report.thresholds_used["band_high_hz"]
    ax.set_ylim(0, hi * 1.2)
    ax.axhspan(lo, hi, color="tab:green", alpha=0.06)
    ifp = _save(fig, directory / "dominant_if.svg")
    return [ia, ifp]


def write_figures(current: Signal, report: DiagnosisReport, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = [current_and_envelope(current, report.sce, directory / "current_envelope.svg")]
    if report.decomposition is not None and report.decomposition.pfs:
        out.append(pf_stack(report, directory / "pf_stack.svg"))
    if report.track is not None:
        out.extend(dominant_track(report, directory))
    return out
