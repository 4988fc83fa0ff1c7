"""Robust local mean decomposition.

A real signal is peeled into product functions (PFs), each the product of a
slowly varying instantaneous amplitude and a unit-bounded FM signal, plus a
residue. Compared with plain LMD three parts are made self-adaptive:

* boundaries: extrema are mirrored about the first and last extremum;
* smoothing: the moving-average width comes from the histogram of the
  distances between successive extrema;
* stopping: sifting stops once the envelope objective
  ``RMS(a - 1) + excess_kurtosis(a - 1)`` has risen twice in a row.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.ndimage import uniform_filter1d

from .hilbert import Signal, SignalSizeError

logger = logging.getLogger(__name__)

MAXIMUM = 1
MINIMUM = -1


class MonotoneResidue(Exception):
    """The input has too few extrema to carry another product function.

    Used as a terminator by :func:`decompose`; it is not an error there.
    """


class NegligibleResidue(MonotoneResidue):
    """The local magnitude of the input is below the numerical floor everywhere."""


@dataclass(frozen=True)
class ExtremaSet:
    """Alternating local extrema.

    ``kinds`` holds ``MAXIMUM`` (+1) or ``MINIMUM`` (-1). ``values`` are the
    sample values at ``indices``; for mirrored sets they are the reflected
    values rather than whatever the extended array holds at that position.
    """

    indices: np.ndarray
    kinds: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.indices.size

    @property
    def steps(self) -> np.ndarray:
        """Segment sizes ``e[k+1] - e[k] + 1``."""
        return np.diff(self.indices) + 1

    @property
    def n_maxima(self) -> int:
        return int(np.count_nonzero(self.kinds == MAXIMUM))

    @property
    def n_minima(self) -> int:
        return int(np.count_nonzero(self.kinds == MINIMUM))

    def shifted(self, offset: int) -> ExtremaSet:
        return ExtremaSet(self.indices + offset, self.kinds, self.values)


@dataclass(frozen=True)
class SmoothingSpec:
    subset_size: int
    bin_count: int
    mu_s: float
    delta_s: float


class Extension(NamedTuple):
    """Mirror-extended signal.

    ``samples[offset : offset + n]`` is the original input; ``extrema`` are in
    extended coordinates and include the mirrored ones.
    """

    samples: np.ndarray
    offset: int
    extrema: ExtremaSet


@dataclass(frozen=True)
class SiftObjective:
    value: float
    rms_term: float
    ek_term: float


@dataclass(frozen=True)
class ProductFunction:
    """One RLMD component.

    Attributes:
        pf: The product function, ``amplitude * fm``.
        amplitude: Instantaneous amplitude, product of the smoothed local
            magnitudes of every retained sifting iteration.
        fm: Frequency-modulated part, bounded by 1 in magnitude.
        sift_count: Number of retained sifting iterations.
        objective_trace: Envelope objective of each retained iteration.
        subset_sizes: Moving-average width used in each retained iteration.
        max_sift_hit: Sifting ran into the iteration cap.
        collapsed: Sifting aborted because the envelope collapsed.
    """

    pf: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)
    fm: np.ndarray = field(repr=False)
    sift_count: int
    objective_trace: tuple[float, ...]
    subset_sizes: tuple[int, ...]
    max_sift_hit: bool = False
    collapsed: bool = False


@dataclass(frozen=True)
class Decomposition:
    pfs: list[ProductFunction]
    residue: np.ndarray = field(repr=False)
    length: int
    sample_rate: float

    def __len__(self) -> int:
        return len(self.pfs)

    def reconstruct(self) -> np.ndarray:
        total = self.residue.copy()
        for pf in self.pfs:
            total = total + pf.pf
        return total


@dataclass(frozen=True)
class RLMDConfig:
    """Decomposition settings.

    ``bin_count=None`` picks ``ceil(sqrt(number of steps))`` histogram bins.
    """

    max_pfs: int = 8
    max_sift: int = 30
    n_pairs: int = 2
    bin_count: int | None = None
    smoothing_passes: int = 10

    def __post_init__(self) -> None:
        if self.max_pfs < 1:
            raise ValueError(f"max_pfs must be >= 1, got {self.max_pfs}")
        if self.max_sift < 1:
            raise ValueError(f"max_sift must be >= 1, got {self.max_sift}")
        if self.n_pairs < 1:
            raise ValueError(f"n_pairs must be >= 1, got {self.n_pairs}")
        if self.bin_count is not None and self.bin_count < 1:
            raise ValueError(f"bin_count must be >= 1, got {self.bin_count}")
        if self.smoothing_passes < 1:
            raise ValueError(f"smoothing_passes must be >= 1, got {self.smoothing_passes}")


def magnitude_floor(samples: np.ndarray) -> float:
    """Smallest local magnitude allowed; scales with the signal."""
    peak = float(np.max(np.abs(samples))) if np.size(samples) else 0.0
    return max(1e-12, 1e-8 * peak)


def find_extrema(samples: np.ndarray) -> ExtremaSet:
    """Strict local extrema of a 1-D array.

    A flat plateau that is higher (lower) than both neighbours counts as one
    maximum (minimum) located at its midpoint, rounded down. The end samples
    are never extrema.

    Raises:
        MonotoneResidue: fewer than two extrema.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 3:
        raise SignalSizeError(f"need at least 3 samples to look for extrema, got {x.size}")
    change = np.flatnonzero(np.diff(x) != 0)
    run_start = np.concatenate(([0], change + 1))
    run_end = np.concatenate((change, [x.size - 1]))
    if run_start.size < 3:
        raise MonotoneResidue("no interior extrema")
    slope = np.sign(np.diff(x[run_start]))
    is_max = (slope[:-1] > 0) & (slope[1:] < 0)
    is_min = (slope[:-1] < 0) & (slope[1:] > 0)
    # Runs have no equal neighbours, so maxima and minima alternate by construction.
    runs = np.flatnonzero(is_max | is_min) + 1
    if runs.size < 2:
        raise MonotoneResidue(f"only {runs.size} extremum found")
    indices = (run_start[runs] + run_end[runs]) // 2
    kinds = np.where(is_max[runs - 1], MAXIMUM, MINIMUM).astype(np.int8)
    return ExtremaSet(indices=indices, kinds=kinds, values=x[indices])


def _reflect_side(x: np.ndarray, idx: np.ndarray, kinds: np.ndarray, vals: np.ndarray, m: int):
    """Symmetry point and mirrored extrema for the left end of ``x``.

    The first extremum is the symmetry point unless the end sample reaches
    past the next extremum of the opposite kind; then the end sample itself
    acts as an extremum and the reflection is about it.
    """
    e0 = int(idx[0])
    end_kind = -int(kinds[0])
    beyond = idx.size > 1 and (
        x[0] >= vals[1] if end_kind == MAXIMUM else x[0] <= vals[1]
    )
    if beyond and e0 > 0:
        src = np.arange(min(m, idx.size), 0, -1) - 1
        centre = 0
        own = (np.array([0]), np.array([end_kind], dtype=np.int8), np.array([x[0]]))
    else:
        src = np.arange(m, 0, -1)
        centre = e0
        own = (np.array([], dtype=int), np.array([], dtype=np.int8), np.array([]))
    pos = 2 * centre - idx[src]
    return centre, pos, kinds[src], vals[src], own


def mirror_extend(samples: np.ndarray, extrema: ExtremaSet, n_pairs: int = 2) -> Extension:
    """Mirror the signal about its boundary extrema.

    ``2 * n_pairs`` extrema are added on each side, clamped to what the signal
    has. The reflection is about the first (last) extremum, except when the
    end sample overshoots the next extremum of the opposite kind: then the
    end sample is taken as an extremum and the reflection is about it, so
    the boundary half-wave is not cut off.

    Returns:
        Extension whose ``samples`` hold reflected values beyond both ends and
        the untouched input in between.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if len(extrema) == 0:
        raise ValueError("mirror extension needs at least one extremum")
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    idx, kinds, vals = extrema.indices, extrema.kinds, extrema.values
    m = min(2 * n_pairs, idx.size - 1)

    lc, lpos, lkind, lval, lown = _reflect_side(x, idx, kinds, vals, m)
    rc, rpos, rkind, rval, rown = _reflect_side(
        x[::-1], (n - 1) - idx[::-1], kinds[::-1], vals[::-1], m
    )
    rc = (n - 1) - rc
    rpos = ((n - 1) - rpos)[::-1]
    rkind, rval = rkind[::-1], rval[::-1]
    rown = ((n - 1) - rown[0], rown[1], rown[2])

    start = min(0, int(lpos[0])) if lpos.size else 0
    stop = max(n - 1, int(rpos[-1])) if rpos.size else n - 1
    head = 2 * lc - np.arange(start, 0)
    tail = 2 * rc - np.arange(n, stop + 1)
    extended = np.concatenate(
        (x[np.clip(head, 0, n - 1)], x, x[np.clip(tail, 0, n - 1)])
    )
    offset = -start
    ext = ExtremaSet(
        indices=np.concatenate((lpos, lown[0], idx, rown[0], rpos)).astype(int) + offset,
        kinds=np.concatenate((lkind, lown[1], kinds, rown[1], rkind)).astype(np.int8),
        values=np.concatenate((lval, lown[2], vals, rown[2], rval)),
    )
    return Extension(samples=extended, offset=offset, extrema=ext)


def odd(x: float) -> int:
    """Round to the nearest integer, bump even results up by one, floor at 3."""
    r = int(math.floor(x + 0.5))
    if r % 2 == 0:
        r += 1
    return max(r, 3)


def subset_size(extrema: ExtremaSet, bin_count: int | None = None) -> SmoothingSpec:
    """Moving-average width from the histogram of extremum step sizes.

    With bin centres ``c`` and bin probabilities ``p`` the step mean is
    ``sum(c * p)``, the spread ``sqrt(sum((c - mean)**2 * p))``, and the width
    ``odd(mean + 3 * spread)``.
    """
    if len(extrema) < 2:
        raise ValueError("subset size needs at least two extrema")
    steps = extrema.steps.astype(float)
    lo, hi = steps.min(), steps.max()
    if lo == hi:
        return SmoothingSpec(subset_size=odd(lo), bin_count=1, mu_s=lo, delta_s=0.0)
    nb = bin_count if bin_count is not None else math.ceil(math.sqrt(steps.size))
    counts, edges = np.histogram(steps, bins=nb, range=(lo, hi))
    prob = counts / steps.size
    centres = 0.5 * (edges[:-1] + edges[1:])
    mu = float(np.sum(centres * prob))
    delta = float(np.sqrt(np.sum((centres - mu) ** 2 * prob)))
    return SmoothingSpec(subset_size=odd(mu + 3.0 * delta), bin_count=nb, mu_s=mu, delta_s=delta)


def local_mean_magnitude(
    samples: np.ndarray, extrema: ExtremaSet, floor: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-constant local mean and local magnitude.

    Between extrema ``k`` and ``k+1`` the mean is ``(v[k] + v[k+1]) / 2`` and the
    magnitude ``|v[k] - v[k+1]| / 2``, held over ``[e[k], e[k+1])``. Samples
    before the first extremum take the first segment's values, samples from
    the last extremum on take the last segment's.
    """
    if len(extrema) < 2:
        raise ValueError("local mean needs at least two extrema")
    n = np.size(samples)
    if floor is None:
        floor = magnitude_floor(samples)
    v = extrema.values
    means = 0.5 * (v[:-1] + v[1:])
    mags = np.maximum(0.5 * np.abs(v[:-1] - v[1:]), floor)
    seg = np.searchsorted(extrema.indices, np.arange(n), side="right") - 1
    seg = np.clip(seg, 0, means.size - 1)
    return means[seg], mags[seg]


def _has_flat_pair(x: np.ndarray) -> bool:
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return bool(np.any(np.abs(np.diff(x)) <= 1e-12 * scale))


def moving_average(samples: np.ndarray, kappa: int, max_passes: int = 10) -> np.ndarray:
    """Centred moving average of odd width, repeated until no flat pairs remain.

    Edges are padded with the nearest sample. A pass is repeated (at most
    ``max_passes`` times) while two adjacent outputs are still equal to within
    1e-12 of the peak magnitude.
    """
    x = np.asarray(samples, dtype=float)
    if kappa < 1 or kappa % 2 == 0:
        raise ValueError(f"kappa must be a positive odd integer, got {kappa}")
    if kappa > x.size:
        kappa = x.size if x.size % 2 else x.size - 1
    if kappa <= 1:
        return x.copy()
    out = x
    for _ in range(max_passes):
        out = uniform_filter1d(out, size=kappa, mode="nearest")
        if not _has_flat_pair(out):
            break
    return out


def sift_objective(amplitude_envelope: np.ndarray) -> SiftObjective:
    """Envelope objective ``RMS(z) + EK(z)`` with ``z = a - 1``.

    Excess kurtosis is taken as 0 for (numerically) constant ``z``.
    """
    a = np.asarray(amplitude_envelope, dtype=float)
    if a.size < 4:
        raise SignalSizeError(f"need at least 4 envelope samples, got {a.size}")
    z = a - 1.0
    rms = float(np.sqrt(np.mean(z**2)))
    dev = z - z.mean()
    var = float(np.mean(dev**2))
    ek = float(np.mean(dev**4) / var**2 - 3.0) if var >= 1e-24 else 0.0
    return SiftObjective(value=rms + ek, rms_term=rms, ek_term=ek)


def _local_lines(x: np.ndarray, config: RLMDConfig, floor: float) -> tuple[np.ndarray, np.ndarray, int]:
    extrema = find_extrema(x)
    if len(extrema) < 3:
        raise MonotoneResidue(f"only {len(extrema)} extrema left")
    spec = subset_size(extrema, config.bin_count)
    ext = mirror_extend(x, extrema, config.n_pairs)
    m0, a0 = local_mean_magnitude(ext.samples, ext.extrema, floor=floor)
    if np.all(a0 <= floor):
        raise NegligibleResidue("local magnitude below floor everywhere")
    crop = slice(ext.offset, ext.offset + x.size)
    mean = moving_average(m0, spec.subset_size, config.smoothing_passes)[crop]
    mag = moving_average(a0, spec.subset_size, config.smoothing_passes)[crop]
    return mean, np.maximum(mag, floor), spec.subset_size


def sift_pf(residual: np.ndarray, config: RLMDConfig | None = None) -> ProductFunction:
    """Extract one product function from ``residual`` by soft-stopped sifting.

    Iteration ``j`` smooths the local mean and magnitude ``a_j`` of the
    previous iterate ``s_{j-1}`` and forms ``s_j = (s_{j-1} - mean) / a_j``.
    The objective ``f_j`` of ``a_j`` therefore grades ``s_{j-1}``; it is only
    defined from ``j = 2`` on, where the input is already normalised. Once
    ``f_{j+1} > f_j`` and ``f_{j+2} > f_{j+1}``, the iterate ``s_{j-1}`` is
    returned.

    Raises:
        MonotoneResidue: ``residual`` has fewer than three extrema.
        NegligibleResidue: its local magnitude is below the floor everywhere.
    """
    config = config or RLMDConfig()
    x = np.asarray(residual, dtype=float)

    s = x
    amplitude = np.ones_like(x)
    states: list[tuple[np.ndarray, np.ndarray]] = []
    trace: list[float] = []
    kappas: list[int] = []
    collapsed = False
    stopped = False
    for j in range(1, config.max_sift + 2):
        floor = magnitude_floor(s)
        try:
            mean, mag, kappa = _local_lines(s, config, floor)
        except NegligibleResidue:
            if not states:
                raise
            collapsed = True
            break
        except MonotoneResidue:
            if not states:
                raise
            break
        if j > 1:
            trace.append(sift_objective(mag).value)
            if len(trace) >= 3 and trace[-3] < trace[-2] < trace[-1]:
                stopped = True
                break
        if j > config.max_sift:
            # only needed the grade of the last iterate
            break
        kappas.append(kappa)
        s = (s - mean) / mag
        amplitude = amplitude * mag
        states.append((s, amplitude))

    if stopped:
        # trace[i] grades s_{i+1}; trace[-3] is the minimum
        keep = len(trace) - 2
    else:
        keep = len(states)
    max_sift_hit = not stopped and not collapsed and len(trace) == config.max_sift
    s, amplitude = states[keep - 1]
    fm = np.clip(s, -1.0, 1.0)
    return ProductFunction(
        pf=amplitude * fm,
        amplitude=amplitude,
        fm=fm,
        sift_count=keep,
        objective_trace=tuple(trace[:keep]),
        subset_sizes=tuple(kappas[:keep]),
        max_sift_hit=max_sift_hit,
        collapsed=collapsed,
    )


def decompose(signal: Signal | np.ndarray, config: RLMDConfig | None = None) -> Decomposition:
    """Decompose ``signal`` into product functions and a residue.

    Stops when the residue has fewer than three extrema, when its local
    magnitude is negligible, or after ``config.max_pfs`` components.
    """
    config = config or RLMDConfig()
    sig = signal if isinstance(signal, Signal) else Signal(np.asarray(signal, dtype=float), 1.0)
    x = sig.samples
    if x.size < 32:
        raise SignalSizeError(f"need at least 32 samples to decompose, got {x.size}")
    residue = x.copy()
    pfs: list[ProductFunction] = []
    while len(pfs) < config.max_pfs:
        try:
            pf = sift_pf(residue, config)
        except MonotoneResidue as exc:
            logger.debug("decomposition stopped after %d PFs: %s", len(pfs), exc)
            break
        pfs.append(pf)
        residue = residue - pf.pf
        logger.debug("PF %d: %d sifts, kappa %s", len(pfs), pf.sift_count, pf.subset_sizes[-1])
    return Decomposition(pfs=pfs, residue=residue, length=x.size, sample_rate=sig.sample_rate)
