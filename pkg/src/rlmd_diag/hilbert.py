"""Analytic signal, envelope and instantaneous frequency via the FFT Hilbert transform."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter

MIN_SPECTRAL_LENGTH = 16


class SignalError(ValueError):
    """Raised for invalid or unusable signal data."""


class SignalSizeError(SignalError):
    """Raised when a signal is too short for the requested operation."""


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled real time series.

    Attributes:
        samples: Real-valued samples.
        sample_rate: Sampling rate in Hz.
        t0: Time of the first sample in seconds.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise SignalError(f"samples must be one-dimensional, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise SignalError("samples contain NaN or Inf")
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise SignalError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def time(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    def scaled(self, alpha: float) -> Signal:
        return Signal(alpha * self.samples, self.sample_rate, self.t0)


@dataclass(frozen=True)
class AnalyticSignal:
    """Complex analytic signal split into its parts."""

    real_part: np.ndarray
    imag_part: np.ndarray
    envelope: np.ndarray = field(repr=False)
    phase_unwrapped: np.ndarray = field(repr=False)

    @property
    def raw_phase(self) -> np.ndarray:
        return np.arctan2(self.imag_part, self.real_part)

    def __len__(self) -> int:
        return self.real_part.size


def hilbert_transform(samples: np.ndarray) -> np.ndarray:
    """Discrete Hilbert transform computed in the frequency domain.

    Negative frequencies are zeroed and positive ones doubled; DC and (for even
    lengths) the Nyquist bin are left untouched. Any length is accepted.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    spectrum = np.fft.fft(x)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[1 : n // 2] = 2.0
        weights[n // 2] = 1.0
    else:
        weights[1 : (n + 1) // 2] = 2.0
    return np.fft.ifft(spectrum * weights).imag


def _as_signal(signal: Signal | np.ndarray, sample_rate: float | None = None) -> Signal:
    if isinstance(signal, Signal):
        return signal
    return Signal(np.asarray(signal, dtype=float), 1.0 if sample_rate is None else sample_rate)


def analytic_signal(signal: Signal | np.ndarray) -> AnalyticSignal:
    """Build the analytic signal of a real series.

    Args:
        signal: A :class:`Signal` or a plain real array.

    Returns:
        AnalyticSignal whose real part is the input itself, imaginary part its
        Hilbert transform, plus envelope and unwrapped phase.

    Raises:
        SignalSizeError: fewer than 16 samples.
        SignalError: non-finite samples.
    """
    sig = _as_signal(signal)
    x = sig.samples
    if x.size < MIN_SPECTRAL_LENGTH:
        raise SignalSizeError(
            f"need at least {MIN_SPECTRAL_LENGTH} samples for a spectral Hilbert transform, got {x.size}"
        )
    y = hilbert_transform(x)
    envelope = np.sqrt(x**2 + y**2)
    phase = np.unwrap(np.arctan2(y, x))
    return AnalyticSignal(real_part=x, imag_part=y, envelope=envelope, phase_unwrapped=phase)


def envelope(signal: Signal | np.ndarray) -> np.ndarray:
    return analytic_signal(signal).envelope


def instantaneous_frequency(
    analytic: AnalyticSignal, sample_rate: float, median_window: int = 5
) -> np.ndarray:
    """Instantaneous frequency in Hz from the analytic phase.

    Central differences in the interior, one-sided differences at the two end
    samples. Phase increments are taken between wrapped phases so the result
    does not pick up rounding from large accumulated phase values.

    Args:
        analytic: Output of :func:`analytic_signal`.
        sample_rate: Sampling rate in Hz.
        median_window: Width of the median filter applied afterwards; 1 disables it.
    """
    n = len(analytic)
    if n < 3:
        raise SignalSizeError(f"need at least 3 samples for a phase derivative, got {n}")
    if median_window < 1:
        raise ValueError(f"median_window must be >= 1, got {median_window}")
    step = np.diff(analytic.raw_phase)
    step = step - 2.0 * np.pi * np.round(step / (2.0 * np.pi))
    freq = np.empty(n)
    freq[1:-1] = (step[:-1] + step[1:]) * sample_rate / (4.0 * np.pi)
    freq[0] = step[0] * sample_rate / (2.0 * np.pi)
    freq[-1] = step[-1] * sample_rate / (2.0 * np.pi)
    if median_window > 1:
        freq = median_filter(freq, size=median_window, mode="nearest")
    return freq
