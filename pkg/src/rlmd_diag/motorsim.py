"""Synthetic stator current of an induction motor with broken rotor bars.

The phase current is built as ``A(t) cos(2 pi f t) + B(t) sin(2 pi f t)``,
where the in-phase and quadrature terms carry the fundamental plus the
``2ksf`` rotor-asymmetry modulation of every sideband pair. Slip and fault
severity can vary with time; the modulation phase is the running integral of
``2 k s(t) f`` so that slip steps stay phase-continuous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .hilbert import Signal


class ConfigError(ValueError):
    """Invalid motor, sideband or operating-profile settings."""


@dataclass(frozen=True)
class SidebandComponent:
    """One ``(1 +/- 2ks) f`` sideband pair.

    ``i_rbb1``/``phi_rbb1`` describe the left sideband, ``i_rbb2``/``phi_rbb2``
    the right one.
    """

    order: int
    i_rbb1: float
    i_rbb2: float
    phi_rbb1: float = 0.0
    phi_rbb2: float = 0.0

    def __post_init__(self) -> None:
        if int(self.order) != self.order or self.order < 1:
            raise ConfigError(f"sideband order must be a positive integer, got {self.order}")
        if self.i_rbb1 < 0 or self.i_rbb2 < 0:
            raise ConfigError("sideband magnitudes must be >= 0")

    def scaled(self, factor: float) -> SidebandComponent:
        return SidebandComponent(
            self.order, factor * self.i_rbb1, factor * self.i_rbb2, self.phi_rbb1, self.phi_rbb2
        )


@dataclass(frozen=True)
class MotorFaultConfig:
    i_f: float
    phi: float = 0.0
    f_supply: float = 50.0
    sidebands: tuple[SidebandComponent, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sidebands", tuple(self.sidebands))
        if not self.i_f > 0:
            raise ConfigError(f"i_f must be > 0, got {self.i_f}")
        if not self.f_supply > 0:
            raise ConfigError(f"f_supply must be > 0, got {self.f_supply}")
        orders = [sb.order for sb in self.sidebands]
        if len(set(orders)) != len(orders):
            raise ConfigError(f"sideband orders must be distinct, got {orders}")


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant (``kind="step"``) or piecewise-linear function of time.

    ``points`` are ``(time, value)`` pairs sorted by time. A step schedule
    takes the value of the last point at or before ``t`` (the first value
    before the first point); a linear one interpolates and holds the end
    values outside the breakpoints.
    """

    points: tuple[tuple[float, float], ...]
    kind: str = "step"

    def __post_init__(self) -> None:
        pts = tuple((float(t), float(v)) for t, v in self.points)
        if not pts:
            raise ConfigError("schedule needs at least one point")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError(f"schedule times must be strictly increasing, got {times}")
        if self.kind not in ("step", "linear"):
            raise ConfigError(f"schedule kind must be 'step' or 'linear', got {self.kind!r}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def constant(cls, value: float) -> Schedule:
        return cls(((0.0, value),))

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        times = np.array([p[0] for p in self.points])
        vals = self.values
        if self.kind == "linear":
            return np.interp(t, times, vals)
        pos = np.searchsorted(times, t, side="right") - 1
        return vals[np.clip(pos, 0, vals.size - 1)]


@dataclass(frozen=True)
class OperatingProfile:
    """Time-varying operating point.

    Attributes:
        duration: Record length in seconds.
        sample_rate: Hz.
        slip: Per-unit slip ``s(t)``, within (0, 1).
        severity: Multiplier ``sigma(t) >= 0`` on all sideband magnitudes.
        load_scale: Multiplier on the whole current (fundamental and
            sidebands); models the load dependence of the current magnitude.
        noise_snr_db: Additive white Gaussian noise level, ``None`` for none.
    """

    duration: float = 2.0
    sample_rate: float = 10_000.0
    slip: Schedule = Schedule.constant(0.06)
    severity: Schedule = Schedule.constant(1.0)
    load_scale: Schedule = Schedule.constant(1.0)
    noise_snr_db: float | None = None

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if not self.sample_rate > 0:
            raise ConfigError(f"sample_rate must be > 0, got {self.sample_rate}")
        if np.any(self.slip.values <= 0) or np.any(self.slip.values >= 1):
            raise ConfigError("slip must stay within (0, 1)")
        if np.any(self.severity.values < 0):
            raise ConfigError("severity must be >= 0")
        if np.any(self.load_scale.values <= 0):
            raise ConfigError("load_scale must be > 0")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate


@dataclass(frozen=True)
class EnvelopeOracle:
    """Closed-form envelope ``a_m = sqrt(A**2 + B**2)`` and phase ``theta = atan2(A, B)``."""

    a_m: np.ndarray
    theta: np.ndarray
    in_phase: np.ndarray = field(repr=False)
    quadrature: np.ndarray = field(repr=False)


def modulation_phase(order: int, f_supply: float, profile: OperatingProfile) -> np.ndarray:
    """Running integral of ``2 pi * 2 k s(t) f``, zero at the first sample."""
    t = profile.time
    rate = 2.0 * np.pi * 2.0 * order * f_supply * profile.slip(t)
    phase = np.empty_like(t)
    phase[0] = 0.0
    phase[1:] = np.cumsum(rate[:-1]) / profile.sample_rate
    return phase


def quadrature_terms(config: MotorFaultConfig, profile: OperatingProfile) -> tuple[np.ndarray, np.ndarray]:
    """In-phase and quadrature terms ``A(t)``, ``B(t)`` of the current."""
    t = profile.time
    sigma = profile.severity(t)
    a = np.full(t.size, config.i_f * math.cos(config.phi))
    b = np.full(t.size, config.i_f * math.sin(config.phi))
    for sb in config.sidebands:
        psi = modulation_phase(sb.order, config.f_supply, profile)
        c, s = np.cos(psi), np.sin(psi)
        i1, i2, p1, p2 = sb.i_rbb1, sb.i_rbb2, sb.phi_rbb1, sb.phi_rbb2
        a += sigma * (
            (i1 * math.cos(p1) + i2 * math.cos(p2)) * c + (i2 * math.sin(p2) - i1 * math.sin(p1)) * s
        )
        b += sigma * (
            (i1 * math.sin(p1) + i2 * math.sin(p2)) * c + (i2 * math.cos(p2) - i1 * math.cos(p1)) * s
        )
    load = profile.load_scale(t)
    return load * a, load * b


def simulate_current(
    config: MotorFaultConfig, profile: OperatingProfile, seed: int | None = 0
) -> Signal:
    """Sampled phase current for ``config`` running under ``profile``.

    Noise, when the profile asks for it, is drawn from a generator seeded
    with ``seed``.
    """
    t = profile.time
    a, b = quadrature_terms(config, profile)
    wt = 2.0 * np.pi * config.f_supply * t
    current = a * np.cos(wt) + b * np.sin(wt)
    if profile.noise_snr_db is not None:
        rng = np.random.default_rng(seed)
        power = np.mean(current**2)
        sigma = math.sqrt(power / 10.0 ** (profile.noise_snr_db / 10.0))
        current = current + rng.normal(0.0, sigma, size=current.size)
    return Signal(current, profile.sample_rate)


def envelope_oracle(config: MotorFaultConfig, profile: OperatingProfile) -> EnvelopeOracle:
    a, b = quadrature_terms(config, profile)
    return EnvelopeOracle(a_m=np.sqrt(a**2 + b**2), theta=np.arctan2(a, b), in_phase=a, quadrature=b)


class ScenarioName(str, Enum):
    HEALTHY = "healthy"
    SEVERITY_STEP = "severity_step"
    LOAD_STEP = "load_step"


RATED_TORQUE_NM = 20.0
RATED_SLIP = 0.06
MAGNETISING_FRACTION = 0.6
MOTOR_METADATA = {
    "rated_power_kw": 3.0,
    "poles": 4,
    "rotor_bars": 28,
    "connection": "star",
    "voltage_v": 380.0,
}
DEFAULT_I_F = 10.0
BROKEN_BAR_SIDEBAND = 0.05
# Width of the linear transition used for "sudden" changes; a true jump in
# the current puts broadband leakage into the Hilbert envelope.
TRANSITION_S = 0.02


def slip_for_torque(torque_nm: float) -> float:
    """Linear slip-torque map through the rated point (20 Nm, s = 0.06)."""
    return RATED_SLIP * torque_nm / RATED_TORQUE_NM


def current_scale_for_torque(torque_nm: float) -> float:
    """Current magnitude relative to rated load.

    Magnetising and torque-producing components add in quadrature; the former
    is a fixed fraction of the rated current.
    """
    m = MAGNETISING_FRACTION
    return math.sqrt(m**2 + (1.0 - m**2) * (torque_nm / RATED_TORQUE_NM) ** 2)


def step_schedule(at: float, before: float, after: float, width: float = TRANSITION_S) -> Schedule:
    """``before`` until ``at``, then a linear ramp of ``width`` seconds to ``after``."""
    if width <= 0:
        return Schedule(((0.0, before), (at, after)))
    return Schedule(((0.0, before), (at, before), (at + width, after)), kind="linear")


def two_broken_bars(i_f: float = DEFAULT_I_F) -> tuple[SidebandComponent, ...]:
    level = BROKEN_BAR_SIDEBAND * i_f
    return (SidebandComponent(order=1, i_rbb1=level, i_rbb2=level),)


def scenario(name: str | ScenarioName) -> tuple[MotorFaultConfig, OperatingProfile]:
    """Canned 3 kW, 4-pole, 28-bar motor runs (50 Hz, 10 kHz, 2 s).

    ``healthy``: no fault. ``severity_step``: two broken bars at s = 0.06 with
    the sideband magnitudes doubling at t = 0.9 s. ``load_step``: two broken
    bars with the load torque stepping from 15 to 20 Nm at t = 1 s. Steps
    take :data:`TRANSITION_S` seconds.
    """
    try:
        name = ScenarioName(name)
    except ValueError:
        valid = ", ".join(s.value for s in ScenarioName)
        raise ConfigError(f"unknown scenario {name!r}; expected one of {valid}") from None
    meta = dict(MOTOR_METADATA, scenario=name.value)
    if name is ScenarioName.HEALTHY:
        config = MotorFaultConfig(i_f=DEFAULT_I_F, metadata=meta)
        profile = OperatingProfile(slip=Schedule.constant(RATED_SLIP))
    elif name is ScenarioName.SEVERITY_STEP:
        config = MotorFaultConfig(i_f=DEFAULT_I_F, sidebands=two_broken_bars(), metadata=meta)
        profile = OperatingProfile(
            slip=Schedule.constant(RATED_SLIP),
            severity=step_schedule(0.9, 1.0, 2.0),
        )
    else:
        meta.update(torque_before_nm=15.0, torque_after_nm=20.0, step_time_s=1.0)
        config = MotorFaultConfig(i_f=DEFAULT_I_F, sidebands=two_broken_bars(), metadata=meta)
        profile = OperatingProfile(
            slip=step_schedule(1.0, slip_for_torque(15.0), slip_for_torque(20.0)),
            load_scale=step_schedule(
                1.0, current_scale_for_torque(15.0), current_scale_for_torque(20.0)
            ),
        )
    return config, profile
