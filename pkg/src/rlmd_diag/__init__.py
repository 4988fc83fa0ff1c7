"""Broken-rotor-bar diagnosis from stator current: Hilbert-transform envelope,
robust local mean decomposition, and tracking of the dominant fault component."""

from .diagnostics import DiagnosisConfig, DiagnosisReport, Verdict, diagnose, extract_sce
from .hilbert import AnalyticSignal, Signal, analytic_signal, envelope, hilbert_transform, instantaneous_frequency
from .motorsim import MotorFaultConfig, OperatingProfile, ScenarioName, scenario, simulate_current
from .rlmd import Decomposition, ProductFunction, RLMDConfig, decompose

__version__ = "0.1.0"

__all__ = [
    "AnalyticSignal",
    "Decomposition",
    "DiagnosisConfig",
    "DiagnosisReport",
    "MotorFaultConfig",
    "OperatingProfile",
    "ProductFunction",
    "RLMDConfig",
    "ScenarioName",
    "Signal",
    "Verdict",
    "analytic_signal",
    "decompose",
    "diagnose",
    "envelope",
    "extract_sce",
    "hilbert_transform",
    "instantaneous_frequency",
    "scenario",
    "simulate_current",
]
