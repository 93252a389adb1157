"""Sharing, freeness, linearity and groundness analysis of logic programs."""

from .fixpoint_engine import AnalysisResult, Config, ConfigError, analyze
from .precision_harness import Metrics, compare, measure
from .kernel_terms import parse_program

__all__ = [
    "AnalysisResult",
    "Config",
    "ConfigError",
    "Metrics",
    "analyze",
    "compare",
    "measure",
    "parse_program",
]
