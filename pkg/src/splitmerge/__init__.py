"""Function fission and fusion obfuscation over a small register IR."""
from .config import FissionConfig, FusionConfig, ObfuscationConfig
from .pipeline import StatsReport, obfuscate
from .text import parse_module, print_module

__all__ = ["FissionConfig", "FusionConfig", "ObfuscationConfig", "StatsReport", "obfuscate",
           "parse_module", "print_module"]
__version__ = "0.1.0"
