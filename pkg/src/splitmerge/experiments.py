"""Corpus-wide measurements shared by scripts/ and the acceptance suite."""
from __future__ import annotations

from collections import defaultdict

from . import diffeval
from .config import ObfuscationConfig
from .pipeline import StatsReport, obfuscate, separate_pass_stats

DIFF_MODES = ("identity", "fission_only", "fusion_only", "fufi_sep", "fufi_ori", "fufi_all")
DISTANCE_MODES = ("fufi_sep", "fufi_ori", "fufi_all")


def diffing_study(modules: list, seed: int = 42) -> dict:
    """Mean per-program Precision@1 for every mode, plus mean normalized opcode distance.

    Distances are normalized per program over the three FuFi variants
    before averaging, so each program weighs the same.
    """
    precision = defaultdict(list)
    distance = defaultdict(list)
    for m in modules:
        outs = {}
        for mode in DIFF_MODES:
            out, prov, _ = obfuscate(m, ObfuscationConfig(mode, seed))
            outs[mode] = out
            precision[mode].append(diffeval.diff_modules(m, out, prov).precision_at_1)
        for mode, d in zip(DISTANCE_MODES, diffeval.opcode_distance(m, [outs[k] for k in DISTANCE_MODES])):
            distance[mode].append(d)
    return {
        "seed": seed,
        "programs": len(modules),
        "precision_at_1": {k: sum(v) / len(v) for k, v in precision.items()},
        "opcode_distance": {k: sum(v) / len(v) for k, v in distance.items()},
    }


def stats_study(modules: list, seed: int = 42) -> StatsReport:
    return StatsReport.merge([separate_pass_stats(m, seed) for m in modules], "separate")
