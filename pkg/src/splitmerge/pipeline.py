"""Pass scheduling: fission first, then fusion over the mode's pool."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from .config import ObfuscationConfig
from .fission import FissionStats, run_fission
from .fusion import FusionStats, run_fusion
from .interp import Checks
from .ir import IrModule
from .provenance import ProvenanceMap


@dataclass
class StatsReport:
    mode: str
    seed: int
    fission: FissionStats = field(default_factory=FissionStats)
    fusion: FusionStats = field(default_factory=FusionStats)

    def metrics(self) -> dict:
        return {**self.fission.to_dict(), **self.fusion.to_dict()}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "metrics": self.metrics(),
            "fission": {
                "ori_funcs": self.fission.ori_funcs,
                "processed": self.fission.processed,
                "sep_funcs": self.fission.sep_funcs,
            },
            "fusion": {
                "eligible": self.fusion.eligible,
                "pairs": self.fusion.pairs,
                "trampolines": self.fusion.trampolines,
                "tagged": self.fusion.tagged,
                "guarded_icall_sites": self.fusion.guarded_sites,
                "deep_merged_blocks": self.fusion.deep_merged,
            },
        }

    @classmethod
    def merge(cls, reports: list, mode: Optional[str] = None) -> "StatsReport":
        """Pool the counters of several reports (ratios are recomputed, not averaged)."""
        out = cls(mode or (reports[0].mode if reports else "identity"), reports[0].seed if reports else 0)
        fi, fu = out.fission, out.fusion
        for r in reports:
            fi.ori_funcs += r.fission.ori_funcs
            fi.processed += r.fission.processed
            fi.sep_funcs += r.fission.sep_funcs
            fi.sep_blocks += r.fission.sep_blocks
            fi.removed_ratio += r.fission.removed_ratio
            for k in ("eligible", "fused", "pairs", "trampolines", "tagged", "guarded_sites", "deep_merged"):
                setattr(fu, k, getattr(fu, k) + getattr(r.fusion, k))
            fu.removed_params += r.fusion.removed_params
            fu.innocuous_counts += r.fusion.innocuous_counts
        return out

    def checks(self) -> Checks:
        """Dynamic invariants for :func:`splitmerge.interp.run_checked` on the output."""
        return Checks(exit_ranges=dict(self.fission.exit_counts),
                      deep_blocks={k: set(v) for k, v in self.fusion.deep_blocks.items()})


def _rename_exit_counts(counts: dict, prov: ProvenanceMap, fusion_prov: ProvenanceMap) -> dict:
    # a fused sepFunc no longer returns exit codes itself
    return {n: k for n, k in counts.items() if fusion_prov.role.get(n) == "unchanged"}


def obfuscate(m: IrModule, cfg: Optional[ObfuscationConfig] = None) -> tuple:
    """Run the configured mode; returns ``(module, provenance, StatsReport)``."""
    cfg = cfg or ObfuscationConfig()
    report = StatsReport(cfg.mode, cfg.seed)
    ori = [f.name for f in m.defined_functions()]
    if cfg.mode == "identity":
        return copy.deepcopy(m), ProvenanceMap.identity(ori), report

    if cfg.mode == "fusion_only":
        mid, prov = copy.deepcopy(m), ProvenanceMap.identity(ori)
        report.fission.ori_funcs = len(ori)
    else:
        mid, prov, report.fission = run_fission(m, cfg.fission, cfg.seed)
    if cfg.mode == "fission_only":
        return mid, prov, report

    if cfg.mode == "fusion_only":
        pool = set(ori)
    elif cfg.mode == "fufi_sep":
        pool = {n for n, r in prov.role.items() if r == "sepFunc"}
    elif cfg.mode == "fufi_ori":
        pool = {n for n, r in prov.role.items() if r == "unchanged"}
    else:
        pool = {n for n, r in prov.role.items() if r in ("sepFunc", "unchanged")}
    fusion_cfg = copy.copy(cfg.fusion)
    fusion_cfg.seed = cfg.seed
    out, fprov, report.fusion = run_fusion(mid, lambda _m: pool, fusion_cfg)
    report.fission.exit_counts = _rename_exit_counts(report.fission.exit_counts, prov, fprov)
    return out, prov.compose(fprov), report


def separate_pass_stats(m: IrModule, seed: int, cfg: Optional[ObfuscationConfig] = None) -> StatsReport:
    """Fission and fusion measured separately, each without the other."""
    base = cfg or ObfuscationConfig()
    fi = ObfuscationConfig("fission_only", seed, base.fission, base.fusion)
    fu = ObfuscationConfig("fusion_only", seed, base.fission, base.fusion)
    report = StatsReport("separate", seed)
    report.fission = obfuscate(m, fi)[2].fission
    report.fusion = obfuscate(m, fu)[2].fusion
    return report
