"""Pooled fission/fusion statistics over the shipped corpus.

Fission numbers come from fission_only runs and fusion numbers from
fusion_only runs, so neither pass sees the other's output.
"""
import argparse
import json
from pathlib import Path

from splitmerge.experiments import stats_study
from splitmerge.text import parse_module

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", type=Path, default=ROOT / "corpus")
    ap.add_argument("--seed", type=int, default=42)
    a = ap.parse_args()
    manifest = json.loads((a.corpus / "manifest.json").read_text())
    mods = [parse_module((a.corpus / p["file"]).read_text()) for p in manifest["programs"]]
    rep = stats_study(mods, a.seed)
    for k, v in rep.metrics().items():
        print(f"{k:<14} {v:8.3f}")
    fu = rep.fusion
    print(f"\n{len(mods)} programs, {rep.fission.ori_funcs} functions, {rep.fission.sep_funcs} sepFuncs, "
          f"{fu.pairs} fused pairs, {fu.trampolines} trampolines, {fu.tagged} tagged targets")


if __name__ == "__main__":
    main()
