"""Precision@1 and opcode distance per mode over the shipped corpus.

    python scripts/reproduce_diffing.py            # print the table
    python scripts/reproduce_diffing.py --freeze   # also rewrite tests/goldens/diffing.json
"""
import argparse
import json
from pathlib import Path

from splitmerge.experiments import diffing_study
from splitmerge.text import parse_module

ROOT = Path(__file__).resolve().parent.parent


def load(corpus: Path) -> list:
    manifest = json.loads((corpus / "manifest.json").read_text())
    return [parse_module((corpus / p["file"]).read_text()) for p in manifest["programs"]]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus", type=Path, default=ROOT / "corpus")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--freeze", action="store_true")
    a = ap.parse_args()
    res = diffing_study(load(a.corpus), a.seed)
    print(f"{'mode':<14} {'Precision@1':>12} {'opcode dist':>12}")
    for mode, p in res["precision_at_1"].items():
        d = res["opcode_distance"].get(mode)
        print(f"{mode:<14} {p:12.4f} {'' if d is None else format(d, '12.4f'):>12}")
    if a.freeze:
        out = ROOT / "tests" / "goldens" / "diffing.json"
        out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
