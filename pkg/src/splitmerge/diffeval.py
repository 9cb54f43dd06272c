"""A small BinDiff-style differ used to measure how much obfuscation hides.

Functions are described by CFG and call-graph counts plus an opcode
histogram; names are never looked at except to break ties.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .ir import Function, IrModule
from .provenance import ProvenanceMap

SCALARS = ("n_blocks", "n_edges", "n_calls", "n_instructions", "cg_in_degree", "cg_out_degree")


@dataclass
class FunctionFeatures:
    n_blocks: int = 0
    n_edges: int = 0
    n_calls: int = 0
    n_instructions: int = 0
    opcode_histogram: dict = field(default_factory=dict)
    cg_in_degree: int = 0
    cg_out_degree: int = 0

    def scalars(self) -> tuple:
        return tuple(getattr(self, k) for k in SCALARS)


@dataclass
class MatchReport:
    matches: list = field(default_factory=list)  # (fn_a, fn_b, similarity)
    per_function_rank: dict = field(default_factory=dict)
    precision_at_1: Optional[float] = None

    def partner(self) -> dict:
        return {a: b for a, b, _ in self.matches}


def _opcodes(f: Function) -> Counter:
    h = Counter(ins.op for ins in f.instructions())
    h.update(b.term.kind for b in f.blocks)
    return h


def _callees(f: Function) -> set:
    return {ins.sym for ins in f.instructions() if ins.op == "call"}


def extract_features(m: IrModule) -> dict:
    """Features for every defined function (trampolines included)."""
    defined = m.defined_functions()
    out_edges = {f.name: _callees(f) for f in defined}
    in_deg = Counter()
    for caller, callees in out_edges.items():
        for c in callees:
            in_deg[c] += 1
    feats = {}
    for f in defined:
        hist = _opcodes(f)
        feats[f.name] = FunctionFeatures(
            n_blocks=len(f.blocks),
            n_edges=sum(len(set(b.successors())) for b in f.blocks),
            n_calls=sum(1 for ins in f.instructions() if ins.is_call()),
            n_instructions=sum(hist.values()),
            opcode_histogram=dict(sorted(hist.items())),
            cg_in_degree=in_deg[f.name],
            cg_out_degree=len(out_edges[f.name]),
        )
    return feats


def cosine(a: dict, b: dict) -> float:
    if not a and not b:
        return 1.0
    dot = sum(v * b.get(k, 0) for k, v in a.items())
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0 or nb == 0:
        return 0.0
    return min(1.0, dot / (na * nb))


def similarity(a: FunctionFeatures, b: FunctionFeatures) -> float:
    """Half histogram cosine, half mean normalized agreement of the counts."""
    close = [1 - abs(x - y) / max(x, y, 1) for x, y in zip(a.scalars(), b.scalars())]
    return 0.5 * cosine(a.opcode_histogram, b.opcode_histogram) + 0.5 * sum(close) / len(close)


def _true_candidates(a: str, names_b, prov: Optional[ProvenanceMap]) -> set:
    if prov is None:
        return {a} & set(names_b)
    return {b for b in names_b if a in prov.origins_of(b)}


def match(orig: dict, obf: dict, prov: Optional[ProvenanceMap] = None) -> MatchReport:
    """Greedy matching in descending similarity, ties by name.

    ``per_function_rank`` gives, for each original function, the 1-based rank
    of its best true counterpart among all candidates (``None`` if it has
    none); without provenance the true counterpart is the same name.
    """
    scored = []
    sims = {}
    for a, fa in orig.items():
        for b, fb in obf.items():
            s = similarity(fa, fb)
            sims[a, b] = s
            scored.append((-s, a, b))
    scored.sort()
    used_a, used_b = set(), set()
    rep = MatchReport()
    for neg, a, b in scored:
        if a in used_a or b in used_b:
            continue
        used_a.add(a)
        used_b.add(b)
        rep.matches.append((a, b, -neg))
    for a in sorted(orig):
        ranked = sorted(obf, key=lambda b: (-sims[a, b], b))
        truth = _true_candidates(a, obf, prov)
        rep.per_function_rank[a] = next((i + 1 for i, b in enumerate(ranked) if b in truth), None)
    return rep


def precision_at_1(report: MatchReport, prov: ProvenanceMap, originals=None) -> float:
    """Share of original functions whose matched partner descends from them."""
    originals = sorted(originals if originals is not None else {a for a, _, _ in report.matches})
    if not originals:
        return 1.0
    partner = report.partner()
    hits = sum(1 for a in originals if a in partner and a in prov.origins_of(partner[a]))
    return hits / len(originals)


def module_histogram(m: IrModule) -> Counter:
    h = Counter()
    for f in m.defined_functions():
        h.update(_opcodes(f))
    return h


def opcode_distance(baseline: IrModule, variants: list) -> list:
    """Euclidean histogram distance to ``baseline``, scaled by the largest one."""
    if not variants:
        raise ValueError("need at least one variant")
    base = module_histogram(baseline)
    raw = []
    for v in variants:
        h = module_histogram(v)
        keys = set(base) | set(h)
        raw.append(math.sqrt(sum((base[k] - h[k]) ** 2 for k in keys)))
    top = max(raw)
    return [d / top if top else 0.0 for d in raw]


def diff_modules(orig: IrModule, obf: IrModule, prov: ProvenanceMap) -> MatchReport:
    fa, fb = extract_features(orig), extract_features(obf)
    rep = match(fa, fb, prov)
    rep.precision_at_1 = precision_at_1(rep, prov, originals=fa)
    return rep


def report_json(rep: MatchReport, opcode_distances: list = ()) -> str:
    return json.dumps({
        "precision_at_1": rep.precision_at_1,
        "matches": [[a, b, round(s, 6)] for a, b, s in rep.matches],
        "ranks": rep.per_function_rank,
        "opcode_distances": list(opcode_distances),
    }, indent=2, sort_keys=True)


def report_table(rep: MatchReport, opcode_distances: list = ()) -> str:
    rows = [f"{'original':<24} {'matched':<32} {'sim':>6} {'rank':>5}"]
    partner = {a: (b, s) for a, b, s in rep.matches}
    for a in sorted(rep.per_function_rank):
        b, s = partner.get(a, ("-", float("nan")))
        r = rep.per_function_rank[a]
        rows.append(f"{a:<24} {b:<32} {s:6.3f} {r if r is not None else '-':>5}")
    if rep.precision_at_1 is not None:
        rows.append(f"Precision@1: {rep.precision_at_1:.4f}")
    for i, d in enumerate(opcode_distances):
        rows.append(f"opcode distance[{i}]: {d:.4f}")
    return "\n".join(rows)
