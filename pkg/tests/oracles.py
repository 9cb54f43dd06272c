"""Slow, obviously-correct reference implementations used as test oracles."""
from fractions import Fraction
from itertools import combinations

from splitmerge.fusion import type_compatible


def successors(f) -> dict:
    return {b.label: list(dict.fromkeys(b.successors())) for b in f.blocks}


def reachable(f, removed=None) -> set:
    succ = successors(f)
    entry = f.blocks[0].label
    if entry == removed:
        return set()
    seen, stack = {entry}, [entry]
    while stack:
        u = stack.pop()
        for v in succ[u]:
            if v != removed and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def dominator_sets(f) -> dict:
    """d dominates b iff deleting d makes b unreachable (or d == b)."""
    live = reachable(f)
    dom = {b: {b} for b in live}
    for d in live:
        cut = reachable(f, removed=d)
        for b in live - cut:
            dom[b].add(d)
    return dom


def idoms(f) -> dict:
    dom = dominator_sets(f)
    out = {}
    for b, ds in dom.items():
        strict = ds - {b}
        if strict:
            # the closest strict dominator is the one with the most dominators
            out[b] = max(strict, key=lambda d: len(dom[d]))
    return out


def natural_loops(f) -> dict:
    """header -> body, merging back edges that share a header."""
    dom = dominator_sets(f)
    succ = successors(f)
    pred = {b: [] for b in succ}
    for u, vs in succ.items():
        for v in vs:
            pred[v].append(u)
    loops = {}
    for u in dom:
        for h in succ[u]:
            if h in dom and h in dom[u]:
                body = {h, u}
                stack = [u] if u != h else []
                while stack:
                    x = stack.pop()
                    for p in pred[x]:
                        if p in dom and p not in body:
                            body.add(p)
                            stack.append(p)
                loops.setdefault(h, set()).update(body)
    return loops


def region_selection(f, freq: dict, trip: int, min_effect: int = 2) -> list:
    """Exhaustive greedy region selection by effect / cost.

    Candidates are dominator subtrees other than the whole function; cost
    is the head's frequency times the trip count of a loop holding the head.
    Returns the chosen (head, members) in order.
    """
    dom = dominator_sets(f)
    loops = natural_loops(f)
    order = [b.label for b in f.blocks[1:] if b.label in dom]
    cands = {}
    for h in order:
        members = frozenset(b for b in dom if h in dom[b])
        if _blocked(f, members):
            continue
        holders = [body for body in loops.values() if h in body]
        cost = Fraction(freq[h]) * (trip if holders else 1)
        cands[h] = (members, Fraction(len(members)) / cost)
    chosen = []
    while cands:
        top = max(v for _, v in cands.values())
        h = next(x for x in order if x in cands and cands[x][1] == top)
        members = cands[h][0]
        if len(members) < min_effect:
            del cands[h]
            continue
        chosen.append((h, sorted(members)))
        cands = {x: c for x, c in cands.items() if not (c[0] & members)}
    return chosen


def _blocked(f, members) -> bool:
    for b in f.blocks:
        if b.label in members:
            for ins in b.instrs:
                if ins.op == "setjmp" or (ins.op == "may_throw" and ins.sym not in members):
                    return True
    return False


def max_compatible_matching(left: list, right: list) -> int:
    """Size of the largest order-preserving matching of compatible types, by enumeration."""
    best = 0
    for k in range(min(len(left), len(right)), 0, -1):
        for li in combinations(range(len(left)), k):
            for ri in combinations(range(len(right)), k):
                if all(type_compatible(left[a], right[b]) is not None for a, b in zip(li, ri)):
                    return k
    return best
