"""Fusion: merge pairs of functions into one body selected by a ctrl flag.

Direct calls pass ctrl as a constant.  Function pointers to a fused side
either carry ctrl in tag bits of the pointer (checked at indirect call
sites) or point to a trampoline that keeps the original signature.
"""
from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .analysis import escape_set, innocuous_blocks, innocuous_total_functions
from .config import FusionConfig
from .ir import (
    FLOAT_BITS,
    INT_BITS,
    TAG_CTRL,
    TAG_FUSED,
    TAG_MASK,
    BasicBlock,
    Function,
    Imm,
    Instr,
    IrModule,
    Reg,
    Term,
    fresh_name,
    is_float,
    is_int,
    zero_operand,
)
from .provenance import ProvenanceMap
from .validate import validate_function


# -- tagged pointers ------------------------------------------------------------------


def encode_tag(addr: int, ctrl: int) -> int:
    """Tag an aligned fusFunc address with the is-fused bit and ``ctrl``."""
    if addr & 0xF:
        raise ValueError(f"address {addr:#x} is not 16-byte aligned")
    return addr | TAG_FUSED | (TAG_CTRL if ctrl else 0)


def decode_tag(bits: int) -> tuple:
    """Return ``(address, ctrl)`` for a tagged value, or ``(bits, None)`` if untagged."""
    if not bits & TAG_FUSED:
        return bits, None
    return bits & ~TAG_MASK, 1 if bits & TAG_CTRL else 0


# -- compatibility and compression -------------------------------------------------------


def type_compatible(a: str, b: str, returns: bool = False) -> Optional[str]:
    """Merged type of ``a`` and ``b``, or None when merging would lose precision."""
    if returns and a == "void":
        return b
    if returns and b == "void":
        return a
    if is_int(a) and is_int(b):
        return a if INT_BITS[a] >= INT_BITS[b] else b
    if is_float(a) and is_float(b):
        return a if FLOAT_BITS[a] >= FLOAT_BITS[b] else b
    if a == "ptr" and b == "ptr":
        return "ptr"
    return None


def greedy_matching(left: list, right: list) -> list:
    """First-fit order-preserving matching: each left type takes the next compatible right type."""
    out, j0 = [], 0
    for i, t in enumerate(left):
        for j in range(j0, len(right)):
            if type_compatible(t, right[j]) is not None:
                out.append((i, j))
                j0 = j + 1
                break
    return out


def max_matching(left: list, right: list) -> list:
    """Maximum order-preserving matching, earliest pairs preferred among maxima."""
    n, k = len(left), len(right)
    best = [[0] * (k + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(k - 1, -1, -1):
            take = 1 + best[i + 1][j + 1] if type_compatible(left[i], right[j]) is not None else 0
            best[i][j] = max(take, best[i + 1][j], best[i][j + 1])
    out, j0 = [], 0
    for i in range(n):
        for j in range(j0, k):
            if type_compatible(left[i], right[j]) is not None and 1 + best[i + 1][j + 1] == best[i][j0]:
                out.append((i, j))
                j0 = j + 1
                break
    return out


@dataclass
class FusionPair:
    left: str
    right: str
    merged_params: list = field(default_factory=list)  # [(type, left_index | None, right_index | None)]
    merged_return: str = "void"
    positional: bool = True

    def compressed(self) -> int:
        return sum(1 for _, li, ri in self.merged_params if li is not None and ri is not None)

    def index_of(self, side: int, k: int) -> int:
        for j, (_, li, ri) in enumerate(self.merged_params):
            if (li if side == 0 else ri) == k:
                return j
        raise KeyError(k)


def compress_params(left: Function, right: Function, strategy: str = "max") -> tuple:
    """Merge two parameter lists: ``(merged_params, merged_return, positional)``.

    Matched pairs come first in order, then the unmatched left parameters,
    then the unmatched right ones.  ``positional`` holds when every original
    parameter keeps its own index in the merged list.
    """
    lt, rt = left.param_types(), right.param_types()
    pairs = (max_matching if strategy == "max" else greedy_matching)(lt, rt)
    merged = [(type_compatible(lt[i], rt[j]), i, j) for i, j in pairs]
    ml = {i for i, _ in pairs}
    mr = {j for _, j in pairs}
    merged += [(t, i, None) for i, t in enumerate(lt) if i not in ml]
    merged += [(t, None, j) for j, t in enumerate(rt) if j not in mr]
    positional = all((li is None or li == k) and (ri is None or ri == k) for k, (_, li, ri) in enumerate(merged))
    ret = type_compatible(left.ret, right.ret, returns=True)
    return merged, ret, positional


def make_pair(left: Function, right: Function) -> FusionPair:
    merged, ret, positional = compress_params(left, right)
    return FusionPair(left.name, right.name, merged, ret, positional)


# -- pair selection -----------------------------------------------------------------


def direct_call_edges(m: IrModule) -> set:
    edges = set()
    for f in m.defined_functions():
        for ins in f.instructions():
            if ins.op == "call":
                edges.add((f.name, ins.sym))
    return edges


def fusable(f: Function) -> bool:
    return not f.external and not f.variadic and bool(f.blocks)


def can_pair(a: Function, b: Function, edges: set) -> bool:
    if a.name == b.name or not (fusable(a) and fusable(b)):
        return False
    if type_compatible(a.ret, b.ret, returns=True) is None:
        return False
    return (a.name, b.name) not in edges and (b.name, a.name) not in edges


def select_pairs(m: IrModule, pool, rng_seed: int, max_params: int = 6) -> list:
    """Random maximal pairing of ``pool``; cheap pairs (ctrl + params <= max_params) go first."""
    funcs = {f.name: f for f in m.functions}
    names = sorted(n for n in pool if n in funcs and fusable(funcs[n]))
    random.Random(rng_seed).shuffle(names)
    edges = direct_call_edges(m)
    taken = set()
    pairs = []
    for cheap_only in (True, False):
        for i, a in enumerate(names):
            if a in taken:
                continue
            for b in names[i + 1:]:
                if b in taken or not can_pair(funcs[a], funcs[b], edges):
                    continue
                p = make_pair(funcs[a], funcs[b])
                if cheap_only and len(p.merged_params) + 1 > max_params:
                    continue
                pairs.append(p)
                taken |= {a, b}
                break
    _augment(names, funcs, edges, pairs, taken)
    return pairs


def _augment(names, funcs, edges, pairs, taken) -> None:
    # Two leftovers that cannot pair with each other may still both fit if an
    # existing pair (c, d) is split into (a, c) and (b, d).
    ok = lambda x, y: can_pair(funcs[x], funcs[y], edges)
    changed = True
    while changed:
        changed = False
        free = [n for n in names if n not in taken]
        for i, a in enumerate(free):
            for b in free[i + 1:]:
                for j, p in enumerate(pairs):
                    c, d = p.left, p.right
                    for x, y in ((c, d), (d, c)):
                        if ok(a, x) and ok(b, y):
                            pairs[j:j + 1] = [make_pair(funcs[a], funcs[x]), make_pair(funcs[b], funcs[y])]
                            taken |= {a, b}
                            changed = True
                            break
                    if changed:
                        break
                if changed:
                    break
            if changed:
                break


# -- rewriting helpers ----------------------------------------------------------------


def _widen(src: str, dst: str) -> Optional[str]:
    if src == dst:
        return None
    return "sext" if is_int(src) else "fpext"


def _narrow(src: str, dst: str) -> Optional[str]:
    if src == dst:
        return None
    return "trunc" if is_int(src) else "fptrunc"


def _call_args(p: FusionPair, side: int, args: list, argtys: list, taken: set, code: list) -> tuple:
    """Merged-position arguments for a call made with ``side``'s own arguments."""
    out = [Imm(side)]
    tys = ["i1"]
    for ty, li, ri in p.merged_params:
        k = li if side == 0 else ri
        tys.append(ty)
        if k is None:
            out.append(zero_operand(ty))
            continue
        a, aty = args[k], argtys[k]
        op = _widen(aty, ty)
        if op is None:
            out.append(a)
        elif isinstance(a, Imm):
            out.append(Imm(float(a.value) if is_float(ty) else a.value if aty != "i1" else -a.value))
        else:
            r = fresh_name(taken, f"{a.name}.w")
            code.append(Instr(op, r, ty, [a], opty=aty))
            out.append(Reg(r))
    return out, tys


def _call_result(p: FusionPair, ret: str, dest: Optional[str], taken: set) -> tuple:
    """Destination for the fused call plus the narrowing code that follows it."""
    T = p.merged_return
    if T == "void":
        return None, []
    if dest is None or ret == "void":
        return fresh_name(taken, "fus.discard"), []
    op = _narrow(T, ret)
    if op is None:
        return dest, []
    tmp = fresh_name(taken, f"{dest}.wide")
    return tmp, [Instr(op, dest, ret, [Reg(tmp)], opty=T)]


def _rewrite_direct_calls(f: Function, p: FusionPair, fus: str, sides: dict) -> int:
    n = 0
    taken = None
    for b in f.blocks:
        new = []
        for ins in b.instrs:
            if ins.op != "call" or ins.sym not in sides:
                new.append(ins)
                continue
            if taken is None:
                taken = f.used_names()
            side, ori_ret = sides[ins.sym]
            code = []
            args, tys = _call_args(p, side, ins.args, ins.argtys, taken, code)
            dest, after = _call_result(p, ori_ret, ins.dest, taken)
            code.append(Instr("call", dest, p.merged_return, args, argtys=tys, sym=fus))
            new.extend(code + after)
            n += 1
        b.instrs = new
    return n


def _trampoline(ori: Function, p: FusionPair, side: int, fus: str) -> Function:
    taken = ori.used_names() | {"entry"}
    code = []
    args, tys = _call_args(p, side, [Reg(n) for n, _ in ori.params], ori.param_types(), taken, code)
    if ori.ret == "void":
        dest, after = _call_result(p, "void", None, taken)
        term = Term("ret")
    else:
        r = fresh_name(taken, "r")
        dest, after = _call_result(p, ori.ret, r, taken)
        term = Term("ret", Reg(r))
    code.append(Instr("call", dest, p.merged_return, args, argtys=tys, sym=fus))
    return Function(ori.name, list(ori.params), ori.ret, False, [], [BasicBlock("entry", code + after, term)])


def _guard_icalls(f: Function, sigs: set, guarded: set) -> int:
    """Insert the tag check in front of every matching indirect call of ``f``."""
    count = 0
    i_block = 0
    taken = None
    while i_block < len(f.blocks):
        b = f.blocks[i_block]
        hit = None
        for i, ins in enumerate(b.instrs):
            if ins.op == "icall" and id(ins) not in guarded and (ins.ty, tuple(ins.argtys)) in sigs:
                hit = i
                break
        if hit is None:
            i_block += 1
            continue
        if taken is None:
            taken = f.used_names()
        ins = b.instrs[hit]
        fp = ins.args[0]
        tag_lbl = fresh_name(taken, f"{b.label}.tagged")
        plain_lbl = fresh_name(taken, f"{b.label}.plain")
        join_lbl = fresh_name(taken, f"{b.label}.join")
        is_tagged = fresh_name(taken, "is.fused")
        ctrl = fresh_name(taken, "tag.ctrl")
        clean = fresh_name(taken, "fp.clean")
        tagged_code = [
            Instr("tag_test", ctrl, "i1", [fp, Imm(TAG_CTRL)]),
            Instr("tag_clear", clean, "ptr", [fp]),
        ]
        plain = copy.copy(ins)
        guarded.add(id(plain))
        fused = Instr("icall_fused", None, ins.ty, [Reg(clean), Reg(ctrl)] + list(ins.args[1:]),
                      argtys=["i1"] + list(ins.argtys))
        join_code = []
        if ins.dest is not None:
            slot = fresh_name(taken, f"{ins.dest}.res")
            f.slots.append((slot, ins.ty))
            for code, call in ((tagged_code, fused), (None, plain)):
                r = fresh_name(taken, f"{ins.dest}.v")
                a = fresh_name(taken, f"{slot}.a")
                call.dest = r
                seq = [call, Instr("slot_addr", a, "ptr", sym=slot),
                       Instr("store", None, None, [Reg(r), Reg(a)], opty=ins.ty)]
                if code is None:
                    plain_code = seq
                else:
                    code.extend(seq)
            a = fresh_name(taken, f"{slot}.a")
            join_code = [Instr("slot_addr", a, "ptr", sym=slot), Instr("load", ins.dest, ins.ty, [Reg(a)])]
        else:
            tagged_code.append(fused)
            plain_code = [plain]
        head = BasicBlock(b.label, b.instrs[:hit] + [Instr("tag_test", is_tagged, "i1", [fp, Imm(TAG_FUSED)])],
                          Term("condbr", Reg(is_tagged), [tag_lbl, plain_lbl]))
        tb = BasicBlock(tag_lbl, tagged_code, Term("br", targets=[join_lbl]))
        pb = BasicBlock(plain_lbl, plain_code, Term("br", targets=[join_lbl]))
        jb = BasicBlock(join_lbl, join_code + b.instrs[hit + 1:], b.term)
        f.blocks[i_block:i_block + 1] = [head, tb, pb, jb]
        count += 1
        i_block += 3
    return count


# -- body merging -------------------------------------------------------------------


def _rename_body(f: Function, taken: set) -> tuple:
    """Copy ``f``'s blocks and slots with every name made fresh in ``taken``."""
    ren = {}
    for n, _ in f.params:
        ren[n] = fresh_name(taken, n)
    slots = []
    for n, t in f.slots:
        ren[n] = fresh_name(taken, n)
        slots.append((ren[n], t))
    labels = {}
    for b in f.blocks:
        labels[b.label] = fresh_name(taken, b.label)
    for ins in f.instructions():
        if ins.dest is not None:
            ren[ins.dest] = fresh_name(taken, ins.dest)
    blocks = []
    for b in f.blocks:
        nb = copy.deepcopy(b)
        nb.label = labels[b.label]
        for ins in nb.instrs:
            ins.rename_uses(ren)
            if ins.dest is not None:
                ins.dest = ren[ins.dest]
            if ins.op == "slot_addr":
                ins.sym = ren[ins.sym]
            if ins.op == "may_throw":
                ins.sym = labels[ins.sym]
        nb.term.rename_uses(ren)
        nb.term.targets = [labels[t] for t in nb.term.targets]
        nb.term.cases = [(k, labels[t]) for k, t in nb.term.cases]
        blocks.append(nb)
    return ren, labels, slots, blocks


def _fix_returns(blocks: list, ori_ret: str, merged: str, taken: set) -> None:
    for b in blocks:
        t = b.term
        if t.kind != "ret" or merged == "void":
            continue
        if ori_ret == "void":
            b.term = Term("ret", zero_operand(merged))
            continue
        op = _widen(ori_ret, merged)
        if op is None:
            continue
        if isinstance(t.value, Imm):
            v = t.value.value
            b.term = Term("ret", Imm(float(v) if is_float(merged) else (-v if ori_ret == "i1" else v)))
            continue
        r = fresh_name(taken, "ret.w")
        b.instrs.append(Instr(op, r, merged, [t.value], opty=ori_ret))
        b.term = Term("ret", Reg(r))


def _self_contained(b: BasicBlock, outer: set) -> bool:
    defined = set(outer)
    for ins in b.instrs:
        if ins.op in ("call", "icall", "icall_fused"):
            return False
        if any(u not in defined for u in ins.uses()):
            return False
        if ins.dest is not None:
            defined.add(ins.dest)
    return all(u in defined for u in b.term.uses())


def _deep_merge(m: IrModule, fus: Function, lcand: list, rcand: list, taken: set) -> list:
    """Pair candidate blocks in order; keep each merge only if the function stays valid."""
    merged = []
    used_r = set()
    for ll in lcand:
        for rl in rcand:
            if rl in used_r:
                continue
            saved = copy.deepcopy(fus.blocks)
            snap = set(taken)
            label = _merge_blocks(fus, ll, rl, taken)
            if validate_function(m, fus):
                fus.blocks = saved
                taken.clear()
                taken |= snap
                continue
            used_r.add(rl)
            merged.append(label)
            break
    return merged


def _merge_blocks(fus: Function, ll: str, rl: str, taken: set) -> str:
    bmap = fus.block_map()
    lb, rb = bmap[ll], bmap[rl]
    label = fresh_name(taken, "deep")
    lt, rt = fresh_name(taken, f"{label}.lt"), fresh_name(taken, f"{label}.rt")
    mb = BasicBlock(label, lb.instrs + rb.instrs, Term("condbr", Reg("ctrl"), [rt, lt]))
    # a trailing may_throw must stay last in its block
    tail_l = [lb.instrs[-1]] if lb.handler() else []
    tail_r = [rb.instrs[-1]] if rb.handler() else []
    mb.instrs = [i for i in mb.instrs if i.op != "may_throw"]
    ltb = BasicBlock(lt, tail_l, lb.term)
    rtb = BasicBlock(rt, tail_r, rb.term)
    blocks = []
    for b in fus.blocks:
        if b.label == ll:
            blocks += [mb, ltb]
        elif b.label == rl:
            blocks.append(rtb)
        else:
            blocks.append(b)
    for b in blocks:
        b.retarget(ll, label)
        b.retarget(rl, label)
    fus.blocks = blocks
    return label


@dataclass
class FusedInfo:
    name: str
    pair: FusionPair
    deep_blocks: list = field(default_factory=list)
    trampolines: list = field(default_factory=list)
    tagged: list = field(default_factory=list)
    guarded_sites: int = 0


def fuse_pair(m: IrModule, p: FusionPair, es: set, deep: bool = True,
              innocuous: Optional[dict] = None, guarded: Optional[set] = None) -> FusedInfo:
    """Fuse ``p.left`` and ``p.right`` in place; returns what was created."""
    if guarded is None:
        guarded = set()
    funcs = {f.name: f for f in m.functions}
    if p.left not in funcs or p.right not in funcs:
        raise ValueError(f"pair {p.left}/{p.right} no longer present")
    left, right = funcs[p.left], funcs[p.right]
    if not can_pair(left, right, direct_call_edges(m)):
        raise ValueError(f"pair {p.left}/{p.right} violates the selection constraints")
    fresh = make_pair(left, right)
    if fresh.merged_params != p.merged_params or fresh.merged_return != p.merged_return:
        raise ValueError(f"pair {p.left}/{p.right} is stale")

    name = m.fresh_function_name(f"{p.left}.{p.right}.fus")
    taken = {"ctrl", "entry"}
    mparams = [("ctrl", "i1")]
    for k, (ty, _, _) in enumerate(p.merged_params):
        mparams.append((fresh_name(taken, f"x{k}"), ty))
    entry_code = []
    bodies = []
    outer = {n for n, _ in mparams}
    for side, f in ((0, left), (1, right)):
        ren, labels, slots, blocks = _rename_body(f, taken)
        for k, (pname, pty) in enumerate(f.params):
            j = p.index_of(side, k)
            src, sty = mparams[j + 1]
            op = _narrow(sty, pty)
            if op is None:
                alias = {ren[pname]: src}
            else:
                entry_code.append(Instr(op, ren[pname], pty, [Reg(src)], opty=sty))
                outer.add(ren[pname])
                alias = {}
            for b in blocks:
                for ins in b.instrs:
                    ins.rename_uses(alias)
                b.term.rename_uses(alias)
        _fix_returns(blocks, f.ret, p.merged_return, taken)
        cands = []
        if deep and innocuous is not None:
            inn = innocuous.get(f.name, set())
            cands = [labels[b.label] for b in f.blocks if b.label in inn]
        bodies.append((slots, blocks, cands))
    entry = BasicBlock("entry", entry_code,
                       Term("condbr", Reg("ctrl"), [bodies[1][1][0].label, bodies[0][1][0].label]))
    fus = Function(name, mparams, p.merged_return, False, bodies[0][0] + bodies[1][0],
                   [entry] + bodies[0][1] + bodies[1][1])
    info = FusedInfo(name, p)

    # place the fusFunc where the left function was; trampolines keep the original slots
    addr_taken = set()
    for g in m.functions:
        for ins in g.instructions():
            if ins.op == "addr_of_func":
                addr_taken.add(ins.sym)
    tramps = {}
    tag_sides = {}
    for side, f in ((0, left), (1, right)):
        if f.name in m.exported or (f.name in addr_taken and (f.name in es or not p.positional)):
            tramps[f.name] = _trampoline(f, p, side, name)
        elif f.name in addr_taken:
            tag_sides[f.name] = side
    new_funcs = []
    for g in m.functions:
        if g is left:
            new_funcs.append(fus)
            if g.name in tramps:
                new_funcs.append(tramps[g.name])
        elif g is right:
            if g.name in tramps:
                new_funcs.append(tramps[g.name])
        else:
            new_funcs.append(g)
    m.functions = new_funcs
    info.trampolines = sorted(tramps)

    sides = {left.name: (0, left.ret), right.name: (1, right.ret)}
    for g in m.defined_functions():
        if g.name in tramps:
            continue
        _rewrite_direct_calls(g, p, name, sides)

    if tag_sides:
        sigs = set()
        for fname, side in tag_sides.items():
            f = left if side == 0 else right
            sigs.add((f.ret, tuple(f.param_types())))
            for g in m.defined_functions():
                taken_g = None
                for b in g.blocks:
                    new = []
                    for ins in b.instrs:
                        if ins.op == "addr_of_func" and ins.sym == fname:
                            if taken_g is None:
                                taken_g = g.used_names()
                            raw = fresh_name(taken_g, f"{ins.dest}.raw")
                            tag = TAG_FUSED | (TAG_CTRL if side else 0)
                            new.append(Instr("addr_of_func", raw, "ptr", sym=name))
                            new.append(Instr("tag_set", ins.dest, "ptr", [Reg(raw), Imm(tag)]))
                        else:
                            new.append(ins)
                    b.instrs = new
        info.tagged = sorted(tag_sides)
        for g in m.defined_functions():
            info.guarded_sites += _guard_icalls(g, sigs, guarded)

    if deep:
        # deep candidates are checked on the final body so rewritten calls are seen
        lc = [lbl for lbl in bodies[0][2] if _self_contained(fus.block_map()[lbl], outer)] if bodies[0][2] else []
        rc = [lbl for lbl in bodies[1][2] if _self_contained(fus.block_map()[lbl], outer)] if bodies[1][2] else []
        if lc and rc:
            info.deep_blocks = _deep_merge(m, fus, lc, rc, taken)
    m.refresh_attributes()
    return info


# -- module driver -------------------------------------------------------------------


@dataclass
class FusionStats:
    eligible: int = 0
    fused: int = 0
    pairs: int = 0
    removed_params: list = field(default_factory=list)
    innocuous_counts: list = field(default_factory=list)
    trampolines: int = 0
    tagged: int = 0
    guarded_sites: int = 0
    deep_merged: int = 0
    deep_blocks: dict = field(default_factory=dict)  # fusFunc -> merged block labels

    @property
    def fusion_ratio(self) -> float:
        return self.fused / self.eligible if self.eligible else 0.0

    @property
    def mean_rp(self) -> float:
        return sum(self.removed_params) / len(self.removed_params) if self.removed_params else 0.0

    @property
    def mean_hbb(self) -> float:
        return sum(self.innocuous_counts) / len(self.innocuous_counts) if self.innocuous_counts else 0.0

    def to_dict(self) -> dict:
        return {"Fusion Ratio": self.fusion_ratio, "#RP": self.mean_rp, "#HBB": self.mean_hbb}


def run_fusion(m: IrModule, pool: Optional[Callable] = None, cfg: Optional[FusionConfig] = None,
               rng_seed: Optional[int] = None) -> tuple:
    """Select pairs from the pool and fuse them; returns ``(module, provenance, stats)``.

    ``pool`` maps a module to the set of function names allowed to fuse;
    by default every defined function is in the pool.
    """
    cfg = cfg or FusionConfig()
    seed = cfg.seed if rng_seed is None else rng_seed
    out = copy.deepcopy(m)
    names = set(pool(out)) if pool is not None else {f.name for f in out.defined_functions()}
    prov = ProvenanceMap.identity(f.name for f in out.defined_functions())
    stats = FusionStats(eligible=len([n for n in names if out.has_function(n) and not out.function(n).external]))
    total = innocuous_total_functions(out)
    innocuous = {}
    for f in out.defined_functions():
        if f.name in names:
            innocuous[f.name] = innocuous_blocks(out, f, total)
            stats.innocuous_counts.append(len(innocuous[f.name]))
    es = escape_set(out)
    pairs = select_pairs(out, names, seed, cfg.max_params)
    guarded: set = set()
    for p in pairs:
        info = fuse_pair(out, p, es, cfg.deep, innocuous, guarded)
        stats.pairs += 1
        stats.fused += 2
        stats.removed_params.append(p.compressed())
        stats.trampolines += len(info.trampolines)
        stats.tagged += len(info.tagged)
        stats.guarded_sites += info.guarded_sites
        stats.deep_merged += len(info.deep_blocks)
        if info.deep_blocks:
            stats.deep_blocks[info.name] = list(info.deep_blocks)
        prov.drop(p.left)
        prov.drop(p.right)
        prov.set(info.name, {p.left, p.right}, "fusFunc")
        for t in info.trampolines:
            prov.set(t, {t}, "trampoline")
    return out, prov, stats
