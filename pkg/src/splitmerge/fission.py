"""Fission: split dominator subtrees of a function out into sepFuncs.

Region choice follows the greedy value = effect / cost selection over
dominator subtrees.  Outlining passes every cross-boundary value through a
slot pointer, moves slots used only inside the region into the sepFunc, and
encodes which exit was taken in the sepFunc's return value.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .analysis import (
    DomTree,
    FreqMap,
    LoopInfo,
    block_frequency,
    dominator_tree,
    loop_info,
    reverse_postorder,
)
from .config import FissionConfig
from .ir import (
    BasicBlock,
    Function,
    Imm,
    Instr,
    IrModule,
    Reg,
    Term,
    fresh_name,
)
from .provenance import ProvenanceMap

RET_EXIT = "<ret>"


@dataclass
class Region:
    head: str
    members: list  # labels in function block order
    exits: list = field(default_factory=list)  # [(source, target | RET_EXIT)]
    live_in_regs: set = field(default_factory=set)
    used_slots: set = field(default_factory=set)
    private_slots: set = field(default_factory=set)
    effect: int = 0
    cost: Fraction = Fraction(1)

    @property
    def value(self) -> Fraction:
        return Fraction(self.effect) / self.cost

    def exit_targets(self) -> list:
        """Distinct exit targets in exit-number order."""
        out = []
        for _, t in self.exits:
            if t not in out:
                out.append(t)
        return out


@dataclass
class FissionStats:
    ori_funcs: int = 0
    processed: int = 0
    sep_funcs: int = 0
    sep_blocks: list = field(default_factory=list)
    removed_ratio: list = field(default_factory=list)
    exit_counts: dict = field(default_factory=dict)  # sepFunc -> k

    @property
    def fission_ratio(self) -> float:
        return self.sep_funcs / self.ori_funcs if self.ori_funcs else 0.0

    @property
    def mean_bb(self) -> float:
        return sum(self.sep_blocks) / len(self.sep_blocks) if self.sep_blocks else 0.0

    @property
    def rr(self) -> float:
        return sum(self.removed_ratio) / len(self.removed_ratio) if self.removed_ratio else 0.0

    def to_dict(self) -> dict:
        return {"Fission Ratio": self.fission_ratio, "#BB": self.mean_bb, "RR": self.rr}


class FissionError(Exception):
    pass


# -- region identification --------------------------------------------------------


def region_blockers(f: Function, members: set) -> Optional[str]:
    """Why ``members`` cannot become a region, or None if it can."""
    for b in f.blocks:
        if b.label not in members:
            continue
        for ins in b.instrs:
            if ins.op == "setjmp":
                return "setjmp call-site"
            if ins.op == "may_throw" and ins.sym not in members:
                return "may_throw handler outside region"
    return None


def region_cost(head: str, li: LoopInfo, fm: FreqMap) -> Fraction:
    cost = Fraction(fm.freq[head])
    lp = li.innermost(head)
    if lp is not None:
        cost *= lp.trip_count
    return cost


def identify_regions(f: Function, dt: DomTree, li: LoopInfo, fm: FreqMap,
                     cfg: Optional[FissionConfig] = None) -> list:
    """Greedy region selection; returns regions in selection order."""
    cfg = cfg or FissionConfig()
    order = [b.label for b in f.blocks if b.label in dt.parent]
    pos = {lbl: i for i, lbl in enumerate(f.labels())}
    candidates = []
    for head in order:
        members = set(dt.subtree(head))
        if region_blockers(f, members) is not None:
            continue
        r = Region(head, sorted(members, key=pos.__getitem__))
        r.effect = len(members)
        r.cost = region_cost(head, li, fm)
        candidates.append(r)
    chosen = []
    while candidates:
        best = candidates[0]
        for r in candidates[1:]:
            if r.value > best.value:
                best = r
        if best.effect < cfg.min_effect:
            candidates.remove(best)
            continue
        if cfg.max_regions_per_function is not None and len(chosen) >= cfg.max_regions_per_function:
            break
        chosen.append(best)
        taken = set(best.members)
        candidates = [r for r in candidates if not taken & set(r.members)]
    return chosen


def compute_exits(f: Function, members: set) -> list:
    """Exit edges deduplicated by target, ordered by first (source, target) position."""
    pos = {lbl: i for i, lbl in enumerate(f.labels())}
    ret_pos = len(pos)
    first: dict = {}
    for b in f.blocks:
        if b.label not in members:
            continue
        targets = [t for t in b.successors() if t not in members]
        if b.term.kind == "ret":
            targets.append(RET_EXIT)
        for t in targets:
            key = (pos[b.label], pos.get(t, ret_pos))
            if t not in first or key < first[t][0]:
                first[t] = (key, b.label)
    ordered = sorted(first.items(), key=lambda kv: kv[1][0])
    return [(src, t) for t, (_, src) in ordered]


# -- outlining ----------------------------------------------------------------------


def _def_sites(f: Function) -> dict:
    out = {n: (None, -1, None) for n, _ in f.params}
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            if ins.dest is not None:
                out[ins.dest] = (b.label, i, ins)
    return out


def _users(f: Function) -> dict:
    """register -> set of block labels that use it."""
    out: dict = {}
    for b in f.blocks:
        for ins in b.instrs:
            for u in ins.uses():
                out.setdefault(u, set()).add(b.label)
        for u in b.term.uses():
            out.setdefault(u, set()).add(b.label)
    return out


def _slot_addr_regs(f: Function) -> dict:
    """slot_addr result register -> slot name."""
    return {ins.dest: ins.sym for ins in f.instructions() if ins.op == "slot_addr"}


def _address_escapes(f: Function, slot: str, addr_regs: dict) -> bool:
    regs = {r for r, s in addr_regs.items() if s == slot}
    for b in f.blocks:
        for ins in b.instrs:
            for k, a in enumerate(ins.args):
                if isinstance(a, Reg) and a.name in regs:
                    if ins.op == "load" or (ins.op == "store" and k == 1):
                        continue
                    return True
        if isinstance(b.term.value, Reg) and b.term.value.name in regs:
            return True
    return False


def _stored_before_load(f: Function, members: set, head: str, slot: str, addr_regs: dict) -> bool:
    """Every load of ``slot`` inside the region sees a store made inside the region."""
    bmap = f.block_map()
    preds = f.predecessors()

    def scan(label, stored_in):
        stored = stored_in
        for ins in bmap[label].instrs:
            if ins.op == "load" and isinstance(ins.args[0], Reg) and addr_regs.get(ins.args[0].name) == slot:
                if not stored:
                    return stored, False
            if ins.op == "store" and isinstance(ins.args[1], Reg) and addr_regs.get(ins.args[1].name) == slot:
                stored = True
        return stored, True

    # must-stored at block entry; the head is entered fresh on every call
    order = [lbl for lbl in reverse_postorder(f) if lbl in members]
    inn = {lbl: True for lbl in order}
    inn[head] = False
    out = {}
    changed = True
    while changed:
        changed = False
        for lbl in order:
            if lbl != head:
                ps = [p for p in preds[lbl] if p in members]
                val = all(out.get(p, True) for p in ps) if ps else False
                if val != inn[lbl]:
                    inn[lbl] = val
                    changed = True
            o, _ = scan(lbl, inn[lbl])
            if out.get(lbl) != o:
                out[lbl] = o
                changed = True
    return all(scan(lbl, inn[lbl])[1] for lbl in order)


def analyze_region(f: Function, r: Region) -> Region:
    """Fill in exits, live-ins and slot sets for ``r`` against the current ``f``."""
    members = set(r.members)
    r.exits = compute_exits(f, members)
    defs = _def_sites(f)
    users = _users(f)
    addr_regs = _slot_addr_regs(f)
    live_in = set()
    for reg, blocks in users.items():
        dblock = defs.get(reg, (None,))[0]
        if dblock not in members and blocks & members:
            live_in.add(reg)
    r.live_in_regs = live_in
    used = set()
    for b in f.blocks:
        if b.label in members:
            for ins in b.instrs:
                if ins.op == "slot_addr":
                    used.add(ins.sym)
    for reg in live_in:
        if reg in addr_regs:
            used.add(addr_regs[reg])
    r.used_slots = used
    private = set()
    for s in used:
        if _address_escapes(f, s, addr_regs):
            continue
        outside_load = any(
            ins.op == "load" and isinstance(ins.args[0], Reg) and addr_regs.get(ins.args[0].name) == s
            for b in f.blocks if b.label not in members for ins in b.instrs
        )
        if outside_load:
            continue
        if _stored_before_load(f, members, r.head, s, addr_regs):
            private.add(s)
    r.private_slots = private
    return r


def outline_region(f: Function, r: Region, name: str) -> tuple:
    """Move region ``r`` of ``f`` into a new function ``name``.

    ``f`` is rewritten in place; returns ``(sepFunc, f, k)`` with k the exit
    count.  Raises :class:`FissionError` for regions that cannot be moved.
    """
    members = set(r.members)
    why = region_blockers(f, members)
    if why is not None:
        raise FissionError(f"@{f.name}: region at {r.head}: {why}")
    if f.entry.label in members:
        raise FissionError(f"@{f.name}: region at {r.head} contains the entry block")
    analyze_region(f, r)
    targets = r.exit_targets()
    k = len(targets)
    if k == 0:
        raise FissionError(f"@{f.name}: region at {r.head} has no exits")

    names = f.used_names()
    reg_types = f.reg_types()
    addr_regs = _slot_addr_regs(f)
    defs = _def_sites(f)

    # registers flowing into the region travel through fresh demotion slots
    demoted = {}
    for reg in sorted(r.live_in_regs):
        if reg in addr_regs:
            continue
        slot = fresh_name(names, f"{reg}.d")
        f.slots.append((slot, reg_types[reg]))
        demoted[reg] = slot
    # values defined inside but read outside (only possible from unreachable code)
    users = _users(f)
    live_out = {}
    for reg, blocks in sorted(users.items()):
        dblock = defs.get(reg, (None,))[0]
        if dblock in members and blocks - members:
            slot = fresh_name(names, f"{reg}.o")
            f.slots.append((slot, reg_types[reg]))
            live_out[reg] = slot
    has_ret = RET_EXIT in targets
    retval_slot = None
    if has_ret and f.ret != "void":
        retval_slot = fresh_name(names, "retval")
        f.slots.append((retval_slot, f.ret))

    shared = [s for s, _ in f.slots
              if (s in r.used_slots and s not in r.private_slots)
              or s in demoted.values() or s in live_out.values() or s == retval_slot]
    private = [(s, t) for s, t in f.slots if s in r.private_slots]

    # -- build the sepFunc -------------------------------------------------------
    sep_names = set()
    for b in f.blocks:
        if b.label in members:
            sep_names.add(b.label)
            for ins in b.instrs:
                if ins.dest:
                    sep_names.add(ins.dest)
    sep_names |= {s for s, _ in private}
    slot_ptr = {}
    params = []
    for s in shared:
        p = fresh_name(sep_names, f"{s}.p")
        slot_ptr[s] = p
        params.append((p, "ptr"))
    body = [copy.deepcopy(b) for b in f.blocks if b.label in members]
    body.sort(key=lambda b: b.label != r.head)
    sep = Function(name, params, "i32" if k >= 2 else "void", False, list(private), [])

    entry_code = []
    rename = {}
    for reg, slot in demoted.items():
        nv = fresh_name(sep_names, reg)
        rename[reg] = nv
        entry_code.append(Instr("load", nv, reg_types[reg], [Reg(slot_ptr[slot])]))
    for reg in r.live_in_regs:
        if reg in addr_regs:
            s = addr_regs[reg]
            if s in slot_ptr:
                rename[reg] = slot_ptr[s]
            else:
                nv = fresh_name(sep_names, reg)
                rename[reg] = nv
                entry_code.append(Instr("slot_addr", nv, "ptr", sym=s))

    exit_label = {}
    exit_blocks = []
    for e, t in enumerate(targets):
        if t == RET_EXIT:
            continue
        lbl = fresh_name(sep_names, f"exit{e}")
        exit_label[t] = lbl
        exit_blocks.append(BasicBlock(lbl, [], Term("ret", Imm(e) if k >= 2 else None)))
    code_of = {t: e for e, t in enumerate(targets)}

    for b in body:
        new = []
        for ins in b.instrs:
            if ins.op == "slot_addr" and ins.sym in slot_ptr:
                rename[ins.dest] = slot_ptr[ins.sym]
                continue
            new.append(ins)
            if ins.dest in live_out:
                new.append(Instr("store", None, None, [Reg(ins.dest), Reg(slot_ptr[live_out[ins.dest]])],
                                 opty=reg_types[ins.dest]))
        b.instrs = new
        for t, lbl in exit_label.items():
            b.retarget(t, lbl)
        if b.term.kind == "ret":
            if retval_slot is not None:
                b.instrs.append(Instr("store", None, None, [b.term.value, Reg(slot_ptr[retval_slot])],
                                      opty=f.ret))
            e = code_of[RET_EXIT]
            b.term = Term("ret", Imm(e) if k >= 2 else None)
    for b in body:
        for ins in b.instrs:
            ins.rename_uses(rename)
        b.term.rename_uses(rename)

    head_preds = [p for p, ss in f.successors().items() if p in members and r.head in ss]
    if head_preds or entry_code:
        if head_preds:
            elbl = fresh_name(sep_names, "entry")
            sep.blocks.append(BasicBlock(elbl, entry_code, Term("br", targets=[r.head])))
        else:
            body[0].instrs[:0] = entry_code
    sep.blocks.extend(body)
    sep.blocks.extend(exit_blocks)

    # -- rewrite the remnant ------------------------------------------------------
    dispatch = []
    addr_of = {}
    for s in shared:
        a = fresh_name(names, f"{s}.a")
        dispatch.append(Instr("slot_addr", a, "ptr", sym=s))
        addr_of[s] = a
    for reg, slot in demoted.items():
        dispatch.append(Instr("store", None, None, [Reg(reg), Reg(addr_of[slot])], opty=reg_types[reg]))
    args = [Reg(addr_of[s]) for s in shared]
    argtys = ["ptr"] * len(args)
    ret_block = None
    if has_ret:
        lbl = fresh_name(names, f"{r.head}.ret")
        if retval_slot is not None:
            a = fresh_name(names, "retval.a")
            v = fresh_name(names, "retval.v")
            ret_block = BasicBlock(lbl, [Instr("slot_addr", a, "ptr", sym=retval_slot),
                                         Instr("load", v, f.ret, [Reg(a)])], Term("ret", Reg(v)))
        else:
            ret_block = BasicBlock(lbl, [], Term("ret"))
    real = [ret_block.label if t == RET_EXIT else t for t in targets]
    if k >= 2:
        code = fresh_name(names, f"{r.head}.code")
        dispatch.append(Instr("call", code, "i32", args, argtys=argtys, sym=name))
        term = Term("switch", Reg(code), [real[-1]], [(e, real[e]) for e in range(k - 1)])
    else:
        dispatch.append(Instr("call", None, "void", args, argtys=argtys, sym=name))
        term = Term("br", targets=[real[0]])
    dblock = BasicBlock(r.head, dispatch, term)

    blocks = []
    for b in f.blocks:
        if b.label == r.head:
            blocks.append(dblock)
            if ret_block is not None:
                blocks.append(ret_block)
        elif b.label not in members:
            blocks.append(b)
    f.blocks = blocks

    # slots moved into the sepFunc: the remaining stores outside are dead
    if private:
        moved = {s for s, _ in private}
        dead_ptrs = {reg for reg, s in addr_regs.items() if s in moved}
        for b in f.blocks:
            b.instrs = [
                ins for ins in b.instrs
                if not (ins.op == "slot_addr" and ins.sym in moved)
                and not (ins.op == "store" and isinstance(ins.args[1], Reg) and ins.args[1].name in dead_ptrs)
            ]
        f.slots = [(s, t) for s, t in f.slots if s not in moved]

    # unreachable readers of region values reload them from their slots
    for reg, slot in live_out.items():
        for b in f.blocks:
            if b is dblock or not (reg in set(u for i in b.instrs for u in i.uses()) or reg in set(b.term.uses())):
                continue
            a = fresh_name(names, f"{slot}.a")
            v = fresh_name(names, reg)
            b.instrs[:0] = [Instr("slot_addr", a, "ptr", sym=slot), Instr("load", v, reg_types[reg], [Reg(a)])]
            for ins in b.instrs[2:]:
                ins.rename_uses({reg: v})
            b.term.rename_uses({reg: v})
    return sep, f, k


# -- module driver -------------------------------------------------------------------


def function_regions(f: Function, cfg: FissionConfig) -> list:
    if f.external or len(f.blocks) < 2:
        return []
    dt = dominator_tree(f)
    li = loop_info(f, dt, cfg.default_trip_count)
    fm = block_frequency(f, li, dt)
    return identify_regions(f, dt, li, fm, cfg)


def run_fission(m: IrModule, cfg: Optional[FissionConfig] = None, rng_seed: int = 0,
                only: Optional[set] = None) -> tuple:
    """Apply fission to every defined function (or those in ``only``).

    Returns ``(module, provenance, stats)``; the input module is not modified.
    The pass is deterministic, so ``rng_seed`` is accepted for interface
    symmetry only.
    """
    cfg = cfg or FissionConfig()
    out = copy.deepcopy(m)
    prov = ProvenanceMap.identity(f.name for f in out.functions if not f.external)
    stats = FissionStats(ori_funcs=len(out.defined_functions()))
    new_funcs = []
    for f in list(out.functions):
        if f.external or (only is not None and f.name not in only):
            continue
        regions = function_regions(f, cfg)
        if not regions:
            continue
        pos = {lbl: i for i, lbl in enumerate(f.labels())}
        regions.sort(key=lambda r: pos[r.head])
        n_before = len(f.blocks)
        moved = 0
        produced = []
        for r in regions:
            analyze_region(f, r)
            if not r.exit_targets():
                continue
            name = out.fresh_function_name(f"{f.name}.sep{len(produced) + 1}")
            sep, _, k = outline_region(f, r, name)
            out.functions.append(sep)
            produced.append(sep)
            moved += len(r.members)
            stats.sep_blocks.append(len(r.members))
            if k >= 2:
                stats.exit_counts[name] = k
        if not produced:
            continue
        stats.processed += 1
        stats.sep_funcs += len(produced)
        stats.removed_ratio.append(moved / n_before)
        prov.set(f.name, {f.name}, "remFunc")
        for sep in produced:
            prov.set(sep.name, {f.name}, "sepFunc")
        new_funcs.extend(produced)
    out.refresh_attributes()
    return out, prov, stats
