"""Static analyses shared by the fission and fusion passes."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ir import Function, GlobalRef, Imm, IrModule, Reg, is_int, wrap_int

DEFAULT_TRIP_COUNT = 10


# -- CFG helpers ----------------------------------------------------------------


def reverse_postorder(f: Function) -> list:
    """Labels of blocks reachable from the entry, in reverse postorder."""
    succ = f.successors()
    entry = f.entry.label
    seen = {entry}
    post = []
    stack = [(entry, iter(succ[entry]))]
    while stack:
        node, it = stack[-1]
        for s in it:
            if s in succ and s not in seen:
                seen.add(s)
                stack.append((s, iter(succ[s])))
                break
        else:
            stack.pop()
            post.append(node)
    post.reverse()
    return post


def outgoing_ways(f: Function, label: str) -> list:
    """Successor labels with multiplicity: each branch way counts once."""
    b = f.block(label)
    t = b.term
    if t.kind == "br":
        ways = list(t.targets)
    elif t.kind == "condbr":
        ways = list(t.targets)
    elif t.kind == "switch":
        ways = [lbl for _, lbl in t.cases] + list(t.targets)
    else:
        ways = []
    h = b.handler()
    if h is not None:
        ways.append(h)
    return ways


# -- dominators -----------------------------------------------------------------


@dataclass
class DomTree:
    root: str
    parent: dict
    children: dict
    order: list  # reachable blocks in reverse postorder

    def dominates(self, a: str, b: str) -> bool:
        """True iff ``a`` dominates ``b`` (reflexive)."""
        if b not in self.parent and b != self.root:
            return False
        while b is not None:
            if a == b:
                return True
            b = self.parent.get(b)
        return False

    def subtree(self, label: str) -> list:
        """Blocks of the dominator subtree rooted at ``label``, in RPO."""
        members = {label}
        stack = [label]
        while stack:
            for c in self.children.get(stack.pop(), ()):
                members.add(c)
                stack.append(c)
        return [b for b in self.order if b in members]

    def depth(self, label: str) -> int:
        d = 0
        while label != self.root:
            label = self.parent[label]
            d += 1
        return d


def dominator_tree(f: Function) -> DomTree:
    """Iterative dominator computation (Cooper, Harvey and Kennedy)."""
    order = reverse_postorder(f)
    index = {b: i for i, b in enumerate(order)}
    preds = f.predecessors()
    root = order[0]
    idom = {root: root}

    def intersect(a, b):
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in order[1:]:
            new = None
            for p in preds[b]:
                if p in idom:
                    new = p if new is None else intersect(p, new)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    parent = {b: idom[b] for b in order[1:]}
    children = {b: [] for b in order}
    for b in order[1:]:
        children[parent[b]].append(b)
    return DomTree(root, parent, children, order)


# -- loops ----------------------------------------------------------------------


@dataclass
class Loop:
    header: str
    body: frozenset
    latches: tuple
    parent: Optional[str] = None
    trip_count: int = DEFAULT_TRIP_COUNT
    counted: bool = False


@dataclass
class LoopInfo:
    loops: list = field(default_factory=list)

    def by_header(self, header: str) -> Optional[Loop]:
        for lp in self.loops:
            if lp.header == header:
                return lp
        return None

    def innermost(self, label: str) -> Optional[Loop]:
        best = None
        for lp in self.loops:
            if label in lp.body and (best is None or len(lp.body) < len(best.body)):
                best = lp
        return best

    def depth(self, label: str) -> int:
        return sum(1 for lp in self.loops if label in lp.body)

    def children(self, header: Optional[str]) -> list:
        return [lp for lp in self.loops if lp.parent == header]


def loop_info(f: Function, dt: DomTree, default_trip: int = DEFAULT_TRIP_COUNT) -> LoopInfo:
    """Natural loops from back edges, with syntactic trip-count estimation."""
    preds = f.predecessors()
    reach = set(dt.order)
    bodies: dict = {}
    latches: dict = {}
    for u in dt.order:
        for h in f.block(u).successors():
            if h in reach and dt.dominates(h, u):
                body = bodies.setdefault(h, {h})
                latches.setdefault(h, []).append(u)
                stack = [u]
                while stack:
                    x = stack.pop()
                    if x not in body:
                        body.add(x)
                        stack.extend(p for p in preds[x] if p in reach)
    loops = [
        Loop(h, frozenset(bodies[h]), tuple(latches[h]))
        for h in dt.order
        if h in bodies
    ]
    for lp in loops:
        enclosing = [o for o in loops if o is not lp and lp.header in o.body and lp.body <= o.body]
        if enclosing:
            lp.parent = min(enclosing, key=lambda o: len(o.body)).header
        count = counted_trip_count(f, dt, lp)
        if count is not None:
            lp.trip_count, lp.counted = count, True
        else:
            lp.trip_count = default_trip
    return LoopInfo(loops)


def _defs(f: Function) -> dict:
    out = {}
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            if ins.dest is not None:
                out[ins.dest] = (b.label, i, ins)
    return out


def _slot_accesses(f: Function, slot: str, defs: dict):
    """Loads/stores through ``slot_addr slot`` registers, or None if the address escapes."""
    addr_regs = {r for r, (_, _, ins) in defs.items() if ins.op == "slot_addr" and ins.sym == slot}
    loads, stores = [], []
    for b in f.blocks:
        for ins in b.instrs:
            for k, a in enumerate(ins.args):
                if not (isinstance(a, Reg) and a.name in addr_regs):
                    continue
                if ins.op == "load":
                    loads.append((b.label, ins))
                elif ins.op == "store" and k == 1:
                    stores.append((b.label, ins))
                else:
                    return None
        if isinstance(b.term.value, Reg) and b.term.value.name in addr_regs:
            return None
    return loads, stores


def counted_trip_count(f: Function, dt: DomTree, lp: Loop, cap: int = 1 << 16) -> Optional[int]:
    """Exact trip count of ``for (i = c0; i <pred> bound; i += step)`` loops.

    The counter must live in a slot whose address never escapes, be set once
    before the loop to a constant and once per iteration to ``i + const``.
    Returns None for any other loop shape.
    """
    hb = f.block(lp.header)
    t = hb.term
    if t.kind != "condbr" or not isinstance(t.value, Reg):
        return None
    defs = _defs(f)
    cdef = defs.get(t.value.name)
    if cdef is None or cdef[2].op != "icmp":
        return None
    cmp = cdef[2]
    lhs, rhs = cmp.args
    if isinstance(lhs, Reg) and isinstance(rhs, Imm):
        var, bound, flipped = lhs, rhs.value, False
    elif isinstance(rhs, Reg) and isinstance(lhs, Imm):
        var, bound, flipped = rhs, lhs.value, True
    else:
        return None
    vdef = defs.get(var.name)
    if vdef is None or vdef[2].op != "load" or not isinstance(vdef[2].args[0], Reg):
        return None
    pdef = defs.get(vdef[2].args[0].name)
    if pdef is None or pdef[2].op != "slot_addr":
        return None
    acc = _slot_accesses(f, pdef[2].sym, defs)
    if acc is None:
        return None
    _, stores = acc
    inside = [(lbl, s) for lbl, s in stores if lbl in lp.body]
    outside = [(lbl, s) for lbl, s in stores if lbl not in lp.body]
    if len(inside) != 1 or len(outside) != 1:
        return None
    init_lbl, init = outside[0]
    if not isinstance(init.args[0], Imm) or not dt.dominates(init_lbl, lp.header):
        return None
    step_lbl, step_store = inside[0]
    if step_lbl == lp.header or not all(dt.dominates(step_lbl, latch) for latch in lp.latches):
        return None
    sv = step_store.args[0]
    sdef = defs.get(sv.name) if isinstance(sv, Reg) else None
    if sdef is None or sdef[2].op not in ("add", "sub"):
        return None
    a, b = sdef[2].args
    if not isinstance(b, Imm):
        if sdef[2].op == "sub" or not isinstance(a, Imm):
            return None
        a, b = b, a
    adef = defs.get(a.name) if isinstance(a, Reg) else None
    if adef is None or adef[2].op != "load" or not isinstance(adef[2].args[0], Reg):
        return None
    adef_ptr = defs.get(adef[2].args[0].name)
    if adef_ptr is None or adef_ptr[2].op != "slot_addr" or adef_ptr[2].sym != pdef[2].sym:
        return None
    step = b.value if sdef[2].op == "add" else -b.value
    ty = cmp.opty
    if not is_int(ty) or not isinstance(bound, int) or not isinstance(init.args[0].value, int):
        return None
    stay_on_true = t.targets[0] in lp.body
    if (t.targets[1] in lp.body) == stay_on_true:
        return None
    # only header exits are modeled
    for x in lp.body:
        if any(s not in lp.body for s in f.block(x).successors()) and x != lp.header:
            return None
    i = wrap_int(init.args[0].value, ty)
    count = 0
    while count <= cap:
        l, r = (bound, i) if flipped else (i, bound)
        if _icmp(cmp.pred, l, r) != stay_on_true:
            return max(count, 1)
        i = wrap_int(i + step, ty)
        count += 1
    return None


def _icmp(pred: str, a: int, b: int) -> bool:
    return {
        "eq": a == b,
        "ne": a != b,
        "slt": a < b,
        "sle": a <= b,
        "sgt": a > b,
        "sge": a >= b,
    }[pred]


# -- block frequency --------------------------------------------------------------


@dataclass
class FreqMap:
    freq: dict
    edge_freq: dict  # (src, dst) -> Fraction

    def __getitem__(self, label: str) -> Fraction:
        return self.freq[label]


def block_frequency(f: Function, li: LoopInfo, dt: Optional[DomTree] = None) -> FreqMap:
    """Structural frequency estimate.

    Entry has frequency 1 and every branch way gets an equal share.  A loop
    is treated as a black box: its header runs ``entry mass * trip count``
    times and the mass leaving it equals the mass that entered, distributed
    over the exit edges in proportion to their per-iteration share.
    """
    dt = dt or dominator_tree(f)
    index = {b: i for i, b in enumerate(dt.order)}
    loops = {lp.header: lp for lp in li.loops}

    def solve(header: str, members: set, parent: Optional[str]):
        children = [lp for lp in li.loops if lp.parent == parent and lp.header in members]
        owner = {}
        for lp in children:
            for x in lp.body:
                owner[x] = lp.header
        mass = {header: Fraction(1)}
        block_mass, edge_mass, exits = {}, {}, {}

        def push(u, t, m):
            if t not in members:
                exits[(u, t)] = exits.get((u, t), 0) + m
                return
            edge_mass[(u, t)] = edge_mass.get((u, t), 0) + m
            if t == header or index[t] <= index[u]:
                return
            item = owner.get(t, t)
            mass[item] = mass.get(item, 0) + m

        items = sorted({owner.get(x, x) for x in members}, key=index.__getitem__)
        for item in items:
            m = mass.get(item, Fraction(0))
            if item in owner.values() and item != header:
                lp = loops[item]
                cb, ce, cx = solve(item, set(lp.body), item)
                scale = m * lp.trip_count
                for x, v in cb.items():
                    block_mass[x] = scale * v
                for e, v in ce.items():
                    edge_mass[e] = edge_mass.get(e, 0) + scale * v
                for (u, t), frac in cx.items():
                    push(u, t, m * frac)
                continue
            block_mass[item] = m
            ways = outgoing_ways(f, item)
            for t in ways:
                push(item, t, m / len(ways))
        total = sum(exits.values())
        if total:
            exits = {e: v / total for e, v in exits.items()}
        return block_mass, edge_mass, exits

    reach = set(dt.order)
    bm, em, _ = solve(dt.root, reach, None)
    return FreqMap(bm, em)


# -- innocuous blocks -----------------------------------------------------------


_TRAPPING_DIV = ("sdiv", "srem", "fdiv")
_EFFECT_OPS = (
    "print", "setjmp", "longjmp", "may_throw", "icall", "icall_fused",
    "tag_set", "tag_test", "tag_clear",
)


def constant_globals(m: IrModule) -> set:
    """Globals never written anywhere in the module."""
    written = set()
    for f in m.functions:
        for ins in f.instructions():
            if ins.op == "store" and isinstance(ins.args[1], GlobalRef):
                written.add(ins.args[1].name)
    return {g.name for g in m.globals} - written


def _own_slot_regs(f: Function) -> set:
    return {ins.dest for ins in f.instructions() if ins.op == "slot_addr"}


def _instr_innocuous(ins, own_ptrs: set, const_globals: set, total: set) -> bool:
    op = ins.op
    if op in _EFFECT_OPS:
        return False
    if op in _TRAPPING_DIV:
        d = ins.args[1]
        return isinstance(d, Imm) and d.value not in (0, 0.0)
    if op == "call":
        return ins.sym in total
    if op == "load":
        a = ins.args[0]
        if isinstance(a, GlobalRef):
            return a.name in const_globals
        return isinstance(a, Reg) and a.name in own_ptrs
    if op == "store":
        a = ins.args[1]
        return isinstance(a, Reg) and a.name in own_ptrs
    return True


def innocuous_total_functions(m: IrModule) -> set:
    """Functions whose every execution is innocuous and terminates.

    Requires an acyclic CFG, innocuous blocks throughout and calls only to
    other such functions (so recursion is excluded).
    """
    consts = constant_globals(m)
    total: set = set()
    changed = True
    while changed:
        changed = False
        for f in m.defined_functions():
            if f.name in total or f.variadic:
                continue
            if any(p[1] == "ptr" for p in f.params):
                continue
            dt = dominator_tree(f)
            if loop_info(f, dt).loops or len(dt.order) != len(f.blocks):
                continue
            own = _own_slot_regs(f)
            if all(
                _instr_innocuous(ins, own, consts, total) for ins in f.instructions()
            ) and all(b.term.kind != "unreachable" for b in f.blocks):
                total.add(f.name)
                changed = True
    return total


def innocuous_blocks(m: IrModule, f: Function, total: Optional[set] = None) -> set:
    """Blocks whose execution cannot change global state or trap."""
    consts = constant_globals(m)
    total = innocuous_total_functions(m) if total is None else total
    own = _own_slot_regs(f)
    out = set()
    for b in f.blocks:
        if b.term.kind == "unreachable":
            continue
        if all(_instr_innocuous(ins, own, consts, total) for ins in b.instrs):
            out.add(b.label)
    return out


# -- escape analysis ------------------------------------------------------------


def escape_set(m: IrModule) -> set:
    """Functions whose address may leave the module.

    Tracks function-address tokens through registers, own slots, parameters
    and return values.  Any token that reaches a global, an external call,
    a return from an exported function, or memory that is not an own slot
    is treated as escaping.
    """
    funcs = {f.name: f for f in m.functions}
    escaping = set(m.externally_visible_pointers)
    reg_tok: dict = {}  # (fn, reg) -> set
    slot_tok: dict = {}  # (fn, slot) -> set
    param_tok: dict = {}  # (fn, index) -> set
    ret_tok: dict = {}  # fn -> set

    def icall_targets(ins):
        sig = (ins.ty, tuple(ins.argtys[1:] if ins.op == "icall_fused" else ins.argtys))
        out = []
        for g in m.defined_functions():
            params = tuple(g.param_types()[1:] if ins.op == "icall_fused" else g.param_types())
            if ins.op == "icall_fused" or (g.ret, params) == sig:
                out.append(g)
        return out

    slot_of = {}
    for f in m.defined_functions():
        for ins in f.instructions():
            if ins.op == "slot_addr":
                slot_of[(f.name, ins.dest)] = ins.sym

    def toks(fname, a):
        if isinstance(a, Reg):
            return reg_tok.get((fname, a.name), set())
        return set()

    def add(store: dict, key, values) -> bool:
        cur = store.setdefault(key, set())
        if values <= cur:
            return False
        cur |= values
        return True

    changed = True
    while changed:
        changed = False
        for f in m.defined_functions():
            fn = f.name
            for i, (pname, _) in enumerate(f.params):
                changed |= add(reg_tok, (fn, pname), param_tok.get((fn, i), set()))
            for b in f.blocks:
                for ins in b.instrs:
                    op = ins.op
                    if op == "addr_of_func":
                        changed |= add(reg_tok, (fn, ins.dest), {ins.sym})
                    elif op in ("tag_set", "tag_clear"):
                        changed |= add(reg_tok, (fn, ins.dest), toks(fn, ins.args[0]))
                    elif op == "store":
                        v = toks(fn, ins.args[0])
                        if not v:
                            continue
                        addr = ins.args[1]
                        slot = slot_of.get((fn, addr.name)) if isinstance(addr, Reg) else None
                        if slot is not None:
                            changed |= add(slot_tok, (fn, slot), v)
                        elif not v <= escaping:
                            escaping |= v
                            changed = True
                    elif op == "load":
                        addr = ins.args[0]
                        slot = slot_of.get((fn, addr.name)) if isinstance(addr, Reg) else None
                        if slot is not None:
                            changed |= add(reg_tok, (fn, ins.dest), slot_tok.get((fn, slot), set()))
                    elif op in ("call", "icall", "icall_fused"):
                        args = ins.args if op == "call" else ins.args[1:]
                        if op == "call":
                            targets = [funcs[ins.sym]] if ins.sym in funcs else []
                        else:
                            targets = icall_targets(ins)
                        for g in targets:
                            # icall_fused args already include ctrl at index 0
                            for k, a in enumerate(args):
                                v = toks(fn, a)
                                if not v:
                                    continue
                                if g.external or k >= len(g.params):
                                    if not v <= escaping:
                                        escaping |= v
                                        changed = True
                                else:
                                    changed |= add(param_tok, (g.name, k), v)
                            if ins.dest is not None:
                                changed |= add(reg_tok, (fn, ins.dest), ret_tok.get(g.name, set()))
                t = b.term
                if t.kind == "ret" and t.value is not None:
                    v = toks(fn, t.value)
                    if v:
                        if fn in m.exported:
                            if not v <= escaping:
                                escaping |= v
                                changed = True
                        changed |= add(ret_tok, fn, v)
    return escaping
