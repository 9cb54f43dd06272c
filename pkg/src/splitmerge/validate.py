"""Structural and type validation of IR modules."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .analysis import dominator_tree
from .ir import (
    CASTS,
    FLOAT_BINOPS,
    INT_BINOPS,
    INT_BITS,
    FLOAT_BITS,
    TAG_OPS,
    VALUE_TYPES,
    Function,
    GlobalRef,
    Imm,
    IrModule,
    Reg,
    is_float,
    is_int,
)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    function: Optional[str] = None
    block: Optional[str] = None
    index: Optional[int] = None

    def __str__(self) -> str:
        where = ""
        if self.function:
            where = f"@{self.function}"
            if self.block:
                where += f":{self.block}"
                if self.index is not None:
                    where += f"#{self.index}"
            where += ": "
        return f"[{self.kind}] {where}{self.message}"


def imm_fits(value, ty: str) -> bool:
    if is_int(ty):
        if not isinstance(value, int) or isinstance(value, bool):
            return False
        bits = INT_BITS[ty]
        if bits == 1:
            return value in (0, 1)
        return -(1 << (bits - 1)) <= value < (1 << (bits - 1))
    if is_float(ty):
        return isinstance(value, float)
    if ty == "ptr":
        return value is None
    return False


class _FnChecker:
    def __init__(self, m: IrModule, f: Function, out: list):
        self.m = m
        self.f = f
        self.out = out
        self.types: dict = {}
        self.funcs = {g.name: g for g in m.functions}
        self.labels = set()

    def err(self, kind, msg, block=None, index=None):
        self.out.append(Violation(kind, msg, self.f.name, block, index))

    def operand(self, a, ty, where) -> None:
        if isinstance(a, Reg):
            got = self.types.get(a.name)
            if got is None:
                self.err("undefined-register", f"use of undefined register %{a.name}", *where)
            elif ty is not None and got != ty:
                self.err("type", f"%{a.name} has type {got}, expected {ty}", *where)
        elif isinstance(a, Imm):
            if ty is not None and not imm_fits(a.value, ty):
                self.err("type", f"immediate {a.value!r} does not fit {ty}", *where)
        else:
            self.err("type", f"global @{a.name} used as a value", *where)

    def address(self, a, ty, where) -> None:
        if isinstance(a, GlobalRef):
            g = self.m.global_var(a.name)
            if g is None:
                self.err("unresolved-target", f"unknown global @{a.name}", *where)
            elif g.ty != ty:
                self.err("type", f"global @{a.name} has type {g.ty}, accessed as {ty}", *where)
        else:
            self.operand(a, "ptr", where)

    def check(self) -> None:
        f = self.f
        names = set()
        for n, t in f.params:
            if t not in VALUE_TYPES:
                self.err("type", f"parameter %{n} has non-value type {t}")
            if n in names:
                self.err("duplicate", f"duplicate name %{n}")
            names.add(n)
            self.types[n] = t
        for n, t in f.slots:
            if t not in VALUE_TYPES:
                self.err("type", f"slot %{n} has non-value type {t}")
            if n in names:
                self.err("duplicate", f"duplicate name %{n}")
            names.add(n)
        for b in f.blocks:
            if b.label in self.labels:
                self.err("duplicate", f"duplicate block label {b.label}", b.label)
            self.labels.add(b.label)
        def_site = {}
        for b in f.blocks:
            for i, ins in enumerate(b.instrs):
                if ins.dest is None:
                    continue
                if ins.dest in names or ins.dest in def_site:
                    self.err("single-assignment", f"%{ins.dest} defined more than once", b.label, i)
                def_site[ins.dest] = (b.label, i)
                names.add(ins.dest)
                self.types[ins.dest] = ins.ty
        for b in f.blocks:
            for i, ins in enumerate(b.instrs):
                self.instr(ins, (b.label, i), i == len(b.instrs) - 1)
            self.term(b)
        self.structure()
        self.dominance(def_site)

    def instr(self, ins, where, last) -> None:
        op, ty, a = ins.op, ins.ty, ins.args
        f = self.f

        def need(n):
            if len(a) != n:
                self.err("arity", f"{op} expects {n} operands", *where)
                return False
            return True

        if ins.dest is not None and ty not in VALUE_TYPES:
            self.err("type", f"{op} result has non-value type {ty}", *where)
        if op == "const":
            if need(1):
                if not isinstance(a[0], Imm):
                    self.err("type", "const requires an immediate", *where)
                else:
                    self.operand(a[0], ty, where)
        elif op in INT_BINOPS or op in FLOAT_BINOPS:
            ok = is_int(ty) if op in INT_BINOPS else is_float(ty)
            if not ok:
                self.err("type", f"{op} on type {ty}", *where)
            if need(2):
                self.operand(a[0], ty, where)
                self.operand(a[1], ty, where)
        elif op in ("icmp", "fcmp"):
            ok = is_int(ins.opty) if op == "icmp" else is_float(ins.opty)
            if not ok:
                self.err("type", f"{op} on type {ins.opty}", *where)
            if need(2):
                self.operand(a[0], ins.opty, where)
                self.operand(a[1], ins.opty, where)
        elif op in CASTS:
            src, dst = ins.opty, ty
            ok = {
                "zext": is_int(src) and is_int(dst) and INT_BITS.get(dst, 0) >= INT_BITS.get(src, 99),
                "sext": is_int(src) and is_int(dst) and INT_BITS.get(dst, 0) >= INT_BITS.get(src, 99),
                "trunc": is_int(src) and is_int(dst) and INT_BITS.get(dst, 99) <= INT_BITS.get(src, 0),
                "sitofp": is_int(src) and is_float(dst),
                "fptosi": is_float(src) and is_int(dst),
                "fpext": is_float(src) and is_float(dst) and FLOAT_BITS.get(dst, 0) >= FLOAT_BITS.get(src, 99),
                "fptrunc": is_float(src) and is_float(dst) and FLOAT_BITS.get(dst, 99) <= FLOAT_BITS.get(src, 0),
            }[op]
            if not ok:
                self.err("type", f"invalid {op} from {src} to {dst}", *where)
            if need(1):
                self.operand(a[0], src, where)
        elif op == "slot_addr":
            if f.slot_type(ins.sym) is None:
                self.err("unresolved-target", f"slot_addr names unknown slot %{ins.sym}", *where)
        elif op == "load":
            if need(1):
                self.address(a[0], ty, where)
        elif op == "store":
            if ins.opty not in VALUE_TYPES:
                self.err("type", f"store of type {ins.opty}", *where)
            if need(2):
                self.operand(a[0], ins.opty, where)
                self.address(a[1], ins.opty, where)
        elif op == "call":
            g = self.funcs.get(ins.sym)
            if g is None:
                self.err("unresolved-target", f"call to undeclared function @{ins.sym}", *where)
            else:
                params = g.param_types()
                n = len(params)
                if len(ins.argtys) < n or (len(ins.argtys) > n and not g.variadic):
                    self.err("arity", f"call to @{g.name} with {len(ins.argtys)} args, expects {n}", *where)
                elif list(ins.argtys[:n]) != params:
                    self.err("type", f"argument types {ins.argtys} do not match @{g.name}", *where)
                if g.ret != ty:
                    self.err("type", f"call result {ty} but @{g.name} returns {g.ret}", *where)
            self.args(ins, a, where)
        elif op in ("icall", "icall_fused"):
            if not a:
                self.err("arity", f"{op} without callee", *where)
                return
            self.operand(a[0], "ptr", where)
            if op == "icall_fused" and (not ins.argtys or ins.argtys[0] != "i1"):
                self.err("type", "icall_fused needs a leading i1 ctrl argument", *where)
            self.args(ins, a[1:], where)
        elif op == "addr_of_func":
            if ins.sym not in self.funcs:
                self.err("unresolved-target", f"address of undeclared function @{ins.sym}", *where)
        elif op in TAG_OPS:
            n = 1 if op == "tag_clear" else 2
            if need(n):
                self.operand(a[0], "ptr", where)
                if n == 2 and not (isinstance(a[1], Imm) and isinstance(a[1].value, int) and 0 <= a[1].value < 16):
                    self.err("type", f"{op} mask must be an immediate in 0..15", *where)
        elif op == "print":
            if not (is_int(ins.opty) or is_float(ins.opty)):
                self.err("type", f"print of type {ins.opty}", *where)
            if need(1):
                self.operand(a[0], ins.opty, where)
        elif op == "setjmp":
            if ty != "i32":
                self.err("type", "setjmp returns i32", *where)
            if need(1):
                self.operand(a[0], "ptr", where)
        elif op == "longjmp":
            if need(2):
                self.operand(a[0], "ptr", where)
                self.operand(a[1], "i32", where)
        elif op == "may_throw":
            if need(1):
                self.operand(a[0], "i1", where)
            if ins.sym not in self.labels:
                self.err("unresolved-target", f"may_throw handler {ins.sym} is not a block", *where)
            if not last:
                self.err("structure", "may_throw must be the last instruction of its block", *where)
        else:
            self.err("opcode", f"unknown opcode {op}", *where)
        if op in ("call", "icall", "icall_fused"):
            if (ty == "void") != (ins.dest is None):
                self.err("type", "call result register must match return type", *where)

    def args(self, ins, args, where) -> None:
        if len(args) != len(ins.argtys):
            self.err("arity", "argument/type count mismatch", *where)
            return
        for t, x in zip(ins.argtys, args):
            if t not in VALUE_TYPES:
                self.err("type", f"argument of type {t}", *where)
            else:
                self.operand(x, t, where)

    def term(self, b) -> None:
        t = b.term
        where = (b.label, None)
        for lbl in t.successors():
            if lbl not in self.labels:
                self.err("unresolved-target", f"branch to unknown block {lbl}", b.label)
        if t.kind == "condbr":
            self.operand(t.value, "i1", where)
        elif t.kind == "switch":
            if not isinstance(t.value, Reg):
                self.err("type", "switch scrutinee must be a register", b.label)
                return
            self.operand(t.value, None, where)
            sty = self.types.get(t.value.name)
            if sty is not None and not is_int(sty):
                self.err("type", f"switch on non-integer type {sty}", b.label)
            keys = [k for k, _ in t.cases]
            if len(set(keys)) != len(keys):
                self.err("type", "duplicate switch case", b.label)
            if sty is not None and is_int(sty):
                for k in keys:
                    if not imm_fits(k, sty):
                        self.err("type", f"switch case {k} does not fit {sty}", b.label)
        elif t.kind == "ret":
            if self.f.ret == "void":
                if t.value is not None:
                    self.err("type", "ret with value in void function", b.label)
            elif t.value is None:
                self.err("type", f"ret without value in function returning {self.f.ret}", b.label)
            else:
                self.operand(t.value, self.f.ret, where)

    def structure(self) -> None:
        f = self.f
        if f.ret not in VALUE_TYPES and f.ret != "void":
            self.err("type", f"bad return type {f.ret}")
        preds = f.predecessors()
        if preds.get(f.entry.label):
            self.err("structure", f"entry block {f.entry.label} has predecessors", f.entry.label)

    def dominance(self, def_site: dict) -> None:
        f = self.f
        if any(s not in self.labels for b in f.blocks for s in b.successors()):
            return
        dt = dominator_tree(f)
        reach = set(dt.order)
        params = {n for n, _ in f.params}
        for b in f.blocks:
            if b.label not in reach:
                continue
            uses = [(i, u) for i, ins in enumerate(b.instrs) for u in ins.uses()]
            uses += [(len(b.instrs), u) for u in b.term.uses()]
            for i, u in uses:
                if u in params or u not in def_site:
                    continue
                dblk, di = def_site[u]
                if dblk == b.label:
                    ok = di < i
                else:
                    ok = dblk in reach and dblk != b.label and dt.dominates(dblk, b.label)
                if not ok:
                    self.err(
                        "dominance",
                        f"use of %{u} is not dominated by its definition in {dblk}",
                        b.label,
                        i if i < len(b.instrs) else None,
                    )


def validate(m: IrModule) -> list:
    """Return a list of violations; empty iff the module is valid."""
    out: list = []
    seen = set()
    for g in m.globals:
        if g.name in seen:
            out.append(Violation("duplicate", f"duplicate symbol @{g.name}"))
        seen.add(g.name)
        if g.ty not in VALUE_TYPES or not imm_fits(g.init, g.ty):
            out.append(Violation("type", f"global @{g.name} initializer does not fit {g.ty}"))
    for f in m.functions:
        if f.name in seen:
            out.append(Violation("duplicate", f"duplicate symbol @{f.name}"))
        seen.add(f.name)
    names = {f.name for f in m.functions}
    for n in sorted(m.exported - names):
        out.append(Violation("unresolved-target", f"exported @{n} is not a function"))
    for n in sorted(m.externally_visible_pointers - names):
        out.append(Violation("unresolved-target", f"visible @{n} is not a function"))
    for f in m.functions:
        if f.external:
            if f.blocks:
                out.append(Violation("structure", "external function has a body", f.name))
            continue
        if not f.blocks:
            out.append(Violation("structure", "function has no blocks", f.name))
            continue
        _FnChecker(m, f, out).check()
    return out


def validate_function(m: IrModule, f: Function) -> list:
    """Violations for one function of ``m`` (module-level checks skipped)."""
    out: list = []
    _FnChecker(m, f, out).check()
    return out
