"""Deterministic random generator of valid, terminating IR programs.

Programs are built from structured statements (if/else, switch, counted and
bounded while loops, calls, indirect calls, setjmp/longjmp, may_throw) so
every loop has a hard iteration bound and every division has a nonzero
constant divisor.  Direct calls only go from lower to higher function
indices, and never from inside a loop, which bounds the run time.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .ir import (
    INT_BITS,
    BasicBlock,
    Function,
    GlobalRef,
    GlobalVar,
    Imm,
    Instr,
    IrModule,
    Reg,
    Term,
    is_float,
    is_int,
)
from .validate import validate


@dataclass
class GenSpec:
    seed: int = 1
    n_functions: int = 8
    max_blocks: int = 12
    loops: bool = True
    icalls: bool = True
    setjmp: bool = True
    may_throw: bool = True
    globals: bool = True
    branches: bool = True

    @classmethod
    def plain(cls, seed: int = 1, n_functions: int = 1) -> "GenSpec":
        return cls(seed, n_functions, 12, False, False, False, False, False, False)


CALLBACK_SIGS = [
    ("i32", ("i32", "i64")),
    ("i32", ("i32",)),
    ("i64", ("i64", "i32")),
]
PARAM_TYPES = ["i32", "i32", "i32", "i64", "i64", "i16", "i8", "f64"]
RET_TYPES = ["i32", "i32", "i32", "i64", "i64", "void"]


@dataclass
class _Plan:
    name: str
    params: list
    ret: str
    callees: list
    role: str = "plain"  # plain | main | apply | setjmp | thrower | target


class _Fn:
    """Builder for one function body."""

    def __init__(self, gen: "_Gen", plan: _Plan):
        self.g = gen
        self.rng = gen.rng
        self.plan = plan
        self.params = [(f"p{i}", t) for i, t in enumerate(plan.params)]
        self.slots: list = []
        self.blocks: list = []
        self.n = 0
        self.budget = gen.spec.max_blocks
        self.loop_depth = 0
        self.cur = self.new_block()
        self.blocks.append(self.cur)
        self.vars = []
        self.counters = []  # readable loop counters; never assigned by statements
        for _ in range(self.rng.randint(1, 3)):
            t = self.rng.choice(["i32", "i32", "i64"])
            self.vars.append((self.slot(t, "v"), t))
        # seed locals from the inputs so later branches depend on them
        for v, t in self.vars:
            self.store_slot(v, t, self.input_leaf(t))

    # -- plumbing ----------------------------------------------------------------

    def fresh(self, base: str = "t") -> str:
        self.n += 1
        return f"{base}{self.n}"

    def new_block(self) -> BasicBlock:
        return BasicBlock(self.fresh("bb"), [], Term("unreachable"))

    def place(self, b: BasicBlock) -> None:
        self.blocks.append(b)
        self.cur = b

    def emit(self, op, ty=None, args=(), **kw) -> Optional[Reg]:
        dest = self.fresh() if ty not in (None, "void") else None
        self.cur.instrs.append(Instr(op, dest, ty, list(args), **kw))
        return Reg(dest) if dest else None

    def end(self, term: Term) -> None:
        self.cur.term = term

    def slot(self, ty: str, base: str) -> str:
        name = self.fresh(base)
        self.slots.append((name, ty))
        return name

    def addr(self, slot: str) -> Reg:
        return self.emit("slot_addr", "ptr", sym=slot)

    def load_slot(self, slot: str, ty: str) -> Reg:
        return self.emit("load", ty, [self.addr(slot)])

    def store_slot(self, slot: str, ty: str, v) -> None:
        self.emit("store", None, [v, self.addr(slot)], opty=ty)

    # -- expressions ------------------------------------------------------------------

    def convert(self, v, src: str, dst: str, signed: bool = False):
        if src == dst:
            return v
        if isinstance(v, Imm):
            return self.const(dst, v.value)
        if is_int(src) and is_int(dst):
            if INT_BITS[src] < INT_BITS[dst]:
                op = "sext" if signed or self.rng.random() < 0.8 else "zext"
                return self.emit(op, dst, [v], opty=src)
            return self.emit("trunc", dst, [v], opty=src)
        if is_float(src) and is_int(dst):
            return self.emit("fptosi", dst, [v], opty=src)
        if is_int(src) and is_float(dst):
            return self.emit("sitofp", dst, [v], opty=src)
        raise AssertionError((src, dst))

    def const(self, ty: str, value=None) -> Imm:
        if is_float(ty):
            return Imm(float(self.rng.randint(-8, 8) if value is None else value))
        if value is None:
            value = self.rng.choice([self.rng.randint(-9, 9), self.rng.randint(-200, 200)])
        bits = INT_BITS[ty]
        if bits == 1:
            return Imm(value & 1)
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
        return Imm(max(lo, min(hi, int(value))))

    def input_leaf(self, ty: str):
        ints = [(n, t) for n, t in self.params if is_int(t)]
        if ints:
            n, t = self.rng.choice(ints)
            return self.convert(Reg(n), t, ty, signed=True)
        floats = [(n, t) for n, t in self.params if is_float(t)]
        if floats:
            n, t = self.rng.choice(floats)
            return self.convert(Reg(n), t, ty)
        return self.const(ty)

    def leaf(self, ty: str):
        r = self.rng.random()
        ints = [(n, t) for n, t in self.params if is_int(t)]
        floats = [(n, t) for n, t in self.params if is_float(t)]
        if r < 0.4 and ints:
            n, t = self.rng.choice(ints)
            return self.convert(Reg(n), t, ty)
        if r < 0.45 and floats:
            n, t = self.rng.choice(floats)
            return self.convert(Reg(n), t, ty)
        if r < 0.75 and self.vars:
            s, t = self.rng.choice(self.vars + self.counters)
            return self.convert(self.load_slot(s, t), t, ty)
        if r < 0.82 and self.g.spec.globals:
            g = self.g.const_global
            return self.convert(self.emit("load", g.ty, [GlobalRef(g.name)]), g.ty, ty)
        if ints:
            n, t = self.rng.choice(ints)
            return self.convert(Reg(n), t, ty)
        return self.const(ty)

    def expr(self, ty: str, depth: int = 2):
        if is_float(ty):
            v = self.expr("i32", depth - 1)
            f = self.convert(v, "i32", ty)
            if self.rng.random() < 0.5:
                f = self.emit(self.rng.choice(["fadd", "fmul", "fsub"]), ty, [f, self.const(ty)])
            return f
        if depth <= 0 or self.rng.random() < 0.3:
            return self.leaf(ty)
        r = self.rng.random()
        if r < 0.6:
            op = self.rng.choice(["add", "add", "sub", "mul"])
            return self.emit(op, ty, [self.expr(ty, depth - 1), self.expr(ty, depth - 1) if self.rng.random() < 0.6
                                      else self.const(ty)])
        if r < 0.75:
            op = self.rng.choice(["sdiv", "srem"])
            d = self.rng.choice([2, 3, 5, 7, -3, 11])
            return self.emit(op, ty, [self.expr(ty, depth - 1), Imm(d)])
        if r < 0.85 and self.g.spec.globals and self.g.spec.branches:
            # a float detour keeps fcmp/sitofp/fptosi in the population
            f = self.convert(self.expr("i32", depth - 1), "i32", "f64")
            f = self.emit("fmul", "f64", [f, Imm(0.5)])
            return self.convert(f, "f64", ty)
        src = self.rng.choice(["i8", "i16", "i32", "i64"])
        return self.convert(self.expr(src, depth - 1), src, ty)

    def cond(self) -> Reg:
        ty = self.rng.choice(["i32", "i32", "i64"])
        # always read a param or local so the outcome varies between runs
        if self.rng.random() < 0.5 or not self.vars:
            a = self.input_leaf(ty)
        else:
            s, t = self.rng.choice(self.vars)
            a = self.convert(self.load_slot(s, t), t, ty, signed=True)
        if self.rng.random() < 0.15:
            fa = self.convert(a, ty, "f64")
            pred = self.rng.choice(["olt", "ogt", "oge", "ole"])
            return self.emit("fcmp", "i1", [fa, Imm(float(self.rng.randint(-3, 3)))], opty="f64", pred=pred)
        pred = self.rng.choice(["slt", "sgt", "sle", "sge", "eq", "ne", "eq", "ne"])
        if pred in ("eq", "ne"):
            # hashed residue: roughly independent of the sign tests around it
            a = self.emit("mul", ty, [a, Imm(self.rng.choice([5, 7, 13, -11]))])
            a = self.emit("add", ty, [a, Imm(self.rng.randint(0, 9))])
            a = self.emit("srem", ty, [a, Imm(self.rng.choice([2, 3]))])
            b = Imm(0)
        elif self.rng.random() < 0.6:
            # squared residue: spread over [0, 36) whatever the sign of a
            a = self.residue_sq(a, ty)
            b = Imm(self.rng.randint(3, 20))
        else:
            b = Imm(self.rng.randint(-3, 3))
        return self.emit("icmp", "i1", [a, b], opty=ty, pred=pred)

    def residue_sq(self, a, ty: str):
        a = self.emit("mul", ty, [a, Imm(self.rng.choice([5, 7, 13, -11]))])
        a = self.emit("add", ty, [a, Imm(self.rng.randint(0, 9))])
        a = self.emit("srem", ty, [a, Imm(6)])
        return self.emit("mul", ty, [a, a])

    # -- statements ------------------------------------------------------------------

    def stmts(self, count: int) -> None:
        for _ in range(count):
            self.stmt()

    def stmt(self) -> None:
        spec = self.g.spec
        choices = [("assign", 4), ("print", 2)]
        if spec.globals:
            choices.append(("gstore", 1))
        if spec.branches and self.budget >= 3:
            choices += [("if", 3), ("switch", 1)]
        if spec.loops and self.budget >= 3 and self.loop_depth < 2:
            choices += [("for", 2 if self.loop_depth == 0 else 1), ("while", 1)]
        if spec.may_throw and self.budget >= 2:
            choices.append(("throw", 1))
        if self.loop_depth == 0 and self.g.externs:
            choices.append(("extern", 1))
        kinds, weights = zip(*choices)
        getattr(self, "s_" + self.rng.choices(kinds, weights)[0])()

    def s_assign(self) -> None:
        s, t = self.rng.choice(self.vars)
        self.store_slot(s, t, self.expr(t))

    def s_print(self) -> None:
        t = self.rng.choice(["i32", "i64"])
        self.emit("print", None, [self.expr(t)], opty=t)

    def s_gstore(self) -> None:
        g = self.g.mut_global
        v = self.emit("load", g.ty, [GlobalRef(g.name)])
        v2 = self.emit("add", g.ty, [v, self.expr(g.ty, 1)])
        self.emit("store", None, [v2, GlobalRef(g.name)], opty=g.ty)

    def s_extern(self) -> None:
        name, ptys, ret = self.rng.choice(self.g.externs)
        args = [self.expr(t, 1) for t in ptys]
        r = self.emit("call", ret, args, argtys=list(ptys), sym=name)
        if r is not None:
            s, t = self.rng.choice(self.vars)
            self.store_slot(s, t, self.convert(r, ret, t))

    def body(self, n: int) -> None:
        self.stmts(max(1, n))

    def s_if(self) -> None:
        self.budget -= 3
        c = self.cond()
        then, join = self.new_block(), self.new_block()
        has_else = self.rng.random() < 0.6
        other = self.new_block() if has_else else join
        self.end(Term("condbr", c, [then.label, other.label]))
        self.place(then)
        self.body(self.rng.randint(1, 2))
        self.end(Term("br", targets=[join.label]))
        if has_else:
            self.place(other)
            self.body(self.rng.randint(1, 2))
            self.end(Term("br", targets=[join.label]))
        self.place(join)

    def s_switch(self) -> None:
        self.budget -= 3
        v = self.emit("srem", "i32", [self.expr("i32", 1), Imm(3)])
        arms = [self.new_block() for _ in range(self.rng.randint(2, 3))]
        join = self.new_block()
        keys = self.rng.sample([-2, -1, 0, 1, 2], len(arms) - 1)
        self.end(Term("switch", v, [arms[-1].label], [(k, a.label) for k, a in zip(keys, arms)]))
        for a in arms:
            self.place(a)
            self.body(1)
            self.end(Term("br", targets=[join.label]))
        self.place(join)

    def s_for(self) -> None:
        self.budget -= 3
        n = self.rng.choice([2, 3, 3, 4, 5, 6] if self.loop_depth == 0 else [2, 3])
        i = self.slot("i32", "i")
        self.store_slot(i, "i32", Imm(0))
        head, body, done = self.new_block(), self.new_block(), self.new_block()
        self.end(Term("br", targets=[head.label]))
        self.place(head)
        iv = self.load_slot(i, "i32")
        c = self.emit("icmp", "i1", [iv, Imm(n)], opty="i32", pred="slt")
        self.end(Term("condbr", c, [body.label, done.label]))
        self.place(body)
        self.loop_depth += 1
        self.counters.append((i, "i32"))
        self.body(self.rng.randint(1, 2))
        self.counters.pop()
        self.loop_depth -= 1
        iv2 = self.load_slot(i, "i32")
        self.store_slot(i, "i32", self.emit("add", "i32", [iv2, Imm(1)]))
        self.end(Term("br", targets=[head.label]))
        self.place(done)

    def s_while(self) -> None:
        self.budget -= 4
        k = self.slot("i32", "k")
        w, wt = self.slot("i32", "w"), "i32"
        # a small input-derived start value exercises both loop exits
        self.store_slot(w, wt, self.residue_sq(self.input_leaf("i32"), "i32"))
        self.store_slot(k, "i32", Imm(0))
        head, test, body, done = (self.new_block() for _ in range(4))
        self.end(Term("br", targets=[head.label]))
        self.place(head)
        kv = self.load_slot(k, "i32")
        c = self.emit("icmp", "i1", [kv, Imm(self.rng.choice([3, 4, 5]))], opty="i32", pred="slt")
        self.end(Term("condbr", c, [test.label, done.label]))
        self.place(test)
        wv = self.load_slot(w, wt)
        c2 = self.emit("icmp", "i1", [wv, Imm(self.rng.randint(-3, 3))], opty=wt, pred="sgt")
        self.end(Term("condbr", c2, [body.label, done.label]))
        self.place(body)
        self.loop_depth += 1
        self.body(1)
        self.loop_depth -= 1
        wv2 = self.load_slot(w, wt)
        self.store_slot(w, wt, self.emit("sub", wt, [wv2, Imm(self.rng.choice([1, 2]))]))
        kv2 = self.load_slot(k, "i32")
        self.store_slot(k, "i32", self.emit("add", "i32", [kv2, Imm(1)]))
        self.end(Term("br", targets=[head.label]))
        self.place(done)

    def s_throw(self) -> None:
        self.budget -= 2
        c = self.cond()
        handler, cont = self.new_block(), self.new_block()
        self.emit("may_throw", None, [c], sym=handler.label)
        self.end(Term("br", targets=[cont.label]))
        self.place(handler)
        self.emit("print", None, [Imm(-99)], opty="i32")
        s, t = self.rng.choice(self.vars)
        self.store_slot(s, t, self.const(t))
        self.end(Term("br", targets=[cont.label]))
        self.place(cont)

    def arg(self, ty: str):
        # call arguments stay input-dependent so the callee's branches vary
        if not is_int(ty) or INT_BITS[ty] < 8:
            return self.input_leaf(ty)
        # a small multiplicative hash decorrelates the callee's branches from ours
        x = self.input_leaf(ty)
        x = self.emit("mul", ty, [x, Imm(self.rng.choice([7, 13, 31, 37, -11]))])
        x = self.emit("add", ty, [x, Imm(self.rng.randint(-20, 20))])
        return self.emit("srem", ty, [x, Imm(self.rng.choice([17, 19, 23, 29]))])

    def call(self, callee: _Plan) -> None:
        args = [self.arg(t) for t in callee.params]
        r = self.emit("call", callee.ret, args, argtys=list(callee.params), sym=callee.name)
        if r is not None:
            if self.rng.random() < 0.5:
                self.emit("print", None, [r], opty=callee.ret)
            else:
                s, t = self.rng.choice(self.vars)
                self.store_slot(s, t, self.convert(r, callee.ret, t))

    def finish(self) -> Function:
        ret = self.plan.ret
        if ret == "void":
            self.end(Term("ret"))
        else:
            self.end(Term("ret", self.expr(ret)))
        return Function(self.plan.name, self.params, ret, False, self.slots, self.blocks)


class _Gen:
    def __init__(self, spec: GenSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.const_global = GlobalVar("k0", "i32", self.rng.randint(1, 50))
        self.mut_global = GlobalVar("acc", "i64", 0)
        self.externs = []

    def plans(self) -> list:
        spec, rng = self.spec, self.rng
        n = max(1, spec.n_functions)
        plans = [_Plan("main", ["i32", "i64"], "i32", [], "main")]
        for i in range(1, n):
            k = rng.choice([1, 1, 2, 2, 3])
            plans.append(_Plan(f"f{i}", [rng.choice(PARAM_TYPES) for _ in range(k)], rng.choice(RET_TYPES), []))
        free = list(range(1, n))
        # icall targets are placed first so small programs still get an icall
        if spec.icalls and len(free) >= 2:
            ret, ptys = rng.choice(CALLBACK_SIGS)
            targets = free[-2:] if len(free) < 4 else free[-3:]
            for t in targets:
                plans[t].role, plans[t].params, plans[t].ret = "target", list(ptys), ret
            free = free[:-len(targets)]
            if len(free) >= 3 and rng.random() < 0.6:
                a = free.pop()
                plans[a].role, plans[a].params, plans[a].ret = "apply", ["ptr", "i32"], ret
        if spec.setjmp and len(free) >= 2:
            s, t = free[0], free[-1]
            plans[s].role, plans[s].params, plans[s].ret = "setjmp", ["i32"], "i32"
            plans[t].role, plans[t].params, plans[t].ret = "thrower", ["ptr", "i32"], "i32"
        # every function gets a direct caller with a lower index
        for j in range(1, n):
            if plans[j].role in ("thrower", "target", "apply"):
                continue
            callers = [i for i in range(j) if plans[i].role not in ("thrower", "apply")]
            plans[rng.choice(callers)].callees.append(j)
        return plans

    def build(self) -> IrModule:
        spec = self.spec
        plans = self.plans()
        funcs = []
        self.targets = [p for p in plans if p.role == "target"]
        self.apply = next((p for p in plans if p.role == "apply"), None)
        if spec.icalls and self.rng.random() < 0.5:
            self.externs.append(("ext_log", ("i32",), "i32"))
        for p in plans:
            funcs.append(self.function(p, plans))
        m = IrModule(f"gen{spec.seed}")
        if spec.globals:
            m.globals = [self.const_global, self.mut_global]
        if spec.icalls and self.targets:
            m.globals.append(GlobalVar("sink", "ptr", None))
        for name, ptys, ret in self.externs:
            m.functions.append(Function(name, [(f"a{i}", t) for i, t in enumerate(ptys)], ret, external=True))
        m.functions.extend(funcs)
        m.exported = {"main"}
        m.refresh_attributes()
        return m

    def function(self, p: _Plan, plans: list) -> Function:
        fb = _Fn(self, p)
        rng = self.rng
        if p.role == "thrower":
            return self.thrower(fb)
        if p.role == "apply":
            return self.apply_fn(fb)
        if p.role == "setjmp":
            self.setjmp_pattern(fb, plans)
        if p.role == "main" and self.targets:
            self.icall_pattern(fb)
        pending = list(p.callees)
        rng.shuffle(pending)
        steps = rng.randint(2, 4) + len(pending)
        for k in range(steps):
            if pending and (rng.random() < 0.5 or steps - k <= len(pending)):
                fb.call(plans[pending.pop()])
            else:
                fb.stmt()
        return fb.finish()

    # -- fixed patterns -----------------------------------------------------------------

    def thrower(self, fb: _Fn) -> Function:
        buf, x = Reg("p0"), Reg("p1")
        fb.cur.instrs.clear()
        c = fb.emit("icmp", "i1", [x, Imm(self.rng.randint(-3, 3))], opty="i32", pred="sgt")
        jump, ok = fb.new_block(), fb.new_block()
        fb.end(Term("condbr", c, [jump.label, ok.label]))
        fb.place(jump)
        fb.emit("longjmp", None, [buf, Imm(self.rng.randint(2, 9))])
        fb.end(Term("unreachable"))
        fb.place(ok)
        r = fb.emit("mul", "i32", [x, Imm(2)])
        fb.end(Term("ret", r))
        fb.slots = []
        return Function(fb.plan.name, fb.params, "i32", False, [], fb.blocks)

    def setjmp_pattern(self, fb: _Fn, plans: list) -> None:
        thrower = next(p for p in plans if p.role == "thrower")
        jb = fb.slot("ptr", "jb")
        r = fb.emit("setjmp", "i32", [fb.addr(jb)])
        z = fb.emit("icmp", "i1", [r, Imm(0)], opty="i32", pred="eq")
        try_b, caught, join = fb.new_block(), fb.new_block(), fb.new_block()
        fb.end(Term("condbr", z, [try_b.label, caught.label]))
        fb.place(try_b)
        fb.stmt()
        x = fb.arg("i32")
        v = fb.emit("call", "i32", [fb.addr(jb), x], argtys=["ptr", "i32"], sym=thrower.name)
        fb.emit("print", None, [v], opty="i32")
        fb.end(Term("br", targets=[join.label]))
        fb.place(caught)
        fb.emit("print", None, [r], opty="i32")
        fb.end(Term("br", targets=[join.label]))
        fb.place(join)
        fb.budget -= 4

    def icall_pattern(self, fb: _Fn) -> None:
        rng = self.rng
        t0 = self.targets[0]
        fp = fb.slot("ptr", "fp")
        fa = fb.emit("addr_of_func", "ptr", sym=t0.name)
        fb.store_slot(fp, "ptr", fa)
        # one switch arm per extra target, so each target is reachable on its own
        rest = self.targets[1:]
        sel = fb.emit("srem", "i32", [fb.input_leaf("i32"), Imm(len(self.targets))])
        arms = [fb.new_block() for _ in rest]
        join = fb.new_block()
        cases = [(k, a.label) for i, a in enumerate(arms) for k in (i + 1, -(i + 1))]
        fb.end(Term("switch", sel, [join.label], cases))
        for t, a in zip(rest, arms):
            fb.place(a)
            fx = fb.emit("addr_of_func", "ptr", sym=t.name)
            fb.store_slot(fp, "ptr", fx)
            if rng.random() < 0.25:
                fb.emit("store", None, [fx, GlobalRef("sink")], opty="ptr")
            fb.end(Term("br", targets=[join.label]))
        fb.place(join)
        f = fb.load_slot(fp, "ptr")
        args = [fb.arg(t) for t in t0.params]
        v = fb.emit("icall", t0.ret, [f] + args, argtys=list(t0.params))
        fb.emit("print", None, [v], opty=t0.ret)
        if self.apply is not None:
            f2 = fb.load_slot(fp, "ptr")
            v = fb.emit("call", self.apply.ret, [f2, fb.arg("i32")], argtys=["ptr", "i32"], sym=self.apply.name)
            fb.emit("print", None, [v], opty=t0.ret)
        if self.externs and rng.random() < 0.3:
            # hand the pointer's target to the outside world
            fb.emit("call", "i32", [fb.expr("i32", 1)], argtys=["i32"], sym=self.externs[0][0])
        fb.budget -= 2 * (len(self.targets) - 1)

    def apply_fn(self, fb: _Fn) -> Function:
        t0 = self.targets[0]
        f, x = Reg("p0"), Reg("p1")
        args = [fb.convert(x, "i32", t) for t in t0.params]
        v = fb.emit("icall", t0.ret, [f] + args, argtys=list(t0.params))
        fb.stmt()
        fb.end(Term("ret", v))
        return Function(fb.plan.name, fb.params, t0.ret, False, fb.slots, fb.blocks)


def generate(spec: GenSpec) -> IrModule:
    """Build the program described by ``spec``; the result always validates."""
    m = _Gen(spec).build()
    problems = validate(m)
    if problems:
        raise AssertionError("generator produced an invalid module:\n" + "\n".join(map(str, problems[:10])))
    return m


def corpus_specs(seed: int = 42, count: int = 200, **overrides) -> list:
    """Specs of a corpus: program i uses seed ``seed * 100003 + i``."""
    out = []
    for i in range(count):
        rng = random.Random(seed * 100003 + i)
        n = rng.choice([4, 6, 6, 8, 8, 10])
        out.append(GenSpec(seed=seed * 100003 + i, n_functions=n, **overrides))
    return out


def _int_value(rng: random.Random, ty: str) -> int:
    bits = INT_BITS[ty]
    if bits == 1:
        return rng.randint(0, 1)
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    r = rng.random()
    if r < 0.6:
        return rng.randint(max(lo, -12), min(hi, 12))
    if r < 0.9:
        return rng.randint(max(lo, -1000), min(hi, 1000))
    return rng.choice([lo, hi, 0, -1, rng.randint(lo, hi)])


def generate_inputs(m: IrModule, entry: str, n: int, seed: int) -> list:
    """``n`` type-correct argument vectors for ``entry``."""
    f = m.function(entry)
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        vec = []
        for _, t in f.params:
            if is_int(t):
                vec.append(_int_value(rng, t))
            elif is_float(t):
                vec.append(float(rng.randint(-100, 100)) / 4)
            else:
                vec.append(None)
        out.append(vec)
    return out
