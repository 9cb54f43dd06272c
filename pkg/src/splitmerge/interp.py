"""Reference interpreter used as the oracle for differential testing.

Functions are compiled once into Python closures; every run starts from a
fresh copy of the globals.  All failures surface as a ``trap`` in the
:class:`ExecResult`, never as a host exception.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .ir import (
    FLOAT_BITS,
    INT_BITS,
    TAG_CTRL,
    TAG_FUSED,
    TAG_MASK,
    Function,
    GlobalRef,
    Imm,
    IrModule,
    Reg,
    function_address,
    function_at,
    is_float,
    is_int,
    round_float,
    wrap_int,
)

TRAP_KINDS = (
    "null-deref",
    "div-by-zero",
    "unreachable",
    "step-limit",
    "bad-icall-target",
    "kind-mismatch",
    "dangling-pointer",
    "bad-longjmp",
    "stack-overflow",
)


@dataclass
class Limits:
    max_steps: int = 10_000_000
    max_depth: int = 1000


@dataclass
class ExecResult:
    exit_value: object = None
    output_trace: list = field(default_factory=list)
    trap: Optional[tuple] = None
    steps: int = 0

    def observable(self) -> tuple:
        """What differential tests compare: value, trace and trap kind."""
        return (self.exit_value, tuple(self.output_trace), self.trap[0] if self.trap else None)


@dataclass
class Checks:
    """Dynamic invariants asserted by :func:`run_checked`.

    ``exit_ranges`` maps a function to its exit count k (returns must fall in
    ``[0, k-1]``); ``deep_blocks`` maps a function to labels whose execution
    must leave globals and output untouched.
    """

    exit_ranges: dict = field(default_factory=dict)
    deep_blocks: dict = field(default_factory=dict)
    tag_entry: bool = True


class SlotPtr(NamedTuple):
    frame: int
    slot: str
    ty: str


class FnPtr(NamedTuple):
    bits: int


class JumpBuf(NamedTuple):
    frame: int
    block: object
    index: int
    dest: str


class Trap(Exception):
    def __init__(self, kind: str, where: str = ""):
        super().__init__(kind, where)
        self.kind = kind
        self.where = where


class _LongJump(Exception):
    def __init__(self, buf: JumpBuf, value: int):
        self.buf = buf
        self.value = value


class _Throw(Exception):
    def __init__(self, block):
        self.block = block


class _Frame:
    __slots__ = ("regs", "slots", "uid", "fn")

    def __init__(self, fn, uid):
        self.fn = fn
        self.uid = uid
        self.regs = {}
        self.slots = {}


class _CBlock:
    __slots__ = ("label", "code", "term")

    def __init__(self, label):
        self.label = label
        self.code = []
        self.term = None


_RETURN = object()


def _zero(ty):
    if is_float(ty):
        return 0.0
    if ty == "ptr":
        return None
    return 0


def _int_wrapper(ty):
    bits = INT_BITS[ty]
    mask = (1 << bits) - 1
    if bits == 1:
        return lambda v: v & 1
    half = 1 << (bits - 1)
    lo, hi = -half, half

    def wrap(v):
        if lo <= v < hi:
            return v
        v &= mask
        return v - (mask + 1) if v >= half else v

    return wrap


_WRAP = {t: _int_wrapper(t) for t in INT_BITS}


def _kind_ok(v, ty) -> bool:
    if is_int(ty):
        return type(v) is int
    if is_float(ty):
        return type(v) is float
    return v is None or type(v) in (SlotPtr, FnPtr)


def _fptosi(v: float, ty: str) -> int:
    if math.isnan(v):
        return 0
    if math.isinf(v):
        bits = INT_BITS[ty]
        return (1 << (bits - 1)) - 1 if v > 0 else -(1 << (bits - 1))
    return wrap_int(int(v), ty)


def _fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.inf * sign
    return a / b


_ICMP = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "slt": lambda a, b: a < b,
    "sle": lambda a, b: a <= b,
    "sgt": lambda a, b: a > b,
    "sge": lambda a, b: a >= b,
}
_FCMP = {
    "oeq": lambda a, b: a == b,
    "one": lambda a, b: a != b and not (math.isnan(a) or math.isnan(b)),
    "olt": lambda a, b: a < b,
    "ole": lambda a, b: a <= b,
    "ogt": lambda a, b: a > b,
    "oge": lambda a, b: a >= b,
}


def convert_arg(v, ty):
    """Coerce a host value to the IR representation of ``ty``."""
    if is_int(ty):
        return wrap_int(int(v), ty)
    if is_float(ty):
        return round_float(float(v), ty)
    if v is None:
        return None
    raise ValueError(f"cannot pass {v!r} as {ty}")


class Interpreter:
    """A module compiled for repeated execution."""

    def __init__(self, m: IrModule, limits: Optional[Limits] = None, checks: Optional[Checks] = None,
                 coverage: bool = False):
        self.m = m
        self.limits = limits or Limits()
        self.checks = checks
        self.coverage_enabled = coverage
        self.coverage: set = set()
        self.violations: list = []
        # compiled closures hold this dict, so it is cleared but never replaced
        self.live: dict = {}
        self.by_name: dict = {}
        for f in m.functions:
            self.by_name[f.name] = f
        self._compiled: dict = {}

    # -- compilation -------------------------------------------------------------

    def _cfunc(self, name: str):
        cf = self._compiled.get(name)
        if cf is None:
            cf = self._compile(self.by_name[name])
            self._compiled[name] = cf
        return cf

    def _compile(self, f: Function):
        blocks = {b.label: _CBlock(b.label) for b in f.blocks}
        cf = {"fn": f, "blocks": blocks, "entry": blocks[f.blocks[0].label] if f.blocks else None,
              "slots": list(f.slots)}
        self._compiled[f.name] = cf
        deep = set()
        if self.checks is not None:
            deep = set(self.checks.deep_blocks.get(f.name, ()))
        cf["deep"] = deep
        for b in f.blocks:
            cb = blocks[b.label]
            for i, ins in enumerate(b.instrs):
                cb.code.append(self._compile_instr(f, ins, cb, i, blocks))
            cb.term = self._compile_term(f, b, blocks)
        return cf

    @staticmethod
    def _getter(a, ty=None):
        if isinstance(a, Reg):
            name = a.name
            return lambda r: r[name]
        if isinstance(a, Imm):
            v = a.value
            if ty is not None and is_float(ty) and isinstance(v, int):
                v = float(v)
            return lambda r: v
        raise Trap("kind-mismatch", f"global @{a.name} used as value")

    def _compile_instr(self, f, ins, cb, index, blocks):
        op, d, ty = ins.op, ins.dest, ins.ty
        where = f"@{f.name}:{cb.label}#{index}"
        get = self._getter
        if op == "const":
            v = ins.args[0].value
            if is_float(ty) and isinstance(v, int):
                v = float(v)

            def run(fr):
                fr.regs[d] = v
            return run
        if op in ("add", "sub", "mul", "sdiv", "srem"):
            ga, gb = get(ins.args[0]), get(ins.args[1])
            w = _WRAP[ty]
            if op == "add":
                def run(fr):
                    r = fr.regs
                    r[d] = w(ga(r) + gb(r))
            elif op == "sub":
                def run(fr):
                    r = fr.regs
                    r[d] = w(ga(r) - gb(r))
            elif op == "mul":
                def run(fr):
                    r = fr.regs
                    r[d] = w(ga(r) * gb(r))
            elif op == "sdiv":
                def run(fr):
                    r = fr.regs
                    b = gb(r)
                    if b == 0:
                        raise Trap("div-by-zero", where)
                    a = ga(r)
                    q = abs(a) // abs(b)
                    r[d] = w(q if (a >= 0) == (b >= 0) else -q)
            else:
                def run(fr):
                    r = fr.regs
                    b = gb(r)
                    if b == 0:
                        raise Trap("div-by-zero", where)
                    a = ga(r)
                    rem = abs(a) % abs(b)
                    r[d] = w(rem if a >= 0 else -rem)
            return run
        if op in ("fadd", "fsub", "fmul", "fdiv"):
            ga, gb = get(ins.args[0], ty), get(ins.args[1], ty)
            fn = {
                "fadd": lambda a, b: a + b,
                "fsub": lambda a, b: a - b,
                "fmul": lambda a, b: a * b,
                "fdiv": _fdiv,
            }[op]
            single = ty == "f32"

            def run(fr):
                r = fr.regs
                try:
                    v = fn(ga(r), gb(r))
                except OverflowError:
                    v = math.inf
                r[d] = round_float(v, "f32") if single else v
            return run
        if op in ("icmp", "fcmp"):
            ga, gb = get(ins.args[0], ins.opty), get(ins.args[1], ins.opty)
            cmp = (_ICMP if op == "icmp" else _FCMP)[ins.pred]

            def run(fr):
                r = fr.regs
                r[d] = 1 if cmp(ga(r), gb(r)) else 0
            return run
        if op in ("zext", "sext", "trunc", "sitofp", "fptosi", "fpext", "fptrunc"):
            ga = get(ins.args[0], ins.opty)
            src = ins.opty
            if op == "zext":
                mask = (1 << INT_BITS[src]) - 1
                w = _WRAP[ty]
                conv = lambda v: w(v & mask)
            elif op == "sext":
                if src == "i1":
                    conv = lambda v: -v if ty != "i1" else v
                else:
                    conv = lambda v: v
            elif op == "trunc":
                conv = _WRAP[ty]
            elif op == "sitofp":
                conv = lambda v: round_float(float(v), ty)
            elif op == "fptosi":
                conv = lambda v: _fptosi(v, ty)
            elif op == "fpext":
                conv = float
            else:
                conv = lambda v: round_float(v, ty)

            def run(fr):
                r = fr.regs
                r[d] = conv(ga(r))
            return run
        if op == "slot_addr":
            slot = ins.sym
            sty = f.slot_type(slot)

            def run(fr):
                fr.regs[d] = SlotPtr(fr.uid, slot, sty)
            return run
        if op == "load":
            addr = ins.args[0]
            if isinstance(addr, GlobalRef):
                gname = addr.name

                def run(fr):
                    fr.regs[d] = self.globals[gname]
                return run
            ga = get(addr)
            live = self.live

            def run(fr):
                r = fr.regs
                p = ga(r)
                if type(p) is not SlotPtr:
                    raise Trap("null-deref" if p is None else "kind-mismatch", where)
                if p.ty != ty:
                    raise Trap("kind-mismatch", where)
                slots = live.get(p.frame)
                if slots is None:
                    raise Trap("dangling-pointer", where)
                v = slots[p.slot]
                if type(v) is JumpBuf:
                    raise Trap("kind-mismatch", where)
                r[d] = v
            return run
        if op == "store":
            gv = get(ins.args[0], ins.opty)
            addr = ins.args[1]
            sty = ins.opty
            if isinstance(addr, GlobalRef):
                gname = addr.name

                def run(fr):
                    self.globals[gname] = gv(fr.regs)
                return run
            ga = get(addr)
            live = self.live

            def run(fr):
                r = fr.regs
                p = ga(r)
                if type(p) is not SlotPtr:
                    raise Trap("null-deref" if p is None else "kind-mismatch", where)
                if p.ty != sty:
                    raise Trap("kind-mismatch", where)
                slots = live.get(p.frame)
                if slots is None:
                    raise Trap("dangling-pointer", where)
                slots[p.slot] = gv(r)
            return run
        if op == "call":
            getters = [get(a, t) for a, t in zip(ins.args, ins.argtys)]
            callee = ins.sym

            def run(fr):
                r = fr.regs
                v = self.invoke(callee, [g(r) for g in getters], where)
                if d is not None:
                    r[d] = v
            return run
        if op in ("icall", "icall_fused"):
            gp = get(ins.args[0])
            getters = [get(a, t) for a, t in zip(ins.args[1:], ins.argtys)]
            fused = op == "icall_fused"
            site = (ty, tuple(ins.argtys))

            def run(fr):
                r = fr.regs
                p = gp(r)
                target = self._resolve(p, where)
                args = [g(r) for g in getters]
                if fused:
                    v = self._call_fused(target, args, site, where)
                else:
                    if (target.ret, tuple(target.param_types())) != site and not (
                        target.variadic and tuple(site[1][: len(target.params)]) == tuple(target.param_types())
                        and target.ret == site[0]
                    ):
                        raise Trap("bad-icall-target", where)
                    v = self.invoke(target.name, args, where)
                if d is not None:
                    r[d] = v
            return run
        if op == "addr_of_func":
            bits = function_address(self.m, ins.sym)

            def run(fr):
                fr.regs[d] = FnPtr(bits)
            return run
        if op in ("tag_set", "tag_test", "tag_clear"):
            gp = get(ins.args[0])
            mask = ins.args[1].value if len(ins.args) > 1 else TAG_MASK

            def fnbits(p):
                if p is None:
                    return 0
                if type(p) is not FnPtr:
                    raise Trap("kind-mismatch", where)
                return p.bits

            if op == "tag_set":
                def run(fr):
                    fr.regs[d] = FnPtr(fnbits(gp(fr.regs)) | mask)
            elif op == "tag_test":
                def run(fr):
                    fr.regs[d] = 1 if fnbits(gp(fr.regs)) & mask else 0
            else:
                def run(fr):
                    p = gp(fr.regs)
                    fr.regs[d] = None if p is None else FnPtr(fnbits(p) & ~TAG_MASK)
            return run
        if op == "print":
            gv = get(ins.args[0], ins.opty)

            def run(fr):
                self.trace.append(gv(fr.regs))
            return run
        if op == "setjmp":
            gp = get(ins.args[0])
            live = self.live

            def run(fr):
                p = gp(fr.regs)
                if type(p) is not SlotPtr:
                    raise Trap("null-deref" if p is None else "kind-mismatch", where)
                slots = live.get(p.frame)
                if slots is None:
                    raise Trap("dangling-pointer", where)
                slots[p.slot] = JumpBuf(fr.uid, cb, index, d)
                fr.regs[d] = 0
            return run
        if op == "longjmp":
            gp, gv = get(ins.args[0]), get(ins.args[1], "i32")
            live = self.live

            def run(fr):
                p = gp(fr.regs)
                if type(p) is not SlotPtr:
                    raise Trap("null-deref" if p is None else "kind-mismatch", where)
                slots = live.get(p.frame)
                if slots is None:
                    raise Trap("dangling-pointer", where)
                buf = slots[p.slot]
                if type(buf) is not JumpBuf:
                    raise Trap("kind-mismatch", where)
                if buf.frame not in live:
                    raise Trap("bad-longjmp", where)
                v = gv(fr.regs)
                raise _LongJump(buf, v if v != 0 else 1)
            return run
        if op == "may_throw":
            gc = get(ins.args[0])
            handler = blocks[ins.sym]

            def run(fr):
                if gc(fr.regs):
                    raise _Throw(handler)
            return run
        raise Trap("kind-mismatch", f"unknown opcode {op}")

    def _compile_term(self, f, b, blocks):
        t = b.term
        where = f"@{f.name}:{b.label}"
        if t.kind == "br":
            nxt = blocks[t.targets[0]]
            return lambda fr: nxt
        if t.kind == "condbr":
            gc = self._getter(t.value)
            a, c = blocks[t.targets[0]], blocks[t.targets[1]]
            if self.coverage_enabled:
                cov = self.coverage
                key = (f.name, b.label)

                def term(fr):
                    v = gc(fr.regs)
                    cov.add((key, v))
                    return a if v else c
                return term
            return lambda fr: a if gc(fr.regs) else c
        if t.kind == "switch":
            gv = self._getter(t.value)
            table = {k: blocks[lbl] for k, lbl in reversed(t.cases)}
            default = blocks[t.targets[0]]
            return lambda fr: table.get(gv(fr.regs), default)
        if t.kind == "ret":
            if t.value is None:
                def term(fr):
                    self.retval = None
                    return _RETURN
                return term
            gv = self._getter(t.value, f.ret)

            def term(fr):
                self.retval = gv(fr.regs)
                return _RETURN
            return term

        def term(fr):
            raise Trap("unreachable", where)
        return term

    # -- execution ---------------------------------------------------------------

    def _resolve(self, p, where) -> Function:
        if type(p) is not FnPtr:
            raise Trap("bad-icall-target" if p is not None else "null-deref", where)
        if p.bits & TAG_MASK:
            if self.checks is not None and self.checks.tag_entry:
                self.violations.append(("tag-not-cleared", where, p.bits))
            raise Trap("bad-icall-target", where)
        target = function_at(self.m, p.bits)
        if target is None:
            raise Trap("bad-icall-target", where)
        return target

    def _call_fused(self, target: Function, args: list, site: tuple, where: str):
        """Call through a decoded tagged pointer: ctrl first, then positional args.

        Narrower integer/float arguments are widened to the merged parameter
        types, missing trailing parameters are zero-filled and the result is
        narrowed back to the call site's type.
        """
        ptys = target.param_types()
        sty_ret, atys = site
        if not ptys or ptys[0] != "i1" or len(atys) > len(ptys):
            raise Trap("bad-icall-target", where)
        out = []
        for k, pty in enumerate(ptys):
            if k >= len(args):
                out.append(_zero(pty))
                continue
            aty, v = atys[k], args[k]
            if aty == pty:
                out.append(v)
            elif is_int(aty) and is_int(pty) and INT_BITS[aty] <= INT_BITS[pty]:
                out.append(-v if aty == "i1" else v)
            elif is_float(aty) and is_float(pty) and FLOAT_BITS[aty] <= FLOAT_BITS[pty]:
                out.append(v)
            else:
                raise Trap("bad-icall-target", where)
        v = self.invoke(target.name, out, where)
        if sty_ret == "void":
            return None
        if target.ret == sty_ret:
            return v
        if is_int(sty_ret) and is_int(target.ret):
            return _WRAP[sty_ret](v)
        if is_float(sty_ret) and is_float(target.ret):
            return round_float(v, sty_ret)
        raise Trap("bad-icall-target", where)

    def invoke(self, name: str, args: list, where: str = ""):
        f = self.by_name[name]
        if f.external:
            self.steps += 1
            self.trace.append(f"call @{name}(" + ", ".join(map(repr, args)) + ")")
            if is_int(f.ret):
                return _WRAP[f.ret](sum(a for a in args if type(a) is int) + len(name))
            if is_float(f.ret):
                return round_float(float(sum(a for a in args if type(a) in (int, float))), f.ret)
            return None
        cf = self._cfunc(name)
        self.depth += 1
        if self.depth > self.limits.max_depth:
            raise Trap("stack-overflow", where)
        self.uid += 1
        fr = _Frame(f, self.uid)
        regs = fr.regs
        for (pname, _), v in zip(f.params, args):
            regs[pname] = v
        slots = fr.slots
        for sname, sty in cf["slots"]:
            slots[sname] = _zero(sty)
        self.live[fr.uid] = slots
        deep = cf["deep"]
        blk = cf["entry"]
        ip = 0
        max_steps = self.limits.max_steps
        try:
            while True:
                try:
                    code = blk.code
                    n = len(code)
                    self.steps += n - ip + 1
                    if self.steps > max_steps:
                        raise Trap("step-limit", f"@{name}:{blk.label}")
                    if deep and blk.label in deep:
                        snap = (dict(self.globals), len(self.trace))
                    else:
                        snap = None
                    while ip < n:
                        code[ip](fr)
                        ip += 1
                    if snap is not None and snap != (self.globals, len(self.trace)):
                        self.violations.append(("deep-block-effect", f"@{name}:{blk.label}", None))
                    nxt = blk.term(fr)
                    if nxt is _RETURN:
                        break
                    blk, ip = nxt, 0
                except _Throw as t:
                    blk, ip = t.block, 0
                except _LongJump as lj:
                    if lj.buf.frame != fr.uid:
                        raise
                    blk, ip = lj.buf.block, lj.buf.index + 1
                    regs[lj.buf.dest] = lj.value
        finally:
            del self.live[fr.uid]
            self.depth -= 1
        v = self.retval
        if self.checks is not None and name in self.checks.exit_ranges:
            k = self.checks.exit_ranges[name]
            if not (type(v) is int and 0 <= v < k):
                self.violations.append(("exit-code-range", f"@{name}", v))
        return v

    def run(self, entry: str, args: list) -> ExecResult:
        self.globals = {g.name: g.init for g in self.m.globals}
        self.trace = []
        self.live.clear()
        self.steps = 0
        self.depth = 0
        self.uid = 0
        self.retval = None
        result = ExecResult()
        try:
            f = self.by_name.get(entry)
            if f is None or f.external:
                raise Trap("bad-icall-target", f"no entry @{entry}")
            if len(args) != len(f.params):
                raise Trap("bad-icall-target", f"@{entry} expects {len(f.params)} args")
            cargs = [convert_arg(v, t) for v, (_, t) in zip(args, f.params)]
            old = sys.getrecursionlimit()
            sys.setrecursionlimit(max(old, 20 * self.limits.max_depth + 1000))
            try:
                result.exit_value = self.invoke(entry, cargs)
            finally:
                sys.setrecursionlimit(old)
        except Trap as t:
            result.trap = (t.kind, t.where)
        except _LongJump:
            result.trap = ("bad-longjmp", "escaped")
        except RecursionError:
            result.trap = ("stack-overflow", "host")
        except (ValueError, TypeError, KeyError, OverflowError) as e:
            result.trap = ("kind-mismatch", repr(e))
        if isinstance(result.exit_value, (SlotPtr, FnPtr)):
            result.exit_value = ("ptr", result.exit_value)
        result.output_trace = self.trace
        result.steps = self.steps
        return result


def run(m: IrModule, entry: str, args: list, limits: Optional[Limits] = None) -> ExecResult:
    """Execute ``entry`` with ``args``; traps are reported in the result."""
    return Interpreter(m, limits).run(entry, args)


def run_checked(m: IrModule, entry: str, args: list, limits: Optional[Limits] = None,
                checks: Optional[Checks] = None) -> tuple:
    """Like :func:`run` but also returns dynamic-invariant violations."""
    it = Interpreter(m, limits, checks or Checks())
    res = it.run(entry, args)
    return res, list(it.violations)
