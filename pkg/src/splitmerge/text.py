"""Textual IR: tokenizer, parser and canonical printer.

The grammar is token based, so a whole function may sit on one line::

    func @id(x: i64) -> i64 { entry: ret x }

The printer always emits the canonical, line-oriented form (registers and
slots carry ``%``, functions and globals carry ``@``).
"""
from __future__ import annotations

import math
import re
from typing import Optional

from .ir import (
    ALL_TYPES,
    BINOPS,
    CASTS,
    FCMP_PREDS,
    ICMP_PREDS,
    TAG_OPS,
    TERMINATORS,
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
    round_float,
    wrap_int,
)


class IrSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class IrValidationError(ValueError):
    def __init__(self, violations: list):
        super().__init__("invalid module:\n  " + "\n  ".join(str(v) for v in violations))
        self.violations = violations


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|;[^\n]*)
  | (?P<arrow>->)
  | (?P<num>-?(?:\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+|inf\b|nan\b))
  | (?P<reg>%[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<sym>@[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<id>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>\.\.\.|[(){}\[\],:=])
    """,
    re.VERBOSE,
)


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise IrSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.peek()
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        return IrSyntaxError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("punct", "arrow", "id") and t.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            got = self.peek().text or "end of input"
            raise self.error(f"expected {text!r}, got {got!r}")
        return self.next()

    def ident(self, what: str = "identifier") -> str:
        t = self.next()
        if t.kind != "id":
            raise self.error(f"expected {what}", t)
        return t.text

    def regname(self) -> str:
        t = self.next()
        if t.kind == "reg":
            return t.text[1:]
        if t.kind == "id":
            return t.text
        raise self.error("expected register name", t)

    def symname(self) -> str:
        t = self.next()
        if t.kind != "sym":
            raise self.error("expected @name", t)
        return t.text[1:]

    def type_(self, allow_void: bool = False) -> str:
        t = self.next()
        if t.kind != "id" or t.text not in ALL_TYPES:
            raise self.error(f"expected type, got {t.text!r}", t)
        if t.text == "void" and not allow_void:
            raise self.error("void is only allowed as a return type", t)
        return t.text

    def integer(self) -> int:
        t = self.next()
        if t.kind != "num":
            raise self.error("expected integer", t)
        try:
            return int(t.text)
        except ValueError:
            raise self.error("expected integer", t) from None

    def operand(self, ty: Optional[str] = None):
        t = self.next()
        if t.kind == "reg":
            return Reg(t.text[1:])
        if t.kind == "sym":
            return GlobalRef(t.text[1:])
        if t.kind == "num":
            return Imm(_literal(t.text, ty, self, t))
        if t.kind == "id":
            if t.text == "null":
                return Imm(None)
            if t.text in ("true", "false"):
                return Imm(1 if t.text == "true" else 0)
            if t.text in ALL_TYPES or t.text in TERMINATORS:
                raise self.error(f"expected operand, got {t.text!r}", t)
            return Reg(t.text)
        raise self.error(f"expected operand, got {t.text!r}", t)

    # -- module level
    def module(self) -> IrModule:
        m = IrModule()
        if self.at("module"):
            self.next()
            m.name = self.ident("module name")
        while self.peek().kind != "eof":
            kw = self.peek()
            if kw.kind != "id":
                raise self.error(f"expected declaration, got {kw.text!r}")
            if kw.text == "global":
                self.next()
                name = self.symname()
                self.expect(":")
                ty = self.type_()
                self.expect("=")
                init = self.operand(ty)
                if not isinstance(init, Imm):
                    raise self.error("global initializer must be a constant", kw)
                m.globals.append(GlobalVar(name, ty, init.value))
            elif kw.text == "export":
                self.next()
                m.exported.add(self.symname())
            elif kw.text == "visible":
                self.next()
                m.externally_visible_pointers.add(self.symname())
            elif kw.text == "declare":
                self.next()
                m.functions.append(self.declare())
            elif kw.text == "func":
                self.next()
                m.functions.append(self.function())
            else:
                raise self.error(f"unknown declaration {kw.text!r}")
        m.refresh_attributes()
        return m

    def declare(self) -> Function:
        name = self.symname()
        self.expect("(")
        params, variadic = [], False
        while not self.at(")"):
            if self.at("..."):
                self.next()
                variadic = True
                break
            # declared parameters are positional; any names given are dropped
            if self.peek().kind == "reg" or (self.peek().kind == "id" and self.peek(1).text == ":"):
                self.regname()
                self.expect(":")
            params.append((f"a{len(params)}", self.type_()))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        self.expect("->")
        ret = self.type_(allow_void=True)
        return Function(name, params, ret, variadic, external=True)

    def function(self) -> Function:
        name = self.symname()
        self.expect("(")
        params, variadic = [], False
        while not self.at(")"):
            if self.at("..."):
                self.next()
                variadic = True
                break
            pname = self.regname()
            self.expect(":")
            params.append((pname, self.type_()))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        self.expect("->")
        ret = self.type_(allow_void=True)
        f = Function(name, params, ret, variadic)
        self.expect("{")
        while self.at("slot"):
            self.next()
            sname = self.regname()
            self.expect(":")
            f.slots.append((sname, self.type_()))
        while not self.at("}"):
            f.blocks.append(self.block(f))
        self.expect("}")
        if not f.blocks:
            raise self.error(f"function @{name} has no blocks")
        return f

    def block(self, f: Function) -> BasicBlock:
        t = self.peek()
        if t.kind != "id" or self.peek(1).text != ":":
            raise self.error(f"expected block label, got {t.text!r}")
        label = self.next().text
        self.expect(":")
        b = BasicBlock(label)
        while True:
            t = self.peek()
            if t.kind == "eof" or self.at("}"):
                raise self.error(f"block {label} has no terminator")
            if t.kind == "id" and t.text in TERMINATORS and self.peek(1).text != "=":
                b.term = self.terminator(f)
                return b
            if t.kind == "id" and self.peek(1).text == ":":
                raise self.error(f"block {label} has no terminator")
            b.instrs.append(self.instr())

    def terminator(self, f: Function) -> Term:
        kw = self.next().text
        if kw == "br":
            return Term("br", targets=[self.ident("label")])
        if kw == "condbr":
            c = self.operand("i1")
            self.expect(",")
            a = self.ident("label")
            self.expect(",")
            return Term("condbr", c, [a, self.ident("label")])
        if kw == "switch":
            v = self.operand()
            self.expect(",")
            self.expect("[")
            cases = []
            while not self.at("]"):
                k = self.integer()
                self.expect("->")
                cases.append((k, self.ident("label")))
                if not self.at("]"):
                    self.expect(",")
            self.expect("]")
            self.expect(",")
            self.expect("default")
            return Term("switch", v, [self.ident("label")], cases)
        if kw == "ret":
            t, t1 = self.peek(), self.peek(1)
            has_value = t.kind in ("reg", "num") or (
                t.kind == "id" and t1.text != ":" and t.text not in ALL_TYPES
            )
            if has_value:
                return Term("ret", self.operand(f.ret))
            return Term("ret")
        return Term("unreachable")

    def call_args(self) -> tuple:
        self.expect("(")
        args, tys = [], []
        while not self.at(")"):
            ty = self.type_()
            tys.append(ty)
            args.append(self.operand(ty))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return args, tys

    def instr(self) -> Instr:
        dest = None
        t = self.peek()
        if t.kind in ("reg", "id") and self.peek(1).text == "=":
            dest = self.regname()
            self.expect("=")
        optok = self.next()
        if optok.kind != "id":
            raise self.error(f"expected opcode, got {optok.text!r}", optok)
        op = optok.text
        ins = self._instr_body(op, dest, optok)
        if ins.dest is None and dest is not None:
            raise self.error(f"{op} produces no result", optok)
        if ins.ty not in (None, "void") and dest is None and op not in ("call", "icall", "icall_fused"):
            raise self.error(f"{op} requires a result register", optok)
        return ins

    def _instr_body(self, op: str, dest, optok) -> Instr:
        if op == "const":
            ty = self.type_()
            return Instr(op, dest, ty, [self.operand(ty)])
        if op in BINOPS:
            ty = self.type_()
            a = self.operand(ty)
            self.expect(",")
            return Instr(op, dest, ty, [a, self.operand(ty)])
        if op in ("icmp", "fcmp"):
            pred = self.ident("predicate")
            if pred not in (ICMP_PREDS if op == "icmp" else FCMP_PREDS):
                raise self.error(f"unknown {op} predicate {pred!r}")
            ty = self.type_()
            a = self.operand(ty)
            self.expect(",")
            return Instr(op, dest, "i1", [a, self.operand(ty)], opty=ty, pred=pred)
        if op in CASTS:
            src = self.type_()
            a = self.operand(src)
            self.expect("to")
            return Instr(op, dest, self.type_(), [a], opty=src)
        if op == "slot_addr":
            return Instr(op, dest, "ptr", sym=self.regname())
        if op == "load":
            ty = self.type_()
            return Instr(op, dest, ty, [self.operand()])
        if op == "store":
            ty = self.type_()
            v = self.operand(ty)
            self.expect(",")
            return Instr(op, None, None, [v, self.operand()], opty=ty)
        if op == "call":
            ty = self.type_(allow_void=True)
            callee = self.symname()
            args, tys = self.call_args()
            return Instr(op, dest if ty != "void" else None, ty, args, argtys=tys, sym=callee)
        if op in ("icall", "icall_fused"):
            ty = self.type_(allow_void=True)
            fp = self.operand()
            args, tys = self.call_args()
            return Instr(op, dest if ty != "void" else None, ty, [fp] + args, argtys=tys)
        if op == "addr_of_func":
            return Instr(op, dest, "ptr", sym=self.symname())
        if op in TAG_OPS:
            p = self.operand()
            if op == "tag_clear":
                return Instr(op, dest, "ptr", [p])
            self.expect(",")
            return Instr(op, dest, "i1" if op == "tag_test" else "ptr", [p, Imm(self.integer())])
        if op == "print":
            ty = self.type_()
            return Instr(op, None, None, [self.operand(ty)], opty=ty)
        if op == "setjmp":
            return Instr(op, dest, "i32", [self.operand()])
        if op == "longjmp":
            p = self.operand()
            self.expect(",")
            return Instr(op, None, None, [p, self.operand("i32")])
        if op == "may_throw":
            c = self.operand("i1")
            self.expect(",")
            return Instr(op, None, None, [c], sym=self.ident("label"))
        raise self.error(f"unknown opcode {op!r}", optok)


def _literal(text: str, ty: Optional[str], p: _Parser, tok: _Tok):
    if is_float(ty) or any(c in text for c in ".eEn"):
        try:
            v = float(text)
        except ValueError:
            raise p.error(f"bad number {text!r}", tok) from None
        if is_int(ty):
            raise p.error(f"float literal for {ty}", tok)
        return round_float(v, ty) if ty else v
    v = int(text)
    if is_float(ty):
        return round_float(float(v), ty)
    if is_int(ty):
        return wrap_int(v, ty)
    return v


def parse_module(text: str, validate: bool = True) -> IrModule:
    """Parse IR text; raises IrSyntaxError or IrValidationError."""
    m = _Parser(text).module()
    if validate:
        from .validate import validate as _validate

        violations = _validate(m)
        if violations:
            raise IrValidationError(violations)
    return m


# -- printer --------------------------------------------------------------------


def fmt_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def fmt_operand(a) -> str:
    if isinstance(a, Reg):
        return "%" + a.name
    if isinstance(a, GlobalRef):
        return "@" + a.name
    return fmt_value(a.value)


def fmt_instr(ins: Instr) -> str:
    op = ins.op
    lhs = f"%{ins.dest} = " if ins.dest is not None else ""
    a = [fmt_operand(x) for x in ins.args]
    if op == "const":
        body = f"const {ins.ty} {a[0]}"
    elif op in BINOPS:
        body = f"{op} {ins.ty} {a[0]}, {a[1]}"
    elif op in ("icmp", "fcmp"):
        body = f"{op} {ins.pred} {ins.opty} {a[0]}, {a[1]}"
    elif op in CASTS:
        body = f"{op} {ins.opty} {a[0]} to {ins.ty}"
    elif op == "slot_addr":
        body = f"slot_addr %{ins.sym}"
    elif op == "load":
        body = f"load {ins.ty} {a[0]}"
    elif op == "store":
        body = f"store {ins.opty} {a[0]}, {a[1]}"
    elif op == "call":
        args = ", ".join(f"{t} {x}" for t, x in zip(ins.argtys, a))
        body = f"call {ins.ty} @{ins.sym}({args})"
    elif op in ("icall", "icall_fused"):
        args = ", ".join(f"{t} {x}" for t, x in zip(ins.argtys, a[1:]))
        body = f"{op} {ins.ty} {a[0]}({args})"
    elif op == "addr_of_func":
        body = f"addr_of_func @{ins.sym}"
    elif op == "tag_clear":
        body = f"tag_clear {a[0]}"
    elif op in TAG_OPS:
        body = f"{op} {a[0]}, {a[1]}"
    elif op == "print":
        body = f"print {ins.opty} {a[0]}"
    elif op == "setjmp":
        body = f"setjmp {a[0]}"
    elif op == "longjmp":
        body = f"longjmp {a[0]}, {a[1]}"
    elif op == "may_throw":
        body = f"may_throw {a[0]}, {ins.sym}"
    else:  # pragma: no cover - guarded by the parser
        raise ValueError(f"unknown opcode {op}")
    return lhs + body


def fmt_term(t: Term) -> str:
    if t.kind == "br":
        return f"br {t.targets[0]}"
    if t.kind == "condbr":
        return f"condbr {fmt_operand(t.value)}, {t.targets[0]}, {t.targets[1]}"
    if t.kind == "switch":
        cases = ", ".join(f"{k} -> {lbl}" for k, lbl in t.cases)
        return f"switch {fmt_operand(t.value)}, [{cases}], default {t.targets[0]}"
    if t.kind == "ret":
        return "ret" if t.value is None else f"ret {fmt_operand(t.value)}"
    return "unreachable"


def print_function(f: Function) -> str:
    params = [f"%{n}: {t}" for n, t in f.params]
    if f.variadic:
        params.append("...")
    if f.external:
        params = [t for _, t in f.params] + (["..."] if f.variadic else [])
        return f"declare @{f.name}({', '.join(params)}) -> {f.ret}"
    lines = [f"func @{f.name}({', '.join(params)}) -> {f.ret} {{"]
    for n, t in f.slots:
        lines.append(f"  slot %{n}: {t}")
    for b in f.blocks:
        lines.append(f"{b.label}:")
        for ins in b.instrs:
            lines.append("  " + fmt_instr(ins))
        lines.append("  " + fmt_term(b.term))
    lines.append("}")
    return "\n".join(lines)


def print_module(m: IrModule) -> str:
    out = [f"module {m.name}"]
    if m.globals:
        out.append("")
        for g in m.globals:
            out.append(f"global @{g.name}: {g.ty} = {fmt_value(g.init)}")
    if m.exported or m.externally_visible_pointers:
        out.append("")
        out.extend(f"export @{n}" for n in sorted(m.exported))
        out.extend(f"visible @{n}" for n in sorted(m.externally_visible_pointers))
    for f in m.functions:
        out.append("")
        out.append(print_function(f))
    return "\n".join(out) + "\n"
