"""Core data model for the register-and-slot IR.

Registers are single-assignment; mutable locals live in named stack slots
that are accessed through ``slot_addr``/``load``/``store``.  Every function
lives at an abstract address ``ordinal * 16`` so the low four bits of any
function pointer are free for tagging.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

INT_TYPES = ("i1", "i8", "i16", "i32", "i64")
FLOAT_TYPES = ("f32", "f64")
VALUE_TYPES = INT_TYPES + FLOAT_TYPES + ("ptr",)
ALL_TYPES = VALUE_TYPES + ("void",)

INT_BITS = {"i1": 1, "i8": 8, "i16": 16, "i32": 32, "i64": 64}
FLOAT_BITS = {"f32": 32, "f64": 64}

INT_BINOPS = ("add", "sub", "mul", "sdiv", "srem")
FLOAT_BINOPS = ("fadd", "fsub", "fmul", "fdiv")
BINOPS = INT_BINOPS + FLOAT_BINOPS
CASTS = ("zext", "sext", "trunc", "sitofp", "fptosi", "fpext", "fptrunc")
ICMP_PREDS = ("eq", "ne", "slt", "sle", "sgt", "sge")
FCMP_PREDS = ("oeq", "one", "olt", "ole", "ogt", "oge")
TAG_OPS = ("tag_set", "tag_test", "tag_clear")
CALL_OPS = ("call", "icall", "icall_fused")

OPCODES = (
    ("const",) + BINOPS + ("icmp", "fcmp") + CASTS
    + ("slot_addr", "load", "store") + CALL_OPS
    + ("addr_of_func",) + TAG_OPS
    + ("print", "setjmp", "longjmp", "may_throw")
)
TERMINATORS = ("br", "condbr", "switch", "ret", "unreachable")

FUNC_ALIGN = 16
TAG_FUSED = 0b010
TAG_CTRL = 0b100
TAG_MASK = TAG_FUSED | TAG_CTRL


def is_int(ty: Optional[str]) -> bool:
    return ty in INT_BITS


def is_float(ty: Optional[str]) -> bool:
    return ty in FLOAT_BITS


def wrap_int(value: int, ty: str) -> int:
    """Normalize ``value`` to the two's-complement range of ``ty``.

    ``i1`` is kept as 0/1; wider types are signed.
    """
    bits = INT_BITS[ty]
    value &= (1 << bits) - 1
    if bits > 1 and value >= 1 << (bits - 1):
        value -= 1 << bits
    return value


def round_float(value: float, ty: str) -> float:
    if ty == "f32":
        import struct

        try:
            return struct.unpack("f", struct.pack("f", value))[0]
        except OverflowError:
            return float("inf") if value > 0 else float("-inf")
    return float(value)


# -- operands -----------------------------------------------------------------


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class Imm:
    """Immediate constant; ``value`` is int, float, or None (the null pointer)."""

    value: Union[int, float, None]


@dataclass(frozen=True)
class GlobalRef:
    name: str


Operand = Union[Reg, Imm, GlobalRef]


def zero_operand(ty: str) -> Imm:
    if is_float(ty):
        return Imm(0.0)
    if ty == "ptr":
        return Imm(None)
    return Imm(0)


# -- instructions ---------------------------------------------------------------


@dataclass
class Instr:
    """One non-terminator instruction.

    ``ty`` is the result type (None when there is no result).  ``opty`` is
    the operand type annotation used by comparisons, casts, ``store``,
    ``print`` and calls (where it lists the argument types).  ``sym`` names a
    function, slot, or handler label depending on the opcode.
    """

    op: str
    dest: Optional[str] = None
    ty: Optional[str] = None
    args: list = field(default_factory=list)
    opty: Optional[str] = None
    argtys: list = field(default_factory=list)
    pred: Optional[str] = None
    sym: Optional[str] = None

    def uses(self) -> Iterator[str]:
        for a in self.args:
            if isinstance(a, Reg):
                yield a.name

    def rename_uses(self, mapping: dict) -> None:
        self.args = [
            Reg(mapping[a.name]) if isinstance(a, Reg) and a.name in mapping else a
            for a in self.args
        ]

    def is_call(self) -> bool:
        return self.op in CALL_OPS


@dataclass
class Term:
    """Block terminator.

    ``targets`` holds ``[t]`` for br, ``[then, else]`` for condbr and
    ``[default]`` for switch; ``cases`` holds switch ``(const, label)`` pairs.
    """

    kind: str
    value: Optional[Operand] = None
    targets: list = field(default_factory=list)
    cases: list = field(default_factory=list)

    def successors(self) -> list:
        if self.kind == "switch":
            out = [lbl for _, lbl in self.cases] + list(self.targets)
        else:
            out = list(self.targets)
        seen = []
        for lbl in out:
            if lbl not in seen:
                seen.append(lbl)
        return seen

    def uses(self) -> Iterator[str]:
        if isinstance(self.value, Reg):
            yield self.value.name

    def rename_uses(self, mapping: dict) -> None:
        if isinstance(self.value, Reg) and self.value.name in mapping:
            self.value = Reg(mapping[self.value.name])

    def retarget(self, old: str, new: str) -> None:
        self.targets = [new if t == old else t for t in self.targets]
        self.cases = [(k, new if t == old else t) for k, t in self.cases]


@dataclass
class BasicBlock:
    label: str
    instrs: list = field(default_factory=list)
    term: Term = field(default_factory=lambda: Term("unreachable"))

    def handler(self) -> Optional[str]:
        """Handler label of a trailing ``may_throw``, if any."""
        if self.instrs and self.instrs[-1].op == "may_throw":
            return self.instrs[-1].sym
        return None

    def successors(self) -> list:
        succ = self.term.successors()
        h = self.handler()
        if h is not None and h not in succ:
            succ = succ + [h]
        return succ

    def retarget(self, old: str, new: str) -> None:
        self.term.retarget(old, new)
        for ins in self.instrs:
            if ins.op == "may_throw" and ins.sym == old:
                ins.sym = new


@dataclass
class Function:
    name: str
    params: list = field(default_factory=list)  # [(name, type)]
    ret: str = "void"
    variadic: bool = False
    slots: list = field(default_factory=list)  # [(name, type)]
    blocks: list = field(default_factory=list)
    external: bool = False
    attributes: set = field(default_factory=set)

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def block_map(self) -> dict:
        return {b.label: b for b in self.blocks}

    def labels(self) -> list:
        return [b.label for b in self.blocks]

    def successors(self) -> dict:
        return {b.label: b.successors() for b in self.blocks}

    def predecessors(self) -> dict:
        preds: dict = {b.label: [] for b in self.blocks}
        for b in self.blocks:
            for s in b.successors():
                if s in preds and b.label not in preds[s]:
                    preds[s].append(b.label)
        return preds

    def slot_type(self, name: str) -> Optional[str]:
        for n, t in self.slots:
            if n == name:
                return t
        return None

    def param_types(self) -> list:
        return [t for _, t in self.params]

    def instructions(self) -> Iterator[Instr]:
        for b in self.blocks:
            yield from b.instrs

    def reg_types(self) -> dict:
        types = {n: t for n, t in self.params}
        for ins in self.instructions():
            if ins.dest is not None:
                types[ins.dest] = ins.ty
        return types

    def used_names(self) -> set:
        names = {n for n, _ in self.params} | {n for n, _ in self.slots}
        names |= {b.label for b in self.blocks}
        for ins in self.instructions():
            if ins.dest:
                names.add(ins.dest)
        return names


@dataclass
class GlobalVar:
    name: str
    ty: str
    init: Union[int, float, None] = 0


@dataclass
class IrModule:
    name: str = "m"
    globals: list = field(default_factory=list)
    functions: list = field(default_factory=list)
    exported: set = field(default_factory=set)
    externally_visible_pointers: set = field(default_factory=set)

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)

    def global_var(self, name: str) -> Optional[GlobalVar]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def defined_functions(self) -> list:
        return [f for f in self.functions if not f.external]

    def symbol_names(self) -> set:
        return {f.name for f in self.functions} | {g.name for g in self.globals}

    def fresh_function_name(self, base: str) -> str:
        taken = self.symbol_names()
        if base not in taken:
            return base
        i = 1
        while f"{base}{i}" in taken:
            i += 1
        return f"{base}{i}"

    def refresh_attributes(self) -> None:
        """Recompute derived function attributes from module contents."""
        taken = set()
        for f in self.functions:
            for ins in f.instructions():
                if ins.op == "addr_of_func":
                    taken.add(ins.sym)
        for f in self.functions:
            attrs = set()
            if f.external:
                attrs.add("external")
            if f.name in taken:
                attrs.add("address_taken")
            if any(i.op == "setjmp" for i in f.instructions()):
                attrs.add("contains_setjmp")
            f.attributes = attrs


def function_address(m: IrModule, name: str) -> int:
    """Abstract address of ``name``: its ordinal times the 16-byte alignment."""
    for k, f in enumerate(m.functions):
        if f.name == name:
            return k * FUNC_ALIGN
    raise KeyError(f"unknown function @{name}")


def function_at(m: IrModule, address: int) -> Optional[Function]:
    if address < 0 or address % FUNC_ALIGN:
        return None
    k = address // FUNC_ALIGN
    if k < len(m.functions):
        return m.functions[k]
    return None


def fresh_name(taken: set, base: str) -> str:
    """Return ``base`` or ``base.N`` not in ``taken``; adds the result to ``taken``."""
    name = base
    i = 1
    while name in taken:
        name = f"{base}.{i}"
        i += 1
    taken.add(name)
    return name
