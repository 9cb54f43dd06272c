import json
import random
from pathlib import Path

import pytest

from splitmerge.ir import BasicBlock, Function, Imm, Instr, IrModule, Reg, Term
from splitmerge.text import parse_module

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDENS = Path(__file__).resolve().parent / "goldens"


def random_cfg(rng: random.Random, n_blocks: int, name: str = "f") -> Function:
    """A function with random control flow over ``n_blocks`` blocks.

    Branches test the i1 parameter %c and every block prints its index.
    """
    labels = [f"b{i}" for i in range(n_blocks)]
    targets = labels[1:]  # the entry block may not have predecessors
    blocks = []
    for i, lbl in enumerate(labels):
        instrs = [Instr("print", args=[Imm(i)], opty="i32")]
        r = rng.random()
        if r < 0.2 or n_blocks == 1:
            term = Term("ret")
        elif r < 0.5:
            term = Term("br", targets=[rng.choice(targets)])
        else:
            term = Term("condbr", Reg("c"), [rng.choice(targets), rng.choice(targets)])
        blocks.append(BasicBlock(lbl, instrs, term))
    return Function(name, [("c", "i1")], "void", False, [], blocks)


def cfg_module(f: Function) -> IrModule:
    m = IrModule("cfg")
    m.functions = [f]
    m.exported = {f.name}
    m.refresh_attributes()
    return m


def load_corpus():
    manifest = json.loads((CORPUS / "manifest.json").read_text())
    out = []
    for entry in manifest["programs"]:
        m = parse_module((CORPUS / entry["file"]).read_text())
        out.append((entry, m))
    return manifest, out


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


ACCEPTANCE: list = []


def report(name: str, ok: bool, detail: str) -> None:
    """Record one acceptance line; shown at the end of the run."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
