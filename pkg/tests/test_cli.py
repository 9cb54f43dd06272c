import json
import random
import subprocess
import sys

import pytest

from conftest import CORPUS
from fuzzing import mutate
from splitmerge import cli, samples
from splitmerge.text import IrSyntaxError, IrValidationError, parse_module


@pytest.fixture
def cal(tmp_path):
    p = tmp_path / "cal.ir"
    p.write_text(samples.CAL_FILE)
    return p


def call(capsys, *argv):
    rc = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def test_validate_ok(capsys, cal):
    rc, out, _ = call(capsys, "validate", cal)
    assert rc == 0 and out.strip().endswith(": ok")


@pytest.mark.parametrize("text,code", [
    ("module m\nfunc @f() -> i32 {\nentry:\n  %a = frob i32 1\n  ret %a\n}\n", cli.EXIT_SYNTAX),
    ("module m\nfunc @f() -> i32 {\nentry:\n  ret %x\n}\n", cli.EXIT_INVALID),
])
def test_bad_ir_exit_codes(capsys, tmp_path, text, code):
    p = tmp_path / "bad.ir"
    p.write_text(text)
    rc, _, err = call(capsys, "validate", p)
    assert rc == code and err.startswith("error:")


def test_missing_file_and_usage(capsys, tmp_path):
    assert call(capsys, "validate", tmp_path / "nope.ir")[0] == cli.EXIT_IO
    assert call(capsys)[0] == cli.EXIT_USAGE
    assert call(capsys, "obfuscate", "x.ir")[0] == cli.EXIT_USAGE  # --seed is required
    assert call(capsys, "gen", "--features", "loops,teleport", "-o", tmp_path)[0] == cli.EXIT_USAGE


def test_run_prints_trace_and_exit(capsys, cal):
    rc, out, _ = call(capsys, "run", cal, "--entry", "cal_file", "--args", "0", "-1")
    assert rc == 0 and out.splitlines() == ["-1", "exit: 1"]


def test_run_trap_exit_code(capsys, tmp_path):
    p = tmp_path / "t.ir"
    p.write_text("module m\nfunc @main(%a: i32) -> i32 {\nentry:\n  %q = sdiv i32 1, %a\n  ret %q\n}\n")
    rc, out, _ = call(capsys, "run", p, "--args", "0")
    assert rc == cli.EXIT_TRAP and out.startswith("trap: div-by-zero")
    assert call(capsys, "run", p, "--args", "1", "2")[0] == cli.EXIT_USAGE
    assert call(capsys, "run", p, "--args", "one")[0] == cli.EXIT_USAGE


def test_obfuscate_outputs_and_determinism(capsys, tmp_path):
    src = tmp_path / "p.ir"
    src.write_text((CORPUS / "prog_003.ir").read_text())
    outs = []
    for k in range(2):
        o, pv, st = tmp_path / f"o{k}.ir", tmp_path / f"p{k}.json", tmp_path / f"s{k}.json"
        rc, _, _ = call(capsys, "obfuscate", src, "--mode", "fufi_all", "--seed", 7, "-o", o,
                        "--provenance", pv, "--stats", st)
        assert rc == 0
        outs.append((o.read_bytes(), pv.read_bytes(), st.read_bytes()))
        parse_module(o.read_text())
    assert outs[0] == outs[1]
    stats = json.loads(outs[0][2])
    assert set(stats["metrics"]) == {"Fission Ratio", "#BB", "RR", "Fusion Ratio", "#RP", "#HBB"}
    rc, out, _ = call(capsys, "run", tmp_path / "o0.ir", "--args", "3", "4")
    assert rc == 0 and out.splitlines()[-1].startswith("exit:")


def test_identity_diff_is_perfect(capsys, cal, tmp_path):
    o, pv, js = tmp_path / "o.ir", tmp_path / "p.json", tmp_path / "d.json"
    assert call(capsys, "obfuscate", cal, "--mode", "identity", "--seed", 1, "-o", o, "--provenance", pv)[0] == 0
    rc, out, _ = call(capsys, "diff", cal, o, "--provenance", pv, "--json", js)
    assert rc == 0 and "Precision@1: 1.0000" in out
    assert json.loads(js.read_text())["precision_at_1"] == 1.0


def test_config_file(capsys, cal, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mode": "fission_only", "fission": {"min_effect": 50}}))
    o = tmp_path / "o.ir"
    assert call(capsys, "obfuscate", cal, "--seed", 0, "--config", cfg, "-o", o)[0] == 0
    # regions need at least 50 blocks, so nothing is split
    assert ".sep" not in o.read_text()
    cfg.write_text("{not json")
    assert call(capsys, "obfuscate", cal, "--seed", 0, "--config", cfg)[0] == cli.EXIT_USAGE


def test_stats_json(capsys, cal):
    rc, out, _ = call(capsys, "stats", cal)
    doc = json.loads(out)
    f = doc["files"][str(cal)]["functions"]["cal_file"]
    assert f["idom"]["b6"] == "b5" and f["idom"]["b1"] is None
    assert [r["head"] for r in f["regions"]] and doc["seed"] == 42
    assert doc["metrics"]["Fission Ratio"] == 2.0


def test_gen_is_reproducible(capsys, tmp_path):
    for d in ("a", "b"):
        assert call(capsys, "gen", "--seed", 5, "--count", 3, "--inputs", 4, "-o", tmp_path / d)[0] == 0
    for name in ("prog_000.ir", "prog_002.ir", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert len(man["programs"]) == 3 and len(man["programs"][0]["inputs"]) == 4


def test_module_entry_point(cal):
    p = subprocess.run([sys.executable, "-m", "splitmerge", "run", str(cal), "--entry", "cal_file",
                        "--args", "5", "2"], capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.splitlines()[-1].startswith("exit:")
    p = subprocess.run([sys.executable, "-m", "splitmerge", "--help"], capture_output=True, text=True)
    assert p.returncode == 0 and "exit codes" in p.stdout


def _malformed(text):
    try:
        parse_module(text)
    except (IrSyntaxError, IrValidationError, RecursionError):
        return True
    return False


def test_fuzzed_inputs_get_diagnostics(capsys, tmp_path):
    rng = random.Random(3)
    p = tmp_path / "f.ir"
    for _ in range(150):
        text = mutate(rng.choice([samples.CAL_FILE, samples.BAR_FOO, samples.FPTR_BAR_FOO]), rng)
        p.write_text(text)
        rc, _, err = call(capsys, "validate", p)
        assert rc != cli.EXIT_INTERNAL, err
        if _malformed(text):
            assert rc in (cli.EXIT_SYNTAX, cli.EXIT_INVALID) and err.strip()
        else:
            assert rc == 0
