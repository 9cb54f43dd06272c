import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitmerge import ObfuscationConfig, StatsReport, corpus_gen, obfuscate, samples
from splitmerge.config import MODES
from splitmerge.interp import run, run_checked
from splitmerge.pipeline import separate_pass_stats
from splitmerge.provenance import ProvenanceMap
from splitmerge.text import print_module
from splitmerge.validate import validate

METRICS = {"Fission Ratio", "#BB", "RR", "Fusion Ratio", "#RP", "#HBB"}


@pytest.fixture(scope="module")
def prog():
    return corpus_gen.generate(corpus_gen.GenSpec(seed=9, n_functions=6))


def test_identity_is_a_copy(prog):
    out, prov, report = obfuscate(prog, ObfuscationConfig("identity", 3))
    assert out is not prog and print_module(out) == print_module(prog)
    assert set(prov.role.values()) == {"unchanged"}
    assert report.metrics() == dict.fromkeys(METRICS, 0.0)


@pytest.mark.parametrize("mode", MODES)
def test_every_mode_validates_and_preserves(prog, mode):
    out, prov, report = obfuscate(prog, ObfuscationConfig(mode, 1))
    assert validate(out) == []
    assert set(report.metrics()) == METRICS
    for args in corpus_gen.generate_inputs(prog, "main", 10, 0):
        res, viol = run_checked(out, "main", args, checks=report.checks())
        assert res.observable() == run(prog, "main", args).observable()
        assert viol == []
    # every defined output function traces back to real originals
    ori = {f.name for f in prog.defined_functions()}
    for f in out.defined_functions():
        assert prov.origins_of(f.name) and prov.origins_of(f.name) <= ori


def test_pools_follow_the_mode(prog):
    _, fi, _ = obfuscate(prog, ObfuscationConfig("fission_only", 1))
    for mode, allowed in (("fufi_sep", {"sepFunc"}), ("fufi_ori", {"unchanged"}),
                          ("fufi_all", {"sepFunc", "unchanged"})):
        _, prov, _ = obfuscate(prog, ObfuscationConfig(mode, 1))
        fused = [n for n, r in prov.role.items() if r == "fusFunc"]
        assert fused
        for n in fused:
            parts = [(x, y) for x in fi.role for y in fi.role if f"{x}.{y}.fus" == n]
            assert len(parts) == 1
            assert {fi.role[x] for x in parts[0]} <= allowed


def test_fufi_sep_fuses_only_sep_functions(prog):
    out, prov, report = obfuscate(prog, ObfuscationConfig("fufi_sep", 1))
    for f in out.defined_functions():
        if prov.role[f.name] == "fusFunc":
            assert ".sep" in f.name
    assert report.fusion.eligible == report.fission.sep_funcs


def test_same_seed_same_output(prog):
    a = obfuscate(prog, ObfuscationConfig("fufi_all", 11))
    b = obfuscate(prog, ObfuscationConfig("fufi_all", 11))
    assert print_module(a[0]) == print_module(b[0])
    assert a[1].to_json(11, "fufi_all") == b[1].to_json(11, "fufi_all")


def test_provenance_compose():
    first = ProvenanceMap.identity(["a", "b"])
    first.set("a", {"a"}, "remFunc")
    first.set("a.sep1", {"a"}, "sepFunc")
    later = ProvenanceMap.identity(["a", "b"])
    later.set("a.sep1.b.fus", {"a.sep1", "b"}, "fusFunc")
    out = first.compose(later)
    assert out.origins == {"a": {"a"}, "b": {"b"}, "a.sep1.b.fus": {"a", "b"}}
    assert out.role == {"a": "remFunc", "b": "unchanged", "a.sep1.b.fus": "fusFunc"}


def test_provenance_json_round_trip():
    p = ProvenanceMap.identity(["x"])
    p.set("y", {"x", "z"}, "fusFunc")
    doc = json.loads(p.to_json(4, "fusion_only"))
    assert doc["seed"] == 4 and doc["functions"]["y"]["origins"] == ["x", "z"]
    assert ProvenanceMap.from_json(p.to_json(4, "fusion_only")) == p


def test_bad_mode_rejected():
    with pytest.raises(ValueError):
        ObfuscationConfig("everything")


def test_config_from_dict_round_trip():
    cfg = ObfuscationConfig("fufi_ori", 5)
    cfg.fission.min_effect = 3
    cfg.fusion.deep = False
    assert ObfuscationConfig.from_dict(cfg.to_dict()) == cfg


def test_metrics_on_cal_file():
    r = separate_pass_stats(samples.cal_file(), 0)
    t = r.metrics()
    assert (t["Fission Ratio"], t["#BB"]) == (2.0, 3.0)
    assert t["RR"] == pytest.approx(2 / 3)
    # a lone function has nothing to fuse with
    assert t["Fusion Ratio"] == 0.0


def test_merge_pools_counts():
    a = separate_pass_stats(samples.cal_file(), 0)
    b = separate_pass_stats(samples.bar_foo(), 0)
    total = StatsReport.merge([a, b], "separate")
    assert total.fission.ori_funcs == a.fission.ori_funcs + b.fission.ori_funcs
    assert total.fusion.fused == a.fusion.fused + b.fusion.fused
    assert total.fission.sep_blocks == a.fission.sep_blocks + b.fission.sep_blocks


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(MODES))
def test_random_programs_all_modes(seed, mode):
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=seed, n_functions=5))
    out, _, report = obfuscate(m, ObfuscationConfig(mode, seed))
    for args in corpus_gen.generate_inputs(m, "main", 4, seed):
        res, viol = run_checked(out, "main", args, checks=report.checks())
        assert res.observable() == run(m, "main", args).observable() and viol == []
