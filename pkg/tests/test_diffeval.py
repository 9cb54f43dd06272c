import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitmerge import ObfuscationConfig, corpus_gen, obfuscate, samples
from splitmerge.diffeval import (
    FunctionFeatures,
    MatchReport,
    cosine,
    diff_modules,
    extract_features,
    match,
    opcode_distance,
    precision_at_1,
    report_json,
    report_table,
    similarity,
)
from splitmerge.provenance import ProvenanceMap
from splitmerge.text import parse_module, print_module


def test_features_of_cal_file():
    f = extract_features(samples.cal_file())["cal_file"]
    assert f.n_blocks == 9
    assert f.n_edges == 2 + 1 + 2 + 2 + 1 + 2 + 2 + 1  # b1..b8 out-degrees
    assert f.n_calls == 0 and f.cg_in_degree == 0 and f.cg_out_degree == 0
    assert f.opcode_histogram["print"] == 2 and f.opcode_histogram["condbr"] == 5


def test_call_graph_degrees():
    feats = extract_features(samples.bar_foo())
    assert (feats["main"].cg_out_degree, feats["main"].n_calls) == (2, 2)
    assert feats["bar"].cg_in_degree == feats["foo"].cg_in_degree == 1


def test_similarity_bounds():
    a = FunctionFeatures(3, 3, 1, 10, {"add": 4, "ret": 1}, 1, 1)
    assert similarity(a, a) == pytest.approx(1.0)
    b = FunctionFeatures(0, 0, 0, 0, {}, 0, 0)
    assert 0.0 <= similarity(a, b) < 0.5
    assert cosine({}, {}) == 1.0 and cosine({"a": 1}, {}) == 0.0


def test_identity_diff_is_perfect():
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=2, n_functions=6))
    rep = diff_modules(m, m, ProvenanceMap.identity(f.name for f in m.defined_functions()))
    assert rep.precision_at_1 == 1.0
    assert set(rep.per_function_rank.values()) == {1}


def test_renaming_does_not_matter():
    m = samples.bar_foo()
    text = print_module(m).replace("@bar", "@q1").replace("@foo", "@q2")
    renamed = parse_module(text)
    prov = ProvenanceMap()
    for a, b in (("bar", "q1"), ("foo", "q2"), ("main", "main")):
        prov.set(b, {a}, "unchanged")
    assert diff_modules(m, renamed, prov).precision_at_1 == 1.0


def test_precision_counts_fused_partner_as_hit():
    rep = MatchReport(matches=[("a", "a.b.fus", 0.9), ("b", "c", 0.5)])
    prov = ProvenanceMap()
    prov.set("a.b.fus", {"a", "b"}, "fusFunc")
    prov.set("c", {"c"}, "unchanged")
    assert precision_at_1(rep, prov, ["a", "b"]) == 0.5
    # originals left unmatched count as misses
    assert precision_at_1(rep, prov, ["a", "b", "z"]) == pytest.approx(1 / 3)


def test_match_is_greedy_by_similarity():
    x = FunctionFeatures(5, 5, 0, 20, {"add": 10}, 0, 0)
    y = FunctionFeatures(1, 0, 0, 2, {"ret": 1}, 0, 0)
    rep = match({"p": x, "q": y}, {"s": y, "t": x})
    assert rep.partner() == {"p": "t", "q": "s"}
    # without provenance the true counterpart is the same name, which is absent here
    assert rep.per_function_rank == {"p": None, "q": None}


def test_any_descendant_counts():
    m = samples.cal_file()
    out, prov, _ = obfuscate(m, ObfuscationConfig("fission_only", 0))
    rep = diff_modules(m, out, prov)
    # the loop body outweighs the remnant, and a sepFunc still descends from cal_file
    assert rep.matches[0][:2] == ("cal_file", "cal_file.sep2")
    assert rep.precision_at_1 == 1.0 and rep.per_function_rank["cal_file"] == 1


def test_opcode_distance_scaling():
    m = samples.cal_file()
    assert opcode_distance(m, [m]) == [0.0]
    fi = obfuscate(m, ObfuscationConfig("fission_only", 0))[0]
    d = opcode_distance(m, [m, fi])
    assert d == [0.0, 1.0]
    with pytest.raises(ValueError):
        opcode_distance(m, [])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**5))
def test_identity_always_perfect(seed):
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=seed, n_functions=4))
    out, prov, _ = obfuscate(m, ObfuscationConfig("identity", seed))
    assert diff_modules(m, out, prov).precision_at_1 == 1.0


def test_report_formats():
    m = samples.bar_foo()
    out, prov, _ = obfuscate(m, ObfuscationConfig("fusion_only", 0))
    rep = diff_modules(m, out, prov)
    doc = json.loads(report_json(rep, [0.5]))
    assert set(doc) == {"precision_at_1", "matches", "ranks", "opcode_distances"}
    assert doc["opcode_distances"] == [0.5]
    table = report_table(rep, [0.5])
    assert "Precision@1" in table and "opcode distance[0]: 0.5000" in table
