import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cfg_module, random_cfg
from oracles import dominator_sets, idoms, natural_loops
from splitmerge import corpus_gen, samples
from splitmerge.analysis import (
    block_frequency,
    constant_globals,
    dominator_tree,
    escape_set,
    innocuous_blocks,
    loop_info,
    reverse_postorder,
)
from splitmerge.text import parse_module

cfgs = st.builds(lambda seed, n: random_cfg(random.Random(seed), n),
                 st.integers(0, 2**32), st.integers(1, 12))


@settings(max_examples=150, deadline=None)
@given(cfgs)
def test_dominator_tree_matches_deletion_oracle(f):
    dt = dominator_tree(f)
    assert dt.parent == idoms(f)
    dom = dominator_sets(f)
    for b in dom:
        for d in dom:
            assert dt.dominates(d, b) == (d in dom[b])


@settings(max_examples=100, deadline=None)
@given(cfgs)
def test_subtree_is_dominated_set(f):
    dt = dominator_tree(f)
    dom = dominator_sets(f)
    for h in dom:
        assert set(dt.subtree(h)) == {b for b in dom if h in dom[b]}


@settings(max_examples=100, deadline=None)
@given(cfgs)
def test_natural_loops_match_oracle(f):
    li = loop_info(f, dominator_tree(f))
    assert {lp.header: set(lp.body) for lp in li.loops} == natural_loops(f)


@given(cfgs)
def test_rpo_starts_at_entry_and_covers_reachable(f):
    order = reverse_postorder(f)
    assert order[0] == f.blocks[0].label
    assert set(order) == set(dominator_sets(f))


def test_cal_file_dominators():
    f = samples.cal_file().function("cal_file")
    dt = dominator_tree(f)
    assert dt.parent == {"b2": "b1", "b3": "b2", "b4": "b1", "b5": "b1",
                         "b6": "b5", "b7": "b6", "b8": "b7", "b9": "b1"}
    li = loop_info(f, dt)
    assert [(lp.header, set(lp.body)) for lp in li.loops] == [("b6", {"b6", "b7", "b8"})]


def test_straight_line_frequencies_are_one():
    f = random_cfg(random.Random(0), 1)
    fm = block_frequency(f, loop_info(f, dominator_tree(f)))
    assert fm.freq == {"b0": 1}


def test_diamond_splits_mass():
    text = """module m
func @f(%c: i1) -> void {
a:
  condbr %c, b, c
b:
  br d
c:
  br d
d:
  ret
}
"""
    f = parse_module(text).function("f")
    fm = block_frequency(f, loop_info(f, dominator_tree(f)))
    assert fm.freq == {"a": 1, "b": Fraction(1, 2), "c": Fraction(1, 2), "d": 1}


def test_loop_header_scaled_by_trip_count():
    f = samples.cal_file().function("cal_file")
    dt = dominator_tree(f)
    li = loop_info(f, dt, default_trip=10)
    fm = block_frequency(f, li, dt)
    # b5 gets a quarter through b3 and a quarter through b4
    assert fm.freq["b5"] == Fraction(1, 2)
    assert fm.freq["b6"] == Fraction(1, 2) * 10
    assert fm.freq["b9"] == 1


def test_counted_loop_trip_count():
    # main holds a for-loop (i < 3, i from 0) and a while-loop that may exit early;
    # only the first is recognized, the other falls back to the default
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=4, n_functions=3))
    f = m.function("main")
    loops = loop_info(f, dominator_tree(f)).loops
    assert sorted((lp.counted, lp.trip_count) for lp in loops) == [(False, 10), (True, 3)]


def test_constant_globals():
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=5, n_functions=6))
    consts = constant_globals(m)
    assert "k0" in consts and "acc" not in consts


def test_escape_set_includes_stored_pointer():
    m = samples.fptr_bar_foo()
    assert escape_set(m) == set()
    m2 = parse_module(samples.FPTR_BAR_FOO.replace(
        "module fptr\n", "module fptr\nglobal @sink: ptr = null\n").replace(
        "  store ptr %f0, %fps\n", "  store ptr %f0, %fps\n  store ptr %f0, @sink\n"))
    assert "foo" in escape_set(m2)


def test_innocuous_blocks_exclude_prints():
    m = samples.cal_file()
    f = m.function("cal_file")
    inn = innocuous_blocks(m, f)
    assert "b2" not in inn and "b8" not in inn  # both print
    assert {"b4", "b6"} <= inn


def test_random_cfgs_validate():
    from splitmerge.validate import validate
    for seed in range(50):
        assert validate(cfg_module(random_cfg(random.Random(seed), 1 + seed % 12))) == []
