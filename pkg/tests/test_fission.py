import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cfg_module, random_cfg
from oracles import region_selection
from splitmerge import corpus_gen, samples
from splitmerge.analysis import block_frequency, dominator_tree, loop_info
from splitmerge.config import FissionConfig
from splitmerge.fission import RET_EXIT, compute_exits, identify_regions, region_blockers, run_fission
from splitmerge.interp import Checks, run, run_checked
from splitmerge.text import parse_module, print_module
from splitmerge.validate import validate


def _select(f, trip=10, min_effect=2):
    dt = dominator_tree(f)
    li = loop_info(f, dt, trip)
    fm = block_frequency(f, li, dt)
    return fm, identify_regions(f, dt, li, fm, FissionConfig(min_effect=min_effect, default_trip_count=trip))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 8), st.sampled_from([2, 3, 10]))
def test_selection_matches_exhaustive_oracle(seed, n, trip):
    f = random_cfg(random.Random(seed), n)
    fm, regions = _select(f, trip)
    got = [(r.head, sorted(r.members)) for r in regions]
    assert got == region_selection(f, fm.freq, trip)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 10))
def test_selected_regions_are_disjoint_proper_subtrees(seed, n):
    f = random_cfg(random.Random(seed), n)
    _, regions = _select(f)
    seen = set()
    for r in regions:
        assert f.blocks[0].label not in r.members
        assert len(r.members) >= 2
        assert not seen & set(r.members)
        seen |= set(r.members)


def test_cal_file_worked_example():
    m = samples.cal_file()
    out, prov, stats = run_fission(m)
    assert validate(out) == []
    sep1, sep2 = out.function("cal_file.sep1"), out.function("cal_file.sep2")
    assert sep1.labels()[:2] == ["b2", "b3"] and len(sep1.blocks) == 2 + 2
    assert sep2.labels()[:4] == ["b5", "b6", "b7", "b8"]
    assert stats.exit_counts == {"cal_file.sep1": 2}
    assert stats.to_dict() == {"Fission Ratio": 2.0, "#BB": 3.0, "RR": pytest.approx(2 / 3)}
    assert prov.role == {"cal_file": "remFunc", "cal_file.sep1": "sepFunc", "cal_file.sep2": "sepFunc"}
    # the input module is not touched
    assert print_module(m) == print_module(samples.cal_file())


def test_cal_file_exits_are_numbered_in_block_order():
    f = samples.cal_file().function("cal_file")
    assert compute_exits(f, {"b2", "b3"}) == [("b3", "b5"), ("b3", "b9")]
    assert compute_exits(f, {"b9"}) == [("b9", RET_EXIT)]


@pytest.mark.parametrize("args", [[0, 2], [0, -1], [7, 2], [7, 0], [150, 3], [3, 4]])
def test_cal_file_behaviour_preserved(args):
    m = samples.cal_file()
    out, _, stats = run_fission(m)
    res, viol = run_checked(out, "cal_file", args, checks=Checks(exit_ranges=stats.exit_counts))
    assert res.observable() == run(m, "cal_file", args).observable()
    assert viol == []


SETJMP_REGION = """module s
func @f(%c: i1) -> i32 {
  slot %jb: ptr
a:
  condbr %c, b, d
b:
  %p = slot_addr %jb
  %r = setjmp %p
  br c
c:
  print i32 1
  ret 2
d:
  ret 0
}
"""


def test_setjmp_blocks_region():
    f = parse_module(SETJMP_REGION).function("f")
    assert region_blockers(f, {"b", "c"}) == "setjmp call-site"
    assert region_blockers(f, {"c"}) is None
    assert all("b" not in r.members for r in _select(f)[1])


THROW_REGION = """module w
func @f(%x: i32) -> i32 {
entry:
  %c = icmp slt i32 %x, 0
  condbr %c, t, done
t:
  may_throw %c, h
  br done
h:
  ret 1
done:
  ret 0
}
"""


def test_may_throw_handler_must_be_inside():
    f = parse_module(THROW_REGION).function("f")
    assert region_blockers(f, {"t", "done"}) == "may_throw handler outside region"
    assert region_blockers(f, {"t", "h", "done"}) is None


def test_min_effect_drops_single_blocks():
    f = random_cfg(random.Random(11), 6)
    _, big = _select(f, min_effect=3)
    assert all(len(r.members) >= 3 for r in big)


def test_function_with_one_block_untouched():
    m = cfg_module(random_cfg(random.Random(0), 1))
    out, prov, stats = run_fission(m)
    assert print_module(out) == print_module(m)
    assert stats.sep_funcs == 0 and prov.role == {"f": "unchanged"}


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_generated_programs_preserved_by_fission(seed):
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=seed, n_functions=4))
    out, _, stats = run_fission(m)
    assert validate(out) == []
    checks = Checks(exit_ranges=stats.exit_counts)
    for args in corpus_gen.generate_inputs(m, "main", 5, seed):
        res, viol = run_checked(out, "main", args, checks=checks)
        assert res.observable() == run(m, "main", args).observable()
        assert viol == []


def test_fission_is_deterministic():
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=3, n_functions=5))
    assert print_module(run_fission(m)[0]) == print_module(run_fission(m)[0])
