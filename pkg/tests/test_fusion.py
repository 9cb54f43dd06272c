import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import max_compatible_matching
from splitmerge import corpus_gen, samples
from splitmerge.analysis import escape_set, innocuous_blocks
from splitmerge.config import FusionConfig
from splitmerge.fusion import (
    TAG_CTRL,
    TAG_FUSED,
    can_pair,
    compress_params,
    decode_tag,
    direct_call_edges,
    encode_tag,
    fuse_pair,
    greedy_matching,
    make_pair,
    max_matching,
    run_fusion,
    select_pairs,
    type_compatible,
)
from splitmerge.interp import Checks, run, run_checked
from splitmerge.ir import Function
from splitmerge.text import parse_module, print_module
from splitmerge.validate import validate

TYPES = ["i1", "i8", "i16", "i32", "i64", "f32", "f64", "ptr"]
params = st.lists(st.sampled_from(TYPES), max_size=6)


def fn(name, types, ret="void"):
    return Function(name, [(f"p{k}", t) for k, t in enumerate(types)], ret, False, [], [])


@given(st.integers(0, 1 << 40), st.sampled_from([0, 1]))
def test_tag_round_trip(k, ctrl):
    addr = k * 16
    bits = encode_tag(addr, ctrl)
    assert bits & TAG_FUSED and bool(bits & TAG_CTRL) == bool(ctrl)
    assert decode_tag(bits) == (addr, ctrl)


def test_untagged_and_unaligned():
    assert decode_tag(48) == (48, None)
    with pytest.raises(ValueError):
        encode_tag(40, 1)


@pytest.mark.parametrize("a,b,merged", [
    ("i16", "i32", "i32"), ("f32", "f64", "f64"), ("ptr", "ptr", "ptr"),
    ("i32", "f32", None), ("ptr", "i64", None),
])
def test_type_compatible(a, b, merged):
    assert type_compatible(a, b) == merged == type_compatible(b, a)


def test_void_return_merges_with_anything():
    assert type_compatible("void", "f64", returns=True) == "f64"
    assert type_compatible("void", "f64") is None


@settings(max_examples=300)
@given(params, params)
def test_compression_is_maximal(lt, rt):
    merged, _, _ = compress_params(fn("a", lt), fn("b", rt))
    shared = sum(1 for _, i, j in merged if i is not None and j is not None)
    assert shared == max_compatible_matching(lt, rt)
    assert len(greedy_matching(lt, rt)) <= shared


@given(params, params)
def test_every_parameter_lands_once(lt, rt):
    merged, _, _ = compress_params(fn("a", lt), fn("b", rt))
    assert sorted(i for _, i, _ in merged if i is not None) == list(range(len(lt)))
    assert sorted(j for _, _, j in merged if j is not None) == list(range(len(rt)))
    for ty, i, j in merged:
        for side, k in ((lt, i), (rt, j)):
            if k is not None:
                assert type_compatible(side[k], ty) == ty


def test_first_fit_can_miss_the_maximum():
    # first-fit spends the ptr on the last slot and strands both i32s
    lt, rt = ["ptr", "i32", "i32"], ["i32", "i32", "ptr"]
    assert len(greedy_matching(lt, rt)) == 1
    assert max_matching(lt, rt) == [(1, 0), (2, 1)]


def test_bar_foo_compression():
    m = samples.bar_foo()
    p = make_pair(m.function("bar"), m.function("foo"))
    assert p.merged_params == [("i32", 0, 0), ("i64", 1, None), ("ptr", None, 1)]
    assert p.merged_return == "i32" and p.compressed() == 1


def test_bar_foo_fused_program():
    m = samples.bar_foo()
    out, prov, stats = run_fusion(m, lambda _m: {"bar", "foo"})
    assert validate(out) == []
    fus = out.function("bar.foo.fus")
    assert [t for _, t in fus.params] == ["i1", "i32", "i64", "ptr"]
    assert fus.params[0][0] == "ctrl"
    assert not out.has_function("bar") and not out.has_function("foo")
    assert prov.origins_of("bar.foo.fus") == {"bar", "foo"}
    assert stats.to_dict()["Fusion Ratio"] == 1.0 and stats.removed_params == [1]
    checks = Checks(deep_blocks=stats.deep_blocks)
    for x in (-40000, -7, 0, 5, 1 << 20):
        res, viol = run_checked(out, "main", [x], checks=checks)
        assert res.observable() == run(m, "main", [x]).observable()
        assert viol == []


def test_deep_merge_shares_one_block():
    out, _, stats = run_fusion(samples.bar_foo(), lambda _m: {"bar", "foo"})
    fus = out.function("bar.foo.fus")
    assert stats.deep_blocks == {"bar.foo.fus": ["deep"]}
    assert fus.block_map()["deep"].term.targets == ["deep.rt", "deep.lt"]
    shallow, _, st2 = run_fusion(samples.bar_foo(), lambda _m: {"bar", "foo"}, FusionConfig(deep=False))
    assert st2.deep_merged == 0 and len(shallow.function("bar.foo.fus").blocks) == 3


def test_address_taken_pair_uses_tags():
    m = samples.fptr_bar_foo()
    funcs = {f.name: f for f in m.functions}
    out = parse_module(samples.FPTR_BAR_FOO)
    info = fuse_pair(out, make_pair(funcs["foo"], funcs["bar"]), escape_set(m))
    assert info.name == "foo.bar.fus" and info.tagged == ["bar", "foo"] and info.trampolines == []
    tags = {ins.args[1].value for ins in out.function("main").instructions() if ins.op == "tag_set"}
    assert tags == {TAG_FUSED, TAG_FUSED | TAG_CTRL}
    assert info.guarded_sites == 1
    assert validate(out) == []
    for x in (-5, 3, 10, 11, 99):
        res, viol = run_checked(out, "main", [x], checks=Checks())
        assert res.observable() == run(m, "main", [x]).observable()
        assert viol == []


def test_exported_function_keeps_a_trampoline():
    m = parse_module(samples.BAR_FOO.replace("export @main", "export @main\nexport @foo"))
    out, prov, stats = run_fusion(m, lambda _m: {"bar", "foo"})
    assert out.has_function("foo") and prov.role["foo"] == "trampoline"
    assert stats.trampolines == 1
    for x in (1, -300):
        assert run(out, "foo", [x, None]).observable() == run(m, "foo", [x, None]).observable()
        assert run(out, "main", [x]).observable() == run(m, "main", [x]).observable()


def test_caller_and_callee_never_pair():
    text = """module c
func @a(%x: i32) -> i32 {
entry:
  %r = call i32 @b(i32 %x)
  ret %r
}
func @b(%x: i32) -> i32 {
entry:
  ret %x
}
"""
    m = parse_module(text)
    assert not can_pair(m.function("a"), m.function("b"), direct_call_edges(m))
    assert select_pairs(m, {"a", "b"}, 0) == []


def _leaves(n):
    body = "".join(f"func @f{i}(%x: i32) -> i32 {{\nentry:\n  %y = add i32 %x, {i}\n  ret %y\n}}\n"
                   for i in range(n))
    return parse_module("module l\n" + body)


@given(st.integers(0, 12), st.integers(0, 1000))
def test_compatible_pool_pairs_everything_but_one(n, seed):
    m = _leaves(n)
    pairs = select_pairs(m, {f"f{i}" for i in range(n)}, seed)
    names = [x for p in pairs for x in (p.left, p.right)]
    assert len(set(names)) == len(names) == n - n % 2


def test_selection_depends_only_on_seed():
    m = _leaves(8)
    pool = {f.name for f in m.functions}
    a = [(p.left, p.right) for p in select_pairs(m, pool, 5)]
    assert a == [(p.left, p.right) for p in select_pairs(m, pool, 5)]


def test_augmentation_rescues_stranded_functions():
    # a calls b, so they cannot pair with each other but each fits c or d
    text = """module g
func @a(%x: i32) -> i32 {
entry:
  %r = call i32 @b(i32 %x)
  ret %r
}
func @b(%x: i32) -> i32 {
entry:
  ret %x
}
func @c(%x: i32) -> i32 {
entry:
  ret 1
}
func @d(%x: i32) -> i32 {
entry:
  ret 2
}
"""
    m = parse_module(text)
    for seed in range(20):
        pairs = select_pairs(m, {"a", "b", "c", "d"}, seed)
        assert len(pairs) == 2


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_generated_programs_preserved_by_fusion(seed):
    m = corpus_gen.generate(corpus_gen.GenSpec(seed=seed, n_functions=5))
    out, _, stats = run_fusion(m, cfg=None, rng_seed=seed)
    assert validate(out) == []
    checks = Checks(deep_blocks=stats.deep_blocks)
    for args in corpus_gen.generate_inputs(m, "main", 5, seed):
        res, viol = run_checked(out, "main", args, checks=checks)
        assert res.observable() == run(m, "main", args).observable()
        assert viol == []


def test_innocuous_counts_recorded():
    m = samples.bar_foo()
    _, _, stats = run_fusion(m, lambda _m: {"bar", "foo"})
    assert stats.innocuous_counts == [len(innocuous_blocks(m, m.function(n))) for n in ("bar", "foo")]
    assert print_module(m) == print_module(samples.bar_foo())
