import random
import warnings

import pytest

from sharing_analysis import enhancements as E
from sharing_analysis import mode_domains as M
from sharing_analysis import set_sharing as S
from sharing_analysis.mode_domains import SflElement
from sharing_analysis.concrete_oracle import alpha, random_case
from sharing_analysis.groundness_pos import PosFormula
from sharing_analysis.set_sharing import SharingSet
from sharing_analysis.kernel_terms import read_binding

V6 = "uvwxyz"
V5 = "vwxyz"
V4 = "wxyz"


def sfl(text, vi):
    return SflElement.parse(text, vi)


def bindings(texts, vi):
    return [read_binding(t, vi) for t in texts]


# -- grounding bindings ------------------------------------------------------


def test_is_grounding():
    assert E.is_grounding(SharingSet.parse("{xy}", "xy"), read_binding("x = a", "xy"))
    assert E.is_grounding(SharingSet.parse("{y}", "xy"), read_binding("x = y", "xy"))
    d = SharingSet.parse("{vy, wy, xy, yz}", V6)
    assert not any(E.is_grounding(d, b) for b in bindings(["v = w", "x = y"], V6))


def test_partition_keeps_relative_order():
    d = SharingSet.parse("{vy, wy, xy, yz}", V6)
    bs = bindings(["v = w", "u = a", "x = y", "z = b"], V6)
    yes, no = E.partition_grounding(d, bs)
    assert [str(b) for b in yes] == ["u = a", "z = b"]
    assert [str(b) for b in no] == ["v = w", "x = y"]


# -- groundness from Pos ---------------------------------------------------


def test_apply_groundness():
    d = sfl("<{xy, z}, {}, {}>", "xyz")
    out = E.apply_groundness(PosFormula.parse("x", "xyz"), d)
    assert out.sh == sfl("<{z}, {}, {}>", "xyz").sh
    assert out.l == d.index.mask("xy")
    assert out.f == d.f
    assert E.apply_groundness(PosFormula.true("xyz"), d) == d
    everything = E.apply_groundness(PosFormula.parse("x & y & z", "xyz"), d)
    assert everything.sh == frozenset() and everything.l == d.all


def test_reduce_examples():
    phi = PosFormula.parse("x <-> y <-> z", "xyz")
    full = SharingSet.parse("{xy, xz, yz, xyz}", "xyz")
    red = SharingSet.parse("{xy, xz, yz}", "xyz")
    assert E.reduce_product(phi, full) == SharingSet.parse("{xyz}", "xyz")
    assert E.reduce_product(phi, red) == SharingSet.parse("{}", "xyz")
    # the two inputs are rho-equivalent but the outputs are not
    assert S.rho_eq(full.groups, red.groups)
    assert E.reduce_product(PosFormula.true("xyz"), full) == full


def test_reduce_never_adds_and_is_idempotent():
    rng = random.Random(4)
    vi = tuple("vwxyz")
    for _ in range(300):
        sh = frozenset(rng.randint(1, 31) for _ in range(rng.randint(0, 10)))
        x, y = rng.sample(vi, 2)
        phi = PosFormula.parse(f"{x} <-> {y}", vi)
        once = E.reduce_groups(phi, sh)
        assert once <= sh
        assert E.reduce_groups(phi, once) == once


# -- binding ordering --------------------------------------------------------


def test_star_delay_prefers_fewer_star_unions():
    d = sfl("<{vw, wx, wy, z}, {}, {u, v, x, y}>", V6)
    bs = bindings(["v = w", "x = z"], V6)
    assert E.star_count(d, bs[0]) == 2
    assert E.star_count(d, bs[1]) == 1
    out = E.order_bindings("stardelay", d, bs)
    assert [str(b) for b in out] == ["x = z", "v = w"]


def test_star_delay_can_lose_independence():
    d = sfl("<{u, uw, v, w, xy, xz}, {u, x}, {u, x}>", V6)
    bs = bindings(["u = x", "v = w"], V6)
    out = E.order_bindings("stardelay", d, bs)
    assert [str(b) for b in out] == ["u = x", "v = w"]
    d12 = M.amgu_sfl(M.amgu_sfl(d, bs[0]), bs[1])
    d21 = M.amgu_sfl(M.amgu_sfl(d, bs[1]), bs[0])
    assert d12 == sfl("<{uvwxy, uvwxyz, uvwxz, uxy, uxz, vw}, {}, {}>", V6)
    assert d21 == sfl("<{uvwxy, uvwxz, uxy, uxz, vw}, {}, {}>", V6)
    yz = d.index.mask("yz")
    assert any(s & yz == yz for s in d12.sh)
    assert not any(s & yz == yz for s in d21.sh)
    # counting free and linear variables picks the same order
    assert E.order_bindings("freelin", d, bs) == out


def test_textual_and_reverse():
    d = sfl("<{vy, wy, xy, yz}, {}, {u, x, z}>", V6)
    bs = bindings(["v = w", "x = y"], V6)
    assert E.order_bindings("textual", d, bs) == bs
    assert E.order_bindings("reverse", d, bs) == bs[::-1]
    for s in E.OrderingStrategy:
        assert E.order_bindings(s, d, bs[:1]) == bs[:1]


def test_order_is_a_permutation_with_grounding_first():
    rng = random.Random(8)
    vi = tuple("uvwxyz")
    for _ in range(200):
        d = SflElement(vi, frozenset(rng.randint(1, 63) for _ in range(6)), 0, rng.randint(0, 63))
        d = M.canonical(d)
        bs = []
        for _ in range(rng.randint(1, 4)):
            x = rng.choice(vi)
            rhs = rng.choice(["a", "f(" + rng.choice(vi) + ")", rng.choice(vi)])
            if rhs != x:
                bs.append(read_binding(f"{x} = {rhs}", vi))
        for s in E.OrderingStrategy:
            out = E.order_bindings(s, d, bs)
            assert sorted(map(str, out)) == sorted(map(str, bs))
            first, _ = E.partition_grounding(d, bs)
            assert out[: len(first)] == first


# -- improved linearity ------------------------------------------------------


def test_klin_example():
    d = sfl("<{vx, wx, y, z}, {v, w, y}, {v, w, x, y}>", V5)
    b = read_binding("x = f(y, z)", V5)
    k = E.amgu_klin(d, b)
    plain = M.amgu_sfl(d, b)
    assert k == sfl("<{vwxz, vxy, vxz, wxy, wxz}, {}, {y}>", V5)
    assert plain == sfl("<{vwxy, vwxz, vxy, vxz, wxy, wxz}, {}, {y}>", V5)
    assert k.sh < plain.sh


def test_klin_pair_independence_after_grounding_z():
    d = sfl("<{vx, wx, y, z}, {v, w, y}, {v, w, x, y}>", V5)
    b = read_binding("x = f(y, z)", V5)
    g = read_binding("z = a", V5)
    vw = d.index.mask("vw")
    k = M.amgu_sfl(E.amgu_klin(d, b), g)
    plain = M.amgu_sfl(M.amgu_sfl(d, b), g)
    assert not any(s & vw == vw for s in k.sh)
    assert any(s & vw == vw for s in plain.sh)


def test_klin_falls_back_when_x_is_free():
    d = sfl("<{vx, wx, y, z}, {v, w, x, y}, {v, w, x, y}>", V5)
    b = read_binding("x = f(y, z)", V5)
    assert not E.klin_applies(d, b)
    assert E.amgu_klin(d, b) == M.amgu_sfl(d, b)


def test_klin_refines_sfl_on_random_inputs():
    rng = random.Random(12)
    for _ in range(1000):
        vi, sigmas, b = random_case(rng, max_vi=5)
        d = alpha(sigmas, vi)
        assert E.amgu_klin(d, b).sh <= M.amgu_sfl(d, b).sh


# -- splitting on free variables --------------------------------------------

FULL = "<{w, x, xy, xyz, xz, y, yz, z}, {w, x, y, z}, {w, x, y, z}>"
REDUCED = "<{w, x, xy, xz, y, yz, z}, {w, x, y, z}, {w, x, y, z}>"
C1_4 = ["{w, x, y, z}", "{w, x, yz}", "{w, xz, y}", "{w, xy, z}"]


def groups_of(text):
    return SharingSet.parse(text, V4).groups


def test_free_decompose_reduced():
    parts = E.free_decompose(sfl(REDUCED, V4))
    assert {p.sh for p in parts} == {groups_of(c) for c in C1_4}
    assert len(parts) == 4


def test_free_decompose_full():
    parts = E.free_decompose(sfl(FULL, V4))
    assert {p.sh for p in parts} == {groups_of(c) for c in C1_4 + ["{w, xyz}"]}


def test_free_decompose_without_free_variables():
    d = sfl("<{wx, xy, z}, {}, {w}>", V4)
    assert E.free_decompose(d) == [d]


def test_free_split_needs_the_full_representation():
    b = read_binding("x = f(y, w)", V4)
    z = sfl(FULL, V4).index.bit("z")
    full = E.amgu_free_split(sfl(FULL, V4), b)
    red = E.amgu_free_split(sfl(REDUCED, V4), b)
    assert full.l == sfl(FULL, V4).index.mask("w")
    assert red.l == sfl(FULL, V4).index.mask("wz")
    assert not full.l & z


def test_free_decompose_components_cover():
    rng = random.Random(14)
    for _ in range(300):
        vi, sigmas, _ = random_case(rng, max_vi=4)
        d = alpha(sigmas, vi)
        parts = E.free_decompose(d)
        assert frozenset().union(*(p.sh for p in parts)) == d.sh
        fv = d.f & S.vars_of(d.sh)
        for p in parts:
            for v in S.bits(fv):
                assert sum(1 for s in p.sh if s & v) == 1


def test_free_split_refines_sfl():
    rng = random.Random(15)
    for _ in range(500):
        vi, sigmas, b = random_case(rng, max_vi=4)
        d = alpha(sigmas, vi)
        assert M.sfl_leq(E.amgu_free_split(d, b), M.amgu_sfl(d, b))


def test_free_split_bound_falls_back():
    d = sfl(FULL, V4)
    b = read_binding("x = f(y, w)", V4)
    with pytest.warns(E.EnhancementSkipped):
        out = E.amgu_free_split(d, b, bound=2)
    assert out == M.amgu_sfl(d, b)


# -- compoundness -----------------------------------------------------------


def test_compound_first_example():
    d = sfl("<{wx, xy, xz, y, z}, {x}, {w, x, y, z}>", V4)
    b = read_binding("x = f(y, z)", V4)
    r = E.compound_reduce(d, b, occurs_check=True)
    assert r.sh == groups_of("{wx, y, z}")
    out = M.amgu_sfl(r, b)
    assert out.sh == groups_of("{wxy, wxz}")
    assert out.l == d.all


def test_compound_declared_variable():
    d = sfl("<{wx, xyz, y}, {x}, {w, x, y, z}>", V4)
    b = read_binding("x = y", V4)
    r = E.compound_reduce(d, b, compound={"y"}, occurs_check=True)
    assert r.sh == groups_of("{wx, y}")
    out = M.amgu_sfl(r, b)
    assert out.sh == groups_of("{wxy}")
    assert out.l == d.all
    # without the compoundness fact nothing is removed
    assert E.compound_reduce(d, b, occurs_check=True) == d


def test_compound_detects_failure():
    d = sfl("<{wxy, wxz, x, y, z}, {w, x}, {w, x, y, z}>", V4)
    b = read_binding("x = f(y, z)", V4)
    assert E.compound_reduce(d, b, occurs_check=True) is E.BOTTOM


def test_compound_needs_occurs_check():
    d = sfl("<{wx, xy, xz, y, z}, {x}, {w, x, y, z}>", V4)
    b = read_binding("x = f(y, z)", V4)
    with pytest.warns(E.EnhancementSkipped):
        assert E.compound_reduce(d, b) == d


def test_compound_reduce_is_sound_with_occurs_check():
    from sharing_analysis.concrete_oracle import soundness_check

    rng = random.Random(16)

    def amgu(d, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = E.compound_reduce(d, b, occurs_check=True)
        if r is E.BOTTOM:
            return SflElement.bottom(d.vi)
        return M.amgu_sfl(r, b)

    for _ in range(500):
        vi, sigmas, b = random_case(rng, max_vi=4)
        assert soundness_check(sigmas, b, amgu, vi)
