import random
from itertools import product

import pytest

from sharing_analysis import bdd
from sharing_analysis import groundness_pos as P
from sharing_analysis.groundness_pos import PosFormula
from sharing_analysis.kernel_terms import read_binding

VI = "xyz"


def f(text, vi=VI):
    return PosFormula.parse(text, vi)


def same(a, b):
    return P.pos_leq(a, b) and P.pos_leq(b, a)


def truth_table(phi):
    n = len(phi.vi)
    return {m for m in range(1 << n) if phi.is_model(m)}


def test_pos_amgu_examples():
    t = PosFormula.true(VI)
    assert same(P.pos_amgu(t, read_binding("x = f(y, z)", VI)), f("x <-> y & z"))
    assert same(P.pos_amgu(t, read_binding("x = a", VI)), f("x"))
    assert same(P.pos_amgu(t, read_binding("x = f(x, y)", VI)), f("x <-> y"))


def test_ground_vars_project_lub():
    assert P.ground_vars(f("x & (y <-> z)")) == {"x"}
    lub = P.pos_lub(f("x"), f("y"))
    assert same(lub, f("x \\/ y"))
    assert P.ground_vars(lub) == frozenset()
    assert same(P.pos_project(f("x <-> y"), ["y"]), PosFormula.true(VI))


def test_binary_disjunction():
    assert P.entails_binary_disjunction(f("x \\/ y"), "x", "y")
    assert not P.entails_binary_disjunction(PosFormula.true(VI), "x", "y")
    assert P.entails_binary_disjunction(f("x"), "x", "y")


def test_ground_equivalence_classes():
    classes = P.ground_equiv_classes(f("(x <-> y) & z", "wxyz"))
    assert sorted(map(sorted, classes)) == [["w"], ["x", "y"], ["z"]]
    assert sorted(map(sorted, P.ground_equiv_classes(PosFormula.true(VI)))) == [["x"], ["y"], ["z"]]
    assert P.ground_equiv_classes(f("x <-> y <-> z")) == [frozenset(VI)]


def test_models():
    assert P.models(f("x <-> y <-> z")) == {frozenset(), frozenset(VI)}
    assert P.models(PosFormula.true("x")) == {frozenset(), frozenset("x")}
    assert P.models(f("x", "xy")) == {frozenset("x"), frozenset("xy")}
    with pytest.raises(P.ModelBoundExceeded):
        P.model_masks(PosFormula.true([f"v{i}" for i in range(30)]))


def random_formula(rng, vi, steps=3):
    phi = PosFormula.true(vi)
    for _ in range(steps):
        x = rng.choice(vi)
        t = "f(" + ",".join(rng.sample(vi, rng.randint(0, 2))) + ")"
        if t == "f()":
            t = "a"
        b = read_binding(f"{x} = {t}", vi)
        if rng.random() < 0.3:
            phi = P.pos_lub(phi, P.pos_amgu(PosFormula.true(vi), b))
        else:
            phi = P.pos_amgu(phi, b)
    return phi


def test_positivity_is_preserved():
    rng = random.Random(1)
    vi = tuple("vwxyz")
    full = (1 << len(vi)) - 1
    for _ in range(200):
        phi = random_formula(rng, vi)
        assert phi.is_model(full)
        assert P.pos_project(phi, rng.sample(vi, 2)).is_model(full)


def test_strengthening_keeps_ground_variables():
    rng = random.Random(2)
    vi = tuple("vwxyz")
    for _ in range(200):
        weak = random_formula(rng, vi)
        strong = P.pos_conj(weak, random_formula(rng, vi))
        b = read_binding(f"{rng.choice(vi)} = g({rng.choice(vi)})", vi)
        b = b if b.lhs not in b.rhs_vars else read_binding(f"{b.lhs} = a", vi)
        assert P.ground_vars(P.pos_amgu(weak, b)) <= P.ground_vars(P.pos_amgu(strong, b))


def test_projection_is_a_consequence_without_the_variables():
    rng = random.Random(3)
    vi = tuple("vwxyz")
    for _ in range(200):
        phi = random_formula(rng, vi)
        gone = rng.sample(vi, 2)
        proj = P.pos_project(phi, gone)
        assert P.pos_leq(phi, proj)
        levels = {vi.index(v) for v in gone}
        assert not (bdd.support(proj.node) & levels)


def test_equivalence_classes_refine_ground_variables():
    rng = random.Random(4)
    vi = tuple("vwxyz")
    for _ in range(200):
        phi = random_formula(rng, vi)
        ground = P.ground_vars(phi)
        for cls in P.ground_equiv_classes(phi):
            assert cls <= ground or not (cls & ground)


def test_bdd_matches_truth_tables():
    rng = random.Random(5)
    for _ in range(200):
        a = random_formula(rng, tuple("xyz"))
        b = random_formula(rng, tuple("xyz"))
        ta, tb = truth_table(a), truth_table(b)
        assert truth_table(P.pos_conj(a, b)) == ta & tb
        assert truth_table(P.pos_lub(a, b)) == ta | tb
        assert P.pos_leq(a, b) == (ta <= tb)
        assert bdd.count_models(a.node, 3) == len(ta)


def test_extend_restrict_rename():
    a = f("x <-> y", "xy")
    b = f("z", "z")
    ab = P.extend(a, b)
    assert ab.vi == ("x", "y", "z")
    assert same(ab, f("(x <-> y) & z"))
    r = P.restrict(ab, ["y", "z"])
    assert r.vi == ("y", "z")
    assert same(r, f("z", "yz"))
    renamed = P.rename(a, {"x": "p", "y": "q"})
    assert same(renamed, f("p <-> q", "pq"))


def test_exists_matches_shannon_expansion():
    rng = random.Random(6)
    for _ in range(100):
        phi = random_formula(rng, tuple("xyz"))
        proj = P.pos_project(phi, ["y"])
        for bits in product([0, 1], repeat=3):
            m = bits[0] | bits[1] << 1 | bits[2] << 2
            expect = phi.is_model(m | 2) or phi.is_model(m & ~2)
            assert proj.is_model(m) == expect
