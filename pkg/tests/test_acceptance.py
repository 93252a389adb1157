"""Acceptance criteria 1 to 11, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import random
import sys
import time
import warnings
from itertools import chain, combinations, product

import pytest

from sharing_analysis import enhancements as E
from sharing_analysis import groundness_pos as P
from sharing_analysis import mode_domains as M
from sharing_analysis import set_sharing as S
from sharing_analysis.concrete_oracle import (
    alpha,
    groundness_models,
    random_case,
    random_klin_case,
    random_term,
    soundness_check,
)
from sharing_analysis.fixpoint_engine import Config, ConfigError, analyze
from sharing_analysis.groundness_pos import PosFormula
from sharing_analysis.kernel_terms import Binding, Const, Struct, Var, parse_program, read_binding
from sharing_analysis.mode_domains import SflElement
from sharing_analysis.precision_harness import CLASSES, compare, corpus_files, corpus_program, measure
from sharing_analysis.set_sharing import SharingSet

V6 = "uvwxyz"
V5 = "vwxyz"
V4 = "wxyz"


def status_line(n, ok, detail):
    return f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def sfl(text, vi):
    return SflElement.parse(text, vi)


def step(d, text, vi=V6):
    return M.amgu_sfl(d, read_binding(text, vi))


def c1():
    d = sfl("<{vy, wy, xy, yz}, {}, {u, x, z}>", V6)
    expect = [
        sfl("<{vwy, xy, yz}, {}, {u, x, z}>", V6),
        sfl("<{vwxy, vwxyz, xy, xyz}, {}, {u, z}>", V6),
        sfl("<{vwxy, vwxyz, vxy, vxyz, wxy, wxyz, xy, xyz}, {}, {u, z}>", V6),
        sfl("<{vwxy, vwxyz, xy, xyz}, {}, {u}>", V6),
    ]
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        d1 = step(d, "v = w")
        d12 = step(d1, "x = y")
        d2 = step(d, "x = y")
        d21 = step(d2, "v = w")
        best = min(best, time.perf_counter() - t0)
    ok = [d1, d12, d2, d21] == expect and best < 1e-3
    return ok, f"four elements equal, {best * 1e3:.3f} ms"


def c2():
    d = sfl("<{vw, wx, wy, z}, {}, {u, v, x, y}>", V6)
    bs = [read_binding(t, V6) for t in ("v = w", "x = z")]
    first = [str(b) for b in E.order_bindings("stardelay", d, bs)] == ["x = z", "v = w"]
    e = sfl("<{u, uw, v, w, xy, xz}, {u, x}, {u, x}>", V6)
    bs = [read_binding(t, V6) for t in ("u = x", "v = w")]
    chosen = [str(b) for b in E.order_bindings("stardelay", e, bs)] == ["u = x", "v = w"]
    d12 = M.amgu_sfl(M.amgu_sfl(e, bs[0]), bs[1])
    d21 = M.amgu_sfl(M.amgu_sfl(e, bs[1]), bs[0])
    printed = d12 == sfl("<{uvwxy, uvwxyz, uvwxz, uxy, uxz, vw}, {}, {}>", V6) and d21 == sfl(
        "<{uvwxy, uvwxz, uxy, uxz, vw}, {}, {}>", V6
    )
    yz = e.index.mask("yz")
    lost = any(s & yz == yz for s in d12.sh) and not any(s & yz == yz for s in d21.sh)
    return first and chosen and printed and lost, "orders and both printed results"


def c3():
    phi = PosFormula.parse("x <-> y <-> z", "xyz")
    a = E.reduce_product(phi, SharingSet.parse("{xy, xz, yz, xyz}", "xyz"))
    b = E.reduce_product(phi, SharingSet.parse("{xy, xz, yz}", "xyz"))
    try:
        Config(domain="pos_red_sfl", psd=True).validate()
        rejected = False
    except ConfigError:
        rejected = True
    ok = a == SharingSet.parse("{xyz}", "xyz") and b.groups == frozenset() and rejected
    return ok, "reduce outputs and config rejection"


def c4():
    d = sfl("<{vx, wx, y, z}, {v, w, y}, {v, w, x, y}>", V5)
    b = read_binding("x = f(y, z)", V5)
    k, plain = E.amgu_klin(d, b), M.amgu_sfl(d, b)
    ok = (
        k == sfl("<{vwxz, vxy, vxz, wxy, wxz}, {}, {y}>", V5)
        and plain == sfl("<{vwxy, vwxz, vxy, vxz, wxy, wxz}, {}, {y}>", V5)
        and k.sh < plain.sh
    )
    return ok, "improved and plain results"


def c5():
    groups = lambda t: SharingSet.parse(t, V4).groups  # noqa: E731
    c14 = {groups(t) for t in ("{w, x, y, z}", "{w, x, yz}", "{w, xz, y}", "{w, xy, z}")}
    red = E.free_decompose(sfl("<{w, x, xy, xz, y, yz, z}, {w, x, y, z}, {w, x, y, z}>", V4))
    full = E.free_decompose(sfl("<{w, x, xy, xyz, xz, y, yz, z}, {w, x, y, z}, {w, x, y, z}>", V4))
    ok = (
        len(red) == 4
        and {p.sh for p in red} == c14
        and len(full) == 5
        and {p.sh for p in full} == c14 | {groups("{w, xyz}")}
    )
    return ok, "c1..c4 and c1..c5"


def c6():
    groups = lambda t: SharingSet.parse(t, V4).groups  # noqa: E731
    b = read_binding("x = f(y, z)", V4)
    d = sfl("<{wx, xy, xz, y, z}, {x}, {w, x, y, z}>", V4)
    r = E.compound_reduce(d, b, occurs_check=True)
    one = r.sh == groups("{wx, y, z}") and M.amgu_sfl(r, b).sh == groups("{wxy, wxz}")
    d = sfl("<{wx, xyz, y}, {x}, {w, x, y, z}>", V4)
    b2 = read_binding("x = y", V4)
    r = E.compound_reduce(d, b2, compound={"y"}, occurs_check=True)
    two = r.sh == groups("{wx, y}") and M.amgu_sfl(r, b2).sh == groups("{wxy}")
    d = sfl("<{wxy, wxz, x, y, z}, {w, x}, {w, x, y, z}>", V4)
    three = E.compound_reduce(d, b, occurs_check=True) is E.BOTTOM
    return one and two and three, "three scenarios, the last is bottom"


def _random_binding(rng, vi):
    x = rng.choice(vi)
    while True:
        t = random_term(rng, list(vi), 2)
        if t != Var(x):
            return Binding(x, t)


def c7():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    cases = good = 0
    while cases < 1000:
        n = rng.randint(1, 6)
        vi = tuple("uvwxyz"[:n])
        groups = frozenset(rng.randint(1, (1 << n) - 1) for _ in range(rng.randint(0, 12)))
        sh = SharingSet(vi, groups)
        b = _random_binding(rng, vi)
        cases += 1
        good += S.rho_eq(S.amgu_psd(sh, b).groups, S.amgu_sh(sh, b).groups)
    elapsed = time.perf_counter() - t0
    return good == cases and elapsed < 10, f"{good}/{cases} cases, {elapsed:.2f} s"


def _depth1_terms(vi):
    yield Const("a")
    for v in vi:
        yield Var(v)
    for v in vi:
        yield Struct("f", (Var(v),))
    for u, v in product(vi, repeat=2):
        yield Struct("g", (Var(u), Var(v)))


def c8():
    vi = ("x", "y", "z")
    t0 = time.perf_counter()
    bindings = [Binding(x, t) for x in vi for t in _depth1_terms(vi) if t != Var(x)]
    masks = [S.binding_masks(S.VarIndex(vi), b) for b in bindings]
    nonempty = range(1, 8)
    all_sh = [frozenset(c) for c in chain.from_iterable(combinations(nonempty, k) for k in range(8))]
    checked = bad = 0
    for groups in all_sh:
        after = [S.amgu(groups, x, t) for x, t in masks]
        for i, j in combinations(range(len(masks)), 2):
            a = S.amgu(after[i], *masks[j])
            b = S.amgu(after[j], *masks[i])
            checked += 1
            bad += a != b
    elapsed = time.perf_counter() - t0
    detail = f"{checked} pairs over {len(all_sh)} sharing sets, {bad} differ, {elapsed:.1f} s"
    return bad == 0 and elapsed < 60, detail


def c9():
    rng = random.Random(99)
    t0 = time.perf_counter()
    counts = {"sfl": 0, "klin": 0, "sgfl": 0}
    fails = {k: 0 for k in counts}
    fired = 0

    for i in range(1000):
        vi, sigmas, b = random_case(rng, max_vi=4, depth=2)
        counts["sfl"] += 1
        fails["sfl"] += not soundness_check(sigmas, b, M.amgu_sfl, vi)
        counts["sgfl"] += 1
        fails["sgfl"] += not soundness_check(sigmas, b, M.amgu_sgfl, vi, gf=True)
        vi, sigmas, b = random_klin_case(rng) if i % 2 else random_case(rng, max_vi=4)
        counts["klin"] += 1
        fails["klin"] += not soundness_check(sigmas, b, E.amgu_klin, vi)
        fired += E.klin_applies(alpha(sigmas, vi), b)
    elapsed = time.perf_counter() - t0
    ok = not any(fails.values()) and min(counts.values()) >= 1000 and elapsed < 30
    detail = ", ".join(f"{k} {counts[k] - fails[k]}/{counts[k]}" for k in counts)
    return ok, f"{detail}, improved rule fired {fired} times, {elapsed:.1f} s"


def c10():
    t0 = time.perf_counter()
    names = [p.stem for p in corpus_files()]
    runs = {}
    for domain in ("sfl2", "pos_x_sfl2", "sgfl2"):
        runs[domain] = {n: measure(analyze(corpus_program(n), Config(domain=domain))) for n in names}
    pos = compare(runs["sfl2"], runs["pos_x_sfl2"])
    gf = compare(runs["sfl2"], runs["sgfl2"])

    # the five loss classes plus unknown
    losses = set(CLASSES[6:])

    def worse(cmp, quantities):
        return [(n, q) for n in cmp.benchmarks for q in quantities if cmp.per_benchmark[n][q] in losses]

    pos_bad = worse(pos, ("I", "G", "F", "L"))
    gf_bad = worse(gf, ("I", "G", "F"))
    gains = [n for n in gf.benchmarks if runs["sgfl2"][n].GF > runs["sfl2"][n].GF]
    elapsed = time.perf_counter() - t0
    ok = not pos_bad and not gf_bad and gains and elapsed < 60
    detail = (
        f"{len(names)} programs, Pos losses {pos_bad}, GF losses {gf_bad}, "
        f"GF gains on {len(gains)}, {elapsed:.1f} s"
    )
    return ok, detail


APPEND = "app([], Y, Y).\napp([A|X], Y, [A|Z]) :- app(X, Y, Z).\n"


def c11():
    prog = parse_program(APPEND)
    phi = analyze(prog, Config(domain="pos")).success("app", 3)
    names = ("X1", "X2", "X3")
    oracle = groundness_models(prog, "app", 3, 3)
    same = P.model_masks(phi) == oracle
    entails = P.pos_leq(phi, PosFormula.parse("X1 & X2 <-> X3", names))
    return same and entails, f"models {sorted(P.model_masks(phi))} vs oracle {sorted(oracle)}"


CRITERIA = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11]


@pytest.mark.parametrize("n", range(1, 12), ids=[f"criterion_{n}" for n in range(1, 12)])
def test_criterion(n, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ok, detail = CRITERIA[n - 1]()
    line = status_line(n, bool(ok), detail)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for n, fn in enumerate(CRITERIA, 1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ok, detail = fn()
        print(status_line(n, bool(ok), detail))
        failed += not ok
    sys.exit(1 if failed else 0)
