"""Concrete finite-tree unification and the abstraction of substitution sets,
used as a ground truth when testing the abstract operators.
"""

from __future__ import annotations

import random
from collections import Counter
from typing import Callable, Iterable, Mapping, Union

from .mode_domains import SflElement, SgflElement, sfl_leq
from .set_sharing import VarIndex
from .kernel_terms import Binding, Clause, Const, Program, Struct, Term, Var, iter_vars, pred_key

Substitution = Mapping[str, Term]


class Fail:
    """Unification failure (functor clash or occurs-check)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "FAIL"


FAIL = Fail()


class OutOfScope(Exception):
    """The unification would build a rational (infinite) tree."""


def apply(t: Term, sigma: Substitution) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(apply(a, sigma) for a in t.args))
    return t


def _walk(t: Term, theta: dict[str, Term]) -> Term:
    while isinstance(t, Var) and t.name in theta:
        t = theta[t.name]
    return t


def _occurs(name: str, t: Term, theta: dict[str, Term]) -> bool:
    t = _walk(t, theta)
    if isinstance(t, Var):
        return t.name == name
    if isinstance(t, Struct):
        return any(_occurs(name, a, theta) for a in t.args)
    return False


def _resolve(t: Term, theta: dict[str, Term]) -> Term:
    t = _walk(t, theta)
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(_resolve(a, theta) for a in t.args))
    return t


def mgu(s: Term, t: Term, occurs_check: bool = True) -> Union[dict[str, Term], Fail]:
    """Most general unifier of ``s`` and ``t`` as an idempotent substitution."""
    theta: dict[str, Term] = {}
    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        a, b = _walk(a, theta), _walk(b, theta)
        if a == b:
            continue
        if isinstance(b, Var) and not isinstance(a, Var):
            a, b = b, a
        if isinstance(a, Var):
            if _occurs(a.name, b, theta):
                if occurs_check:
                    return FAIL
                raise OutOfScope(f"{a.name} occurs in {b}")
            theta[a.name] = b
            continue
        if isinstance(a, Const) or isinstance(b, Const):
            return FAIL
        if a.functor != b.functor or a.arity != b.arity:
            return FAIL
        stack.extend(zip(a.args, b.args))
    return {v: _resolve(u, theta) for v, u in theta.items()}


def concrete_unify(
    sigma: Substitution, b: Binding, occurs_check: bool = True
) -> Union[dict[str, Term], Fail]:
    """``mgu(x sigma, t sigma)`` composed after ``sigma``."""
    theta = mgu(apply(Var(b.lhs), sigma), apply(b.rhs, sigma), occurs_check)
    if theta is FAIL:
        return FAIL
    out = {v: apply(t, theta) for v, t in sigma.items()}
    for v, t in theta.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if t != Var(v)}


def _is_linear(t: Term) -> bool:
    return all(c == 1 for c in Counter(iter_vars(t)).values())


def alpha(sigmas: Iterable[Substitution], vi: Iterable[str]) -> SflElement:
    """Most precise SFL description of a finite set of substitutions."""
    return alpha_sgfl(sigmas, vi).to_sfl()


def alpha_sgfl(sigmas: Iterable[Substitution], vi: Iterable[str]) -> SgflElement:
    idx = VarIndex(vi)
    sh: set[int] = set()
    f = gf = l = idx.all
    for sigma in sigmas:
        images = {x: apply(Var(x), sigma) for x in idx.vi}
        occ: dict[str, int] = {}
        for x, t in images.items():
            for v in iter_vars(t):
                occ[v] = occ.get(v, 0) | idx.bit(x)
            bit = idx.bit(x)
            if not isinstance(t, Var):
                f &= ~bit
                if any(True for _ in iter_vars(t)):
                    gf &= ~bit
            if not _is_linear(t):
                l &= ~bit
        sh.update(occ.values())
    return SgflElement(idx.vi, frozenset(sh), f, gf, l)


def soundness_check(
    sigmas: Iterable[Substitution],
    b: Binding,
    abstract_amgu: Callable,
    vi: Iterable[str],
    gf: bool = False,
) -> bool:
    """Whether the abstract result covers every concrete successor."""
    sigmas = list(sigmas)
    vi = tuple(vi)
    after = []
    for s in sigmas:
        r = concrete_unify(s, b, occurs_check=True)
        if r is not FAIL:
            after.append(r)
    if gf:
        before_d, after_d = alpha_sgfl(sigmas, vi), alpha_sgfl(after, vi)
    else:
        before_d, after_d = alpha(sigmas, vi), alpha(after, vi)
    return sfl_leq(after_d, abstract_amgu(before_d, b))


# ---------------------------------------------------------------------------
# Random cases
# ---------------------------------------------------------------------------

_FUNCTORS = (("f", 1), ("g", 2), ("h", 3))
_ATOMS = ("a", "b")


def random_term(rng: random.Random, names: list[str], depth: int) -> Term:
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        return Var(rng.choice(names)) if names and roll < 0.85 else Const(rng.choice(_ATOMS))
    functor, arity = rng.choice(_FUNCTORS)
    return Struct(functor, tuple(random_term(rng, names, depth - 1) for _ in range(arity)))


def random_substitution(
    rng: random.Random, vi: tuple[str, ...], depth: int = 2, pool: int = 3
) -> dict[str, Term]:
    """Each variable of interest maps to a term over fresh variables, so the
    substitution is idempotent by construction."""
    fresh = [f"_U{i}" for i in range(pool)]
    out = {}
    for x in vi:
        t = random_term(rng, fresh, depth)
        if t != Var(x):
            out[x] = t
    return out


def random_case(
    rng: random.Random, max_vi: int = 4, depth: int = 2, max_sigmas: int = 3
) -> tuple[tuple[str, ...], list[dict[str, Term]], Binding]:
    n = rng.randint(1, max_vi)
    vi = tuple("wxyz"[:n]) if n <= 4 else tuple(f"v{i}" for i in range(n))
    sigmas = [random_substitution(rng, vi, depth) for _ in range(rng.randint(1, max_sigmas))]
    x = rng.choice(vi)
    while True:
        t = random_term(rng, list(vi), depth)
        if t != Var(x):
            break
    return vi, sigmas, Binding(x, t)


def random_klin_case(
    rng: random.Random,
) -> tuple[tuple[str, ...], list[dict[str, Term]], Binding]:
    """A case shaped so the improved linearity rule can fire: ``x`` is bound
    to linear compound terms and the right-hand side mixes linear and
    non-linear variables that are independent of ``x``."""
    vi = ("v", "w", "x", "y", "z")
    sigmas = []
    for _ in range(rng.randint(1, 3)):
        u = [Var(f"_U{i}") for i in range(6)]
        rng.shuffle(u)
        sigma = {
            "v": rng.choice([u[0], Struct("f", (u[0],)), Const("a")]),
            "w": rng.choice([u[1], Struct("g", (u[1], u[0])), Struct("f", (u[1],))]),
            "x": Struct("g", (u[0], u[1])) if rng.random() < 0.7 else Struct("f", (u[2],)),
            "y": rng.choice([u[3], Struct("f", (u[3],)), Const("b")]),
            "z": rng.choice([Struct("g", (u[4], u[4])), u[4], Struct("g", (u[4], u[5]))]),
        }
        sigmas.append(sigma)
    args = [Var("y"), Var("z")]
    if rng.random() < 0.3:
        args.append(Var("y"))
    rng.shuffle(args)
    return vi, sigmas, Binding("x", Struct("h" if len(args) == 3 else "g", tuple(args)))


# ---------------------------------------------------------------------------
# Groundness by bounded resolution
# ---------------------------------------------------------------------------


def _rename(t: Term, suffix: str) -> Term:
    if isinstance(t, Var):
        return Var(t.name + suffix)
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(_rename(a, suffix) for a in t.args))
    return t


def _compose(sigma: dict[str, Term], theta: dict[str, Term]) -> dict[str, Term]:
    out = {v: apply(t, theta) for v, t in sigma.items()}
    for v, t in theta.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if t != Var(v)}


def answers(program: Program, goal: Term, depth: int) -> list[dict[str, Term]]:
    """Answer substitutions for ``goal`` from SLD derivations of at most
    ``depth`` resolution steps (with occurs-check).  Only user predicates,
    ``=``/2 and ``true`` may appear in the derivations."""
    by_pred: dict = {}
    for c in program.clauses:
        by_pred.setdefault(c.pred, []).append(c)
    out: list[dict[str, Term]] = []
    counter = [0]

    def solve(goals: tuple[Term, ...], sigma: dict[str, Term], left: int) -> None:
        if not goals:
            out.append(sigma)
            return
        g, rest = apply(goals[0], sigma), goals[1:]
        if g == Const("true"):
            solve(rest, sigma, left)
            return
        if isinstance(g, Struct) and (g.functor, g.arity) == ("=", 2):
            theta = mgu(g.args[0], g.args[1])
            if theta is not FAIL:
                solve(rest, _compose(sigma, theta), left)
            return
        if left == 0:
            return
        key = pred_key(g)
        if key not in by_pred:
            raise OutOfScope(f"no clauses for {key[0]}/{key[1]}")
        for c in by_pred[key]:
            counter[0] += 1
            suffix = f"#{counter[0]}"
            head = _rename(c.head, suffix)
            theta = mgu(g, head)
            if theta is FAIL:
                continue
            body = tuple(_rename(b, suffix) for b in c.body)
            solve(body + rest, _compose(sigma, theta), left - 1)

    solve((goal,), {}, depth)
    return out


def groundness_models(program: Program, name: str, arity: int, depth: int) -> frozenset[int]:
    """Truth assignments (bit ``i`` for argument ``i+1``) of "argument is
    ground" reachable by the answers of ``name(X1..Xn)`` within ``depth``
    steps, together with every instance obtained by grounding some of an
    answer's remaining variables."""
    args = tuple(Var(f"X{i}") for i in range(1, arity + 1))
    goal = Struct(name, args) if arity else Const(name)
    models = set()
    for sigma in answers(program, goal, depth):
        images = [apply(a, sigma) for a in args]
        free = sorted({v for t in images for v in iter_vars(t)})
        occ = [frozenset(iter_vars(t)) for t in images]
        for k in range(1 << len(free)):
            grounded = {v for i, v in enumerate(free) if (k >> i) & 1}
            models.add(sum(1 << i for i, vs in enumerate(occ) if vs <= grounded))
    return frozenset(models)
