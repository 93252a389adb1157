"""Precision enhancements layered on the sharing domains: groundness from a
Pos component, binding-ordering heuristics, an improved linearity rule, a
freeness-driven case split, and compoundness-based group removal.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import replace
from typing import Callable, Sequence, Union

from . import bdd
from . import mode_domains as M
from . import set_sharing as S
from .mode_domains import SflElement, SgflElement, TermInfo, term_info, var_info
from .groundness_pos import PosFormula, ground_mask
from .set_sharing import Groups, SharingSet
from .kernel_terms import Binding, Struct, Var


class EnhancementSkipped(UserWarning):
    """An enhancement was not applicable and the plain operator was used."""


class Bottom:
    """The inconsistent description: no concrete state reaches this point."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"


BOTTOM = Bottom()

Described = Union[SflElement, SgflElement, SharingSet]


def _groups(d: Described) -> Groups:
    return d.groups if isinstance(d, SharingSet) else d.sh


# ---------------------------------------------------------------------------
# Grounding bindings
# ---------------------------------------------------------------------------


def is_grounding(d: Described, b: Binding) -> bool:
    """Whether executing ``b`` definitely grounds one of its sides."""
    idx = d.index
    sh = _groups(d)
    return not S.rel(idx.bit(b.lhs), sh) or not S.rel(idx.mask(b.rhs_vars), sh)


def partition_grounding(d: Described, bs: Sequence[Binding]) -> tuple[list, list]:
    yes, no = [], []
    for b in bs:
        (yes if is_grounding(d, b) else no).append(b)
    return yes, no


# ---------------------------------------------------------------------------
# Groundness from Pos
# ---------------------------------------------------------------------------


def apply_groundness(phi: PosFormula, d):
    """Drop groups with a variable that ``phi`` proves ground and let those
    variables (and any that no longer share) count as linear."""
    if phi.vi != d.vi:
        raise ValueError(f"variables of interest differ: {phi.vi} vs {d.vi}")
    g = ground_mask(phi)
    if not g:
        return d
    if isinstance(d, SharingSet):
        return SharingSet(d.vi, frozenset(s for s in d.groups if not s & g))
    sh = frozenset(s for s in d.sh if not s & g)
    newly = g | (d.all & ~S.vars_of(sh))
    if isinstance(d, SgflElement):
        return replace(d, sh=sh, gf=d.gf | newly, l=d.l | newly)
    return replace(d, sh=sh, l=d.l | newly)


def reduce_groups(phi: PosFormula, sh: Groups) -> Groups:
    """Keep the groups ``S`` whose complement is a model of ``phi``.

    Each group is checked by evaluating the BDD on one assignment, so no
    model enumeration is needed.
    """
    full = (1 << len(phi.vi)) - 1
    return frozenset(s for s in sh if bdd.evaluate(phi.node, full & ~s))


def reduce_product(phi: PosFormula, sh: SharingSet) -> SharingSet:
    if phi.vi != sh.vi:
        raise ValueError(f"variables of interest differ: {phi.vi} vs {sh.vi}")
    return SharingSet(sh.vi, reduce_groups(phi, sh.groups))


# ---------------------------------------------------------------------------
# Binding ordering
# ---------------------------------------------------------------------------


class OrderingStrategy(str, enum.Enum):
    TEXTUAL = "textual"
    REVERSE = "reverse"
    STAR_DELAY = "stardelay"
    MAX_FREE_LIN = "freelin"


def star_count(d: Described, b: Binding) -> int:
    """How many of the two relevant components would be star-closed."""
    if isinstance(d, SharingSet):
        return 2
    return M.sfl_branches(d, b, use_gf=isinstance(d, SgflElement)).count


def default_step(d: Described, b: Binding, psd: bool = False) -> Described:
    if isinstance(d, SgflElement):
        return M.amgu_sgfl(d, b, psd)
    if isinstance(d, SflElement):
        return M.amgu_sfl(d, b, psd)
    x, t = S.binding_masks(d.index, b)
    return SharingSet(d.vi, S.amgu(d.groups, x, t, psd))


def _free_lin_score(d: Described) -> tuple[int, int]:
    if isinstance(d, SharingSet):
        return (0, 0)
    return (d.f.bit_count(), d.l.bit_count())


def order_bindings(
    strategy: OrderingStrategy | str,
    d: Described,
    bs: Sequence[Binding],
    step: Callable[[Described, Binding], Described] | None = None,
    view: Callable[[object], Described] | None = None,
) -> list[Binding]:
    """Grounding bindings first, then the rest as chosen by ``strategy``.

    The choice is greedy: after each placement the binding is applied with
    ``step`` and the remaining candidates are re-evaluated on the new
    description.  A binding that has become grounding is always taken next.
    Ties go to the textually first candidate (the last one for ``reverse``).
    When the states threaded through ``step`` are not themselves sharing
    descriptions, ``view`` extracts the one to inspect.
    """
    strategy = OrderingStrategy(strategy)
    step = step or default_step
    view = view or (lambda s: s)
    first, rest = partition_grounding(view(d), bs)
    out = list(first)
    for b in first:
        d = step(d, b)
    rest = list(rest)
    while rest:
        k = next((i for i, b in enumerate(rest) if is_grounding(view(d), b)), None)
        if k is None:
            k = _pick(strategy, d, rest, step, view)
        b = rest.pop(k)
        out.append(b)
        if rest:
            d = step(d, b)
    return out


def _pick(strategy: OrderingStrategy, d, rest: list[Binding], step, view) -> int:
    if strategy is OrderingStrategy.TEXTUAL:
        return 0
    if strategy is OrderingStrategy.REVERSE:
        return len(rest) - 1
    if strategy is OrderingStrategy.STAR_DELAY:
        counts = [star_count(view(d), b) for b in rest]
        return counts.index(min(counts))
    scores = [_free_lin_score(view(step(d, b))) for b in rest]
    return scores.index(max(scores))


# ---------------------------------------------------------------------------
# Improved linearity
# ---------------------------------------------------------------------------


def linear_part(d: SflElement, ti: TermInfo) -> int:
    """Variables of ``t`` that cannot be the cause of its non-linearity."""
    occ = S.vars_of(d.sh)
    out = 0
    for y in S.bits(ti.vars):
        if not y & d.l:
            continue
        if y & ti.repeated and y & occ:
            continue
        if all(z == y or M.ind_masks(d.sh, y, z) for z in S.bits(ti.vars)):
            out |= y
    return out


def klin_applies(d: SflElement, b: Binding) -> bool:
    idx = d.index
    xi, ti = var_info(idx, b.lhs), term_info(idx, b.rhs)
    return _klin_split(d, xi, ti) is not None


def _klin_split(d: SflElement, xi: TermInfo, ti: TermInfo):
    if xi.vars & ti.vars:
        return None
    if not (xi.vars & d.l) or xi.vars & d.f:
        return None
    if M.lin_info(d.sh, d.l, ti) or not M.ind_masks(d.sh, xi.vars, ti.vars):
        return None
    vl = linear_part(d, ti)
    rl, rnl = S.rel(vl, d.sh), S.rel(ti.vars & ~vl, d.sh)
    if not rl or not rnl:
        return None
    return rl, rnl


def amgu_klin(d: SflElement, b: Binding, psd: bool = False) -> SflElement:
    """Like :func:`amgu_sfl`, but when ``x`` is linear and not free, and ``t``
    is non-linear and independent of ``x``, only the part of ``t`` that may
    make it non-linear is combined with the star-closure of ``x``'s groups."""
    idx = d.index
    xi, ti = var_info(idx, b.lhs), term_info(idx, b.rhs)
    split = _klin_split(d, xi, ti)
    if split is None:
        return M.amgu_sfl(d, b, psd)
    rl, rnl = split
    rx = S.rel(xi.vars, d.sh)
    sx = M.closure_for(psd)(rx)
    sh2 = (
        S.nrel(xi.vars | ti.vars, d.sh)
        | S.binary_union(rx, rl)
        | S.binary_union(sx, rnl)
    )
    return M._finish_sfl(d, xi, ti, sh2)


# ---------------------------------------------------------------------------
# Splitting on free variables
# ---------------------------------------------------------------------------

DEFAULT_COMPONENT_BOUND = 4096


class TooManyComponents(Exception):
    pass


def free_decompose(d: SflElement, bound: int = DEFAULT_COMPONENT_BOUND) -> list[SflElement]:
    """Split ``d`` so that in each part every free variable that occurs in
    the sharing set occurs in exactly one group.

    Groups without free variables go into every part.  Raises
    :class:`TooManyComponents` past ``bound`` parts.
    """
    fv = d.f & S.vars_of(d.sh)
    if not fv:
        return [d]
    fixed = frozenset(s for s in d.sh if not s & fv)
    movable = sorted(s for s in d.sh if s & fv)
    covers: list[frozenset[int]] = []

    def search(todo: int, chosen: list[int]) -> None:
        if not todo:
            covers.append(frozenset(chosen))
            if len(covers) > bound:
                raise TooManyComponents(f"more than {bound} components")
            return
        low = todo & -todo
        for s in movable:
            if s & low and (s & fv) & ~todo == 0:
                chosen.append(s)
                search(todo & ~s, chosen)
                chosen.pop()

    search(fv, [])
    return [replace(d, sh=fixed | c) for c in sorted(covers, key=sorted)]


def amgu_free_split(
    d: SflElement, b: Binding, bound: int = DEFAULT_COMPONENT_BOUND
) -> SflElement:
    """Apply :func:`amgu_sfl` to each part of :func:`free_decompose` and join."""
    try:
        parts = free_decompose(d, bound)
    except TooManyComponents:
        warnings.warn("free-variable split too large; using plain amgu", EnhancementSkipped)
        return M.amgu_sfl(d, b)
    if not parts:
        return SflElement.bottom(d.vi)
    out = M.amgu_sfl(parts[0], b)
    for p in parts[1:]:
        out = M.sfl_lub(out, M.amgu_sfl(p, b))
    return out


# ---------------------------------------------------------------------------
# Compoundness
# ---------------------------------------------------------------------------


def compound_applies(d, b: Binding, compound: frozenset[str] = frozenset()) -> bool:
    if not d.f & d.index.bit(b.lhs):
        return False
    if isinstance(b.rhs, Struct):
        return True
    return isinstance(b.rhs, Var) and b.rhs.name in compound


def compound_reduce(d, b: Binding, compound=frozenset(), occurs_check: bool = False):
    """Before binding free ``x`` to a compound term, drop the groups that
    contain ``x`` and a variable of the term; with occurs-check such a group
    could only lead to failure.

    Returns :data:`BOTTOM` when a free variable loses all of its groups.
    """
    if not occurs_check:
        warnings.warn("compoundness reduction needs the occurs-check", EnhancementSkipped)
        return d
    if not compound_applies(d, b, frozenset(compound)):
        return d
    idx = d.index
    x, t = idx.bit(b.lhs), idx.mask(b.rhs_vars)
    sh = frozenset(s for s in d.sh if not (s & x and s & t))
    lost = d.f & S.vars_of(d.sh) & ~S.vars_of(sh)
    if lost:
        return BOTTOM
    return replace(d, sh=sh)
