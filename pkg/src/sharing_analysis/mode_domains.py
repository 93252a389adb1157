"""Set-sharing combined with freeness and linearity (SFL), and the extension
with ground-or-free variables (SGFL).

Elements keep the variable-of-interest tuple next to their bitmasks; all
variable sets (``f``, ``gf``, ``l``) are masks over the same positions as the
sharing groups.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Iterable, NamedTuple, Union

from . import set_sharing as S
from .set_sharing import Groups, VarIndex, format_groups, format_varset
from .kernel_terms import Binding, Term, Var, iter_vars


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SflElement:
    vi: tuple[str, ...]
    sh: Groups
    f: int
    l: int

    @classmethod
    def parse(cls, text: str, vi: Iterable[str]) -> "SflElement":
        """Read ``<{groups}, {free}, {linear}>``."""
        idx = VarIndex(vi)
        sh, f, l = _split_tuple(text, 3)
        return cls(idx.vi, idx.parse_groups(sh), idx.parse_varset(f), idx.parse_varset(l))

    @classmethod
    def initial(cls, vi: Iterable[str]) -> "SflElement":
        """Distinct, unaliased free variables."""
        idx = VarIndex(vi)
        return cls(idx.vi, S.SharingSet.singletons(idx.vi).groups, idx.all, idx.all)

    @classmethod
    def top(cls, vi: Iterable[str]) -> "SflElement":
        idx = VarIndex(vi)
        return cls(idx.vi, S.SharingSet.full(idx.vi).groups, 0, 0)

    @classmethod
    def bottom(cls, vi: Iterable[str]) -> "SflElement":
        idx = VarIndex(vi)
        return cls(idx.vi, frozenset(), idx.all, idx.all)

    @property
    def index(self) -> VarIndex:
        return VarIndex(self.vi)

    @property
    def all(self) -> int:
        return (1 << len(self.vi)) - 1

    def ground(self) -> int:
        return self.all & ~S.vars_of(self.sh)

    def __str__(self) -> str:
        return (
            f"<{format_groups(self.vi, self.sh)}, {format_varset(self.vi, self.f)}, "
            f"{format_varset(self.vi, self.l)}>"
        )


@dataclass(frozen=True)
class SgflElement:
    vi: tuple[str, ...]
    sh: Groups
    f: int
    gf: int
    l: int

    @classmethod
    def parse(cls, text: str, vi: Iterable[str]) -> "SgflElement":
        """Read ``<{groups}, {free}, {ground-or-free}, {linear}>``."""
        idx = VarIndex(vi)
        sh, f, gf, l = _split_tuple(text, 4)
        return cls(
            idx.vi, idx.parse_groups(sh), idx.parse_varset(f),
            idx.parse_varset(gf), idx.parse_varset(l),
        )

    @classmethod
    def initial(cls, vi: Iterable[str]) -> "SgflElement":
        idx = VarIndex(vi)
        return cls(idx.vi, S.SharingSet.singletons(idx.vi).groups, idx.all, idx.all, idx.all)

    @classmethod
    def top(cls, vi: Iterable[str]) -> "SgflElement":
        idx = VarIndex(vi)
        return cls(idx.vi, S.SharingSet.full(idx.vi).groups, 0, 0, 0)

    @classmethod
    def bottom(cls, vi: Iterable[str]) -> "SgflElement":
        idx = VarIndex(vi)
        return cls(idx.vi, frozenset(), idx.all, idx.all, idx.all)

    @classmethod
    def from_sfl(cls, d: SflElement, gf: int | None = None) -> "SgflElement":
        """Lift an SFL element; by default ``gf`` is the ground plus free variables."""
        if gf is None:
            gf = d.f | d.ground()
        return cls(d.vi, d.sh, d.f, gf, d.l | gf)

    def to_sfl(self) -> SflElement:
        return SflElement(self.vi, self.sh, self.f, self.l)

    @property
    def index(self) -> VarIndex:
        return VarIndex(self.vi)

    @property
    def all(self) -> int:
        return (1 << len(self.vi)) - 1

    def ground(self) -> int:
        return self.all & ~S.vars_of(self.sh)

    def __str__(self) -> str:
        return (
            f"<{format_groups(self.vi, self.sh)}, {format_varset(self.vi, self.f)}, "
            f"{format_varset(self.vi, self.gf)}, {format_varset(self.vi, self.l)}>"
        )


Element = Union[SflElement, SgflElement]


def _split_tuple(text: str, n: int) -> list[str]:
    text = text.strip()
    if not (text.startswith("<") and text.endswith(">")):
        raise ValueError(f"expected <...>: {text!r}")
    parts, depth, cur = [], 0, ""
    for ch in text[1:-1]:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    parts = [p.strip() for p in parts]
    parts = ["{}" if p == "∅" else p for p in parts]
    if len(parts) != n:
        raise ValueError(f"expected {n} components, got {len(parts)}: {text!r}")
    return parts


# ---------------------------------------------------------------------------
# Term predicates
# ---------------------------------------------------------------------------


class TermInfo(NamedTuple):
    """Mask view of a term: its variables, the repeated ones, and the variable
    itself when the term is one."""

    vars: int
    repeated: int
    var: int  # 0 unless the term is a single variable


def term_info(idx: VarIndex, t: Term) -> TermInfo:
    counts = Counter(iter_vars(t))
    vs = idx.mask(counts)
    rep = idx.mask(v for v, c in counts.items() if c > 1)
    single = idx.bit(t.name) if isinstance(t, Var) else 0
    return TermInfo(vs, rep, single)


def var_info(idx: VarIndex, name: str) -> TermInfo:
    b = idx.bit(name)
    return TermInfo(b, 0, b)


def _as_info(d: Element, t: Union[Term, str, TermInfo]) -> TermInfo:
    if isinstance(t, TermInfo):
        return t
    if isinstance(t, str):
        return var_info(d.index, t)
    return term_info(d.index, t)


def ind_masks(sh: Groups, s: int, t: int) -> bool:
    return not any(g & s and g & t for g in sh)


def free_info(f: int, t: TermInfo) -> bool:
    return bool(t.var) and bool(t.var & f)


def lin_info(sh: Groups, l: int, t: TermInfo) -> bool:
    if t.vars & ~l:
        return False
    if t.repeated & S.vars_of(sh):
        return False
    # pairwise independence of distinct variables of t
    return not any((g & t.vars).bit_count() > 1 for g in sh)


def gfree_info(sh: Groups, gf: int, t: TermInfo) -> bool:
    if not S.rel(t.vars, sh):
        return True
    return bool(t.var) and bool(t.var & gf)


def ind(d: Element, s, t) -> bool:
    """Definite independence of two terms (or variable names)."""
    return ind_masks(d.sh, _as_info(d, s).vars, _as_info(d, t).vars)


def free(d: Element, t) -> bool:
    return free_info(d.f, _as_info(d, t))


def lin(d: Element, t) -> bool:
    return lin_info(d.sh, d.l, _as_info(d, t))


def gfree(d: SgflElement, t) -> bool:
    return gfree_info(d.sh, d.gf, _as_info(d, t))


# ---------------------------------------------------------------------------
# Abstract unification
# ---------------------------------------------------------------------------

Closure = Callable[[Iterable[int]], Groups]


def closure_for(psd: bool | str) -> Closure:
    return S.self_binary_union if psd else S.star_union


class StarBranches(NamedTuple):
    """Which of the two relevant components get closed under union."""

    x: bool
    t: bool

    @property
    def count(self) -> int:
        return int(self.x) + int(self.t)


def _four_way(base: int, px: bool, pt: bool, vx: int, vt: int) -> int:
    if px and pt:
        return base
    if px:
        return base & ~vx
    if pt:
        return base & ~vt
    return base & ~(vx | vt)


def _linear_four_way(l: int, lx: bool, lt: bool, vx: int, vt: int) -> int:
    if lx and lt:
        return l & ~(vx & vt)
    if lx:
        return l & ~vx
    if lt:
        return l & ~vt
    return l & ~(vx | vt)


def sfl_branches(d: Element, b: Binding, use_gf: bool = False) -> StarBranches:
    """Star decisions of the SFL (or, with ``use_gf``, SGFL) unification."""
    idx = d.index
    xi, ti = var_info(idx, b.lhs), term_info(idx, b.rhs)
    return _branches(d, xi, ti, use_gf)


def _branches(d: Element, xi: TermInfo, ti: TermInfo, use_gf: bool) -> StarBranches:
    if use_gf:
        px, pt = gfree_info(d.sh, d.gf, xi), gfree_info(d.sh, d.gf, ti)
    else:
        px, pt = free_info(d.f, xi), free_info(d.f, ti)
    cyclic = bool(xi.var & ti.vars)
    if cyclic:
        # free(t) is false and ind(x, t) reduces to R_x being empty
        pt = False
        indep = not S.rel(xi.vars, d.sh)
        star_x = not (px or (lin_info(d.sh, d.l, ti) and indep))
        star_t = not px
        return StarBranches(star_x, star_t)
    indep = ind_masks(d.sh, xi.vars, ti.vars)
    star_x = not (px or pt or (lin_info(d.sh, d.l, ti) and indep))
    star_t = not (px or pt or (lin_info(d.sh, d.l, xi) and indep))
    return StarBranches(star_x, star_t)


def _new_sharing(sh: Groups, xi: TermInfo, ti: TermInfo, br: StarBranches, psd) -> Groups:
    rx = S.rel(xi.vars, sh)
    cyclic = bool(xi.var & ti.vars)
    rt = S.rel(ti.vars & ~xi.vars, sh) if cyclic else S.rel(ti.vars, sh)
    combined = S.combine(rx, rt, br.x, br.t, S.closure_name(psd))
    return S.nrel(xi.vars | ti.vars, sh) | combined


def amgu_sfl(d: SflElement, b: Binding, psd: bool = False) -> SflElement:
    """Abstract unification on SFL, refined for definitely cyclic bindings."""
    idx = d.index
    xi, ti = var_info(idx, b.lhs), term_info(idx, b.rhs)
    br = _branches(d, xi, ti, use_gf=False)
    sh2 = _new_sharing(d.sh, xi, ti, br, psd)
    return _finish_sfl(d, xi, ti, sh2)


def _finish_sfl(d: SflElement, xi: TermInfo, ti: TermInfo, sh2: Groups) -> SflElement:
    vx = S.vars_of(S.rel(xi.vars, d.sh))
    vt = S.vars_of(S.rel(ti.vars, d.sh))
    fx, ft = free_info(d.f, xi), free_info(d.f, ti)
    f2 = _four_way(d.f, fx, ft, vx, vt)
    lx, lt = lin_info(d.sh, d.l, xi), lin_info(d.sh, d.l, ti)
    l2 = _linear_four_way(d.l, lx, lt, vx, vt)
    l1 = (d.all & ~S.vars_of(sh2)) | f2 | l2
    return SflElement(d.vi, sh2, f2, l1)


def amgu_sgfl(d: SgflElement, b: Binding, psd: bool = False) -> SgflElement:
    """Abstract unification where ground-or-free takes the role of freeness
    in avoiding star-unions."""
    idx = d.index
    xi, ti = var_info(idx, b.lhs), term_info(idx, b.rhs)
    br = _branches(d, xi, ti, use_gf=True)
    sh2 = _new_sharing(d.sh, xi, ti, br, psd)
    vx = S.vars_of(S.rel(xi.vars, d.sh))
    vt = S.vars_of(S.rel(ti.vars, d.sh))
    f2 = _four_way(d.f, free_info(d.f, xi), free_info(d.f, ti), vx, vt)
    gx, gt = gfree_info(d.sh, d.gf, xi), gfree_info(d.sh, d.gf, ti)
    gf2 = _four_way(d.gf, gx, gt, vx, vt)
    lx, lt = lin_info(d.sh, d.l, xi), lin_info(d.sh, d.l, ti)
    l2 = _linear_four_way(d.l, lx, lt, vx, vt)
    gf1 = (d.all & ~S.vars_of(sh2)) | gf2
    return SgflElement(d.vi, sh2, f2, gf1, gf1 | l2)


# ---------------------------------------------------------------------------
# Lattice operations and changes of the variables of interest
# ---------------------------------------------------------------------------


def aexists_sfl(d: Element, names: Iterable[str]) -> Element:
    v = d.index.mask(names)
    sh = S.aexists(d.sh, v)
    if isinstance(d, SgflElement):
        return SgflElement(d.vi, sh, d.f | v, d.gf | v, d.l | v)
    return SflElement(d.vi, sh, d.f | v, d.l | v)


def sfl_lub(a: Element, b: Element) -> Element:
    _same_vi(a, b)
    if isinstance(a, SgflElement):
        return SgflElement(a.vi, a.sh | b.sh, a.f & b.f, a.gf & b.gf, a.l & b.l)
    return SflElement(a.vi, a.sh | b.sh, a.f & b.f, a.l & b.l)


def sfl_leq(a: Element, b: Element, rho: bool = False) -> bool:
    """``a`` is at least as precise as ``b``."""
    _same_vi(a, b)
    if rho:
        sh_ok = all(S.rho_covers(s, b.sh) for s in a.sh - b.sh)
    else:
        sh_ok = a.sh <= b.sh
    ok = sh_ok and (b.f & ~a.f) == 0 and (b.l & ~a.l) == 0
    if isinstance(a, SgflElement):
        ok = ok and (b.gf & ~a.gf) == 0
    return ok


def sfl_equal(a: Element, b: Element, rho: bool = False) -> bool:
    _same_vi(a, b)
    if rho:
        if not S.rho_eq(a.sh, b.sh):
            return False
    elif a.sh != b.sh:
        return False
    return a.f == b.f and a.l == b.l and getattr(a, "gf", 0) == getattr(b, "gf", 0)


def _same_vi(a: Element, b: Element) -> None:
    if a.vi != b.vi:
        raise ValueError(f"variables of interest differ: {a.vi} vs {b.vi}")
    if type(a) is not type(b):
        raise TypeError(f"cannot combine {type(a).__name__} with {type(b).__name__}")


def extend(a: Element, b: Element) -> Element:
    """Juxtapose two descriptions of disjoint variable tuples."""
    clash = set(a.vi) & set(b.vi)
    if clash:
        raise ValueError(f"variables not disjoint: {sorted(clash)}")
    n = len(a.vi)
    sh = a.sh | frozenset(g << n for g in b.sh)
    if isinstance(a, SgflElement):
        return SgflElement(a.vi + b.vi, sh, a.f | b.f << n, a.gf | b.gf << n, a.l | b.l << n)
    return SflElement(a.vi + b.vi, sh, a.f | b.f << n, a.l | b.l << n)


def restrict(d: Element, keep: Iterable[str]) -> Element:
    """Project onto ``keep`` and drop every other variable from ``vi``."""
    keep = set(keep)
    km = d.index.mask(v for v in d.vi if v in keep)
    vi = tuple(v for v in d.vi if v in keep)
    sh = frozenset(c for c in (S.compress(g, km) for g in d.sh) if c)
    c = lambda m: S.compress(m, km)  # noqa: E731
    if isinstance(d, SgflElement):
        return SgflElement(vi, sh, c(d.f), c(d.gf), c(d.l))
    return SflElement(vi, sh, c(d.f), c(d.l))


def rename(d: Element, mapping: dict[str, str]) -> Element:
    return replace(d, vi=tuple(mapping.get(v, v) for v in d.vi))


def canonical(d: Element) -> Element:
    """Free variables share with themselves; non-sharing variables are linear."""
    occ = S.vars_of(d.sh)
    ground = d.all & ~occ
    if isinstance(d, SgflElement):
        return replace(d, f=d.f & occ, gf=d.gf | ground, l=d.l | ground | d.gf)
    return replace(d, f=d.f & occ, l=d.l | ground)
