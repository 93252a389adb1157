"""Set-sharing: groups, star-union, binary union, abstract unification and
the pair-sharing quotient.

Sharing groups are bitmasks over the positions of an ordered tuple of
variables of interest; a sharing set is a ``frozenset`` of such masks.  The
mask-level functions below are what the other domains build on.
:class:`SharingSet` wraps a mask set together with its variable tuple.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

from .kernel_terms import Binding

Groups = frozenset  # frozenset[int]


# ---------------------------------------------------------------------------
# Bit helpers
# ---------------------------------------------------------------------------


def bits(mask: int) -> list[int]:
    """Single-bit masks set in ``mask``, low to high."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low)
        mask ^= low
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def union_all(groups: Iterable[int]) -> int:
    m = 0
    for g in groups:
        m |= g
    return m


def compress(mask: int, keep: int) -> int:
    """Drop the positions not in ``keep`` and close the gaps."""
    out, j = 0, 0
    i = 0
    while keep >> i:
        if (keep >> i) & 1:
            if (mask >> i) & 1:
                out |= 1 << j
            j += 1
        i += 1
    return out


def pairs_of(mask: int) -> list[int]:
    """All two-variable masks inside ``mask``."""
    bs = bits(mask)
    return [a | b for a, b in combinations(bs, 2)]


# ---------------------------------------------------------------------------
# Operations on mask sets
# ---------------------------------------------------------------------------


def vars_of(sh: Iterable[int]) -> int:
    return union_all(sh)


def rel(v: int, sh: Iterable[int]) -> Groups:
    """Groups of ``sh`` that meet the variable mask ``v``."""
    return frozenset(s for s in sh if s & v)


def nrel(v: int, sh: Iterable[int]) -> Groups:
    return frozenset(s for s in sh if not s & v)


class TimeLimitExceeded(Exception):
    """Raised from inside long closure computations once the deadline passes."""


_deadline: float | None = None


@contextmanager
def time_limit(deadline: float | None) -> Iterator[None]:
    """Make :func:`star_union` give up at ``deadline`` (a ``time.monotonic`` value)."""
    global _deadline
    saved, _deadline = _deadline, deadline
    try:
        yield
    finally:
        _deadline = saved


def check_deadline() -> None:
    if _deadline is not None and time.monotonic() > _deadline:
        raise TimeLimitExceeded


def star_union(sh: Iterable[int]) -> Groups:
    """Closure of ``sh`` under non-empty finite unions."""
    out: set[int] = set()
    for g in sh:
        if g in out:
            continue
        if len(out) > 4096:
            grown = set()
            for k, s in enumerate(out):
                grown.add(g | s)
                if k & 4095 == 4095:
                    check_deadline()
            out |= grown
        else:
            out |= {g | s for s in out}
        out.add(g)
    return frozenset(out)


def binary_union(sh1: Iterable[int], sh2: Iterable[int]) -> Groups:
    sh2 = list(sh2)
    out: set[int] = set()
    for a in sh1:
        out.update(a | b for b in sh2)
        if len(out) > 4096:
            check_deadline()
    return frozenset(out)


def self_binary_union(sh: Iterable[int]) -> Groups:
    sh = list(sh)
    return binary_union(sh, sh)


def aexists(sh: Iterable[int], v: int) -> Groups:
    """Forget everything about the variables in ``v``."""
    kept = {s & ~v for s in sh if s & ~v}
    kept.update(bits(v))
    return frozenset(kept)


def combine(rx: Groups, rt: Groups, close_x: bool, close_t: bool, closure: str = "star") -> Groups:
    """``bin(S_x, S_t)`` where each side is optionally closed under union.

    ``closure`` picks how: ``"star"`` (exact), ``"sbin"`` (self-binary
    union on each side) or ``"compact"``.  The compact form, used when both
    sides are closed, only builds unions of at most three groups (a pair
    from one side with a single group from the other); every larger union
    has all its variable pairs inside such smaller unions, so the result
    agrees with the other two up to :func:`rho_eq`.
    """
    if closure == "compact":
        if close_x and close_t:
            return binary_union(self_binary_union(rx), rt) | binary_union(rx, self_binary_union(rt))
        closure = "sbin"
    close = self_binary_union if closure == "sbin" else star_union
    return binary_union(close(rx) if close_x else rx, close(rt) if close_t else rt)


def closure_name(psd: bool | str) -> str:
    """Map the ``psd`` argument of the unification operators to a closure."""
    if psd == "compact":
        return "compact"
    return "sbin" if psd else "star"


def amgu(sh: Groups, x: int, t: int, psd: bool | str = False) -> Groups:
    """Abstract effect of ``x = t`` where ``x``/``t`` are variable masks.

    With ``psd`` the star-unions are replaced by self-bin-unions (or, with
    ``psd="compact"``, by the cheaper form of :func:`combine`); the result
    then agrees with the exact one only up to :func:`rho_eq`.
    """
    rx, rt = rel(x, sh), rel(t, sh)
    return nrel(x | t, sh) | combine(rx, rt, True, True, closure_name(psd))


def rho_covers(s: int, sh: Iterable[int]) -> bool:
    """Whether ``s`` belongs to the pair-sharing closure of ``sh``.

    ``s`` is in the closure when every pair of its variables (including a
    variable paired with itself) lies inside some group ``T`` of ``sh`` with
    ``T ⊆ s``.
    """
    inside = [t for t in sh if t & ~s == 0]
    if union_all(inside) != s:
        return False
    for p in pairs_of(s):
        if not any(t & p == p for t in inside):
            return False
    return True


def rho_closure(sh: Iterable[int]) -> Groups:
    """Full closure; exponential in ``vars(sh)``, meant for tests."""
    sh = frozenset(sh)
    v = vars_of(sh)
    out = set()
    sub = v
    while sub:
        if rho_covers(sub, sh):
            out.add(sub)
        sub = (sub - 1) & v
    return frozenset(out)


def rho_eq(sh1: Iterable[int], sh2: Iterable[int]) -> bool:
    sh1, sh2 = frozenset(sh1), frozenset(sh2)
    if sh1 == sh2:
        return True
    return all(rho_covers(s, sh2) for s in sh1 - sh2) and all(
        rho_covers(s, sh1) for s in sh2 - sh1
    )


def rho_reduce(sh: Iterable[int]) -> Groups:
    """Drop every group whose variable pairs all lie in strictly smaller groups."""
    sh = frozenset(sh)
    multi = [s for s in sh if s & (s - 1)]
    out = {s for s in sh if not s & (s - 1)}
    # For large groups: bitsets over positions in ``multi``, one per variable.
    by_var: dict[int, int] | None = None
    for n, s in enumerate(multi):
        if n & 1023 == 1023:
            check_deadline()
        if popcount(s) <= _SUBMASK_LIMIT:
            covered: set[int] = set()
            sub = (s - 1) & s
            while sub:
                if sub in sh and sub & (sub - 1):
                    covered.update(pairs_of(sub))
                sub = (sub - 1) & s
            redundant = covered.issuperset(pairs_of(s))
        else:
            if by_var is None:
                by_var = {}
                for k, t in enumerate(multi):
                    for v in bits(t):
                        by_var[v] = by_var.get(v, 0) | (1 << k)
                everything = vars_of(multi)
                full = (1 << len(multi)) - 1
            outside = 0
            for v in bits(everything & ~s):
                outside |= by_var[v]
            inside = full & ~outside & ~(1 << n)
            vs = bits(s)
            redundant = all(by_var[a] & by_var[b] & inside for a, b in combinations(vs, 2))
        if not redundant:
            out.add(s)
    return frozenset(out)


_SUBMASK_LIMIT = 12


def independent_pairs(sh: Iterable[int], vi_mask: int) -> set[int]:
    """Pairs (as two-bit masks) of ``vi_mask`` that no group contains."""
    shared = set()
    for s in sh:
        shared.update(pairs_of(s & vi_mask))
    return set(pairs_of(vi_mask)) - shared


# ---------------------------------------------------------------------------
# Named-variable wrapper
# ---------------------------------------------------------------------------


def _group_names(vi: tuple[str, ...], g: int) -> list[str]:
    return sorted(vi[i] for i in range(len(vi)) if (g >> i) & 1)


def format_group(vi: tuple[str, ...], g: int) -> str:
    names = _group_names(vi, g)
    sep = "" if all(len(n) == 1 for n in vi) else "."
    return sep.join(names)


def format_groups(vi: tuple[str, ...], sh: Iterable[int]) -> str:
    body = sorted(format_group(vi, g) for g in sh)
    return "{" + ", ".join(body) + "}"


def format_varset(vi: tuple[str, ...], mask: int) -> str:
    return "{" + ", ".join(_group_names(vi, mask)) + "}"


class VarIndex:
    """Name <-> bit translation for one tuple of variables of interest."""

    __slots__ = ("vi", "pos")

    def __init__(self, vi: Iterable[str]) -> None:
        self.vi = tuple(vi)
        if len(set(self.vi)) != len(self.vi):
            raise ValueError(f"duplicate variables of interest: {self.vi}")
        self.pos = {v: i for i, v in enumerate(self.vi)}

    @property
    def all(self) -> int:
        return (1 << len(self.vi)) - 1

    def bit(self, name: str) -> int:
        try:
            return 1 << self.pos[name]
        except KeyError:
            raise KeyError(f"{name} is not a variable of interest {self.vi}") from None

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for n in names:
            m |= self.bit(n)
        return m

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(v for i, v in enumerate(self.vi) if (mask >> i) & 1)

    def parse_group(self, token: str) -> int:
        token = token.strip()
        if "." in token:
            return self.mask(token.split("."))
        if token in self.pos:
            return self.bit(token)
        if all(len(n) == 1 for n in self.vi):
            return self.mask(token)
        raise ValueError(f"cannot split group {token!r} over {self.vi}")

    def parse_groups(self, text: str) -> Groups:
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError(f"expected braces around groups: {text!r}")
        inner = text[1:-1].strip()
        if not inner:
            return frozenset()
        return frozenset(self.parse_group(tok) for tok in inner.split(","))

    def parse_varset(self, text: str) -> int:
        text = text.strip()
        if text in ("{}", "∅"):
            return 0
        inner = text[1:-1] if text.startswith("{") else text
        return self.mask(tok.strip() for tok in inner.split(",") if tok.strip())


@dataclass(frozen=True)
class SharingSet:
    """A set of sharing groups over the variables ``vi``."""

    vi: tuple[str, ...]
    groups: Groups

    @classmethod
    def parse(cls, text: str, vi: Iterable[str]) -> "SharingSet":
        """Read the brace notation, e.g. ``SharingSet.parse("{xy, z}", "xyz")``."""
        idx = VarIndex(vi)
        return cls(idx.vi, idx.parse_groups(text))

    @classmethod
    def singletons(cls, vi: Iterable[str]) -> "SharingSet":
        vi = tuple(vi)
        return cls(vi, frozenset(1 << i for i in range(len(vi))))

    @classmethod
    def full(cls, vi: Iterable[str]) -> "SharingSet":
        """Every non-empty subset: the description that knows nothing."""
        vi = tuple(vi)
        return cls(vi, frozenset(range(1, 1 << len(vi))))

    @property
    def index(self) -> VarIndex:
        return VarIndex(self.vi)

    def mask(self, names: Iterable[str]) -> int:
        return self.index.mask(names)

    def variables(self) -> frozenset[str]:
        return self.index.names(vars_of(self.groups))

    def named_groups(self) -> set[frozenset[str]]:
        idx = self.index
        return {idx.names(g) for g in self.groups}

    def _same(self, groups: Iterable[int]) -> "SharingSet":
        return SharingSet(self.vi, frozenset(groups))

    def __len__(self) -> int:
        return len(self.groups)

    def __str__(self) -> str:
        return format_groups(self.vi, self.groups)


def _check_vi(a: SharingSet, b: SharingSet) -> None:
    if a.vi != b.vi:
        raise ValueError(f"variables of interest differ: {a.vi} vs {b.vi}")


def rel_named(v: Iterable[str], sh: SharingSet) -> SharingSet:
    return sh._same(rel(sh.mask(v), sh.groups))


def nrel_named(v: Iterable[str], sh: SharingSet) -> SharingSet:
    return sh._same(nrel(sh.mask(v), sh.groups))


def aexists_named(sh: SharingSet, v: Iterable[str]) -> SharingSet:
    return sh._same(aexists(sh.groups, sh.mask(v)))


def binding_masks(idx: VarIndex, b: Binding) -> tuple[int, int]:
    return idx.bit(b.lhs), idx.mask(b.rhs_vars)


def amgu_sh(sh: SharingSet, b: Binding) -> SharingSet:
    x, t = binding_masks(sh.index, b)
    return sh._same(amgu(sh.groups, x, t))


def amgu_psd(sh: SharingSet, b: Binding) -> SharingSet:
    x, t = binding_masks(sh.index, b)
    return sh._same(amgu(sh.groups, x, t, psd=True))


def rho_eq_named(sh1: SharingSet, sh2: SharingSet) -> bool:
    _check_vi(sh1, sh2)
    return rho_eq(sh1.groups, sh2.groups)
