"""Groundness dependencies as positive Boolean functions.

A :class:`PosFormula` is a BDD over the positions of its variables of
interest: variable ``vi[i]`` is BDD level ``i`` and "true" reads "ground".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from . import bdd
from .set_sharing import VarIndex, bits
from .kernel_terms import Binding

DEFAULT_MODEL_BOUND = 24


class ModelBoundExceeded(Exception):
    """Raised when explicit model enumeration would exceed the size bound."""


@dataclass(frozen=True)
class PosFormula:
    vi: tuple[str, ...]
    node: int

    @classmethod
    def true(cls, vi: Iterable[str]) -> "PosFormula":
        return cls(tuple(vi), bdd.TRUE)

    @classmethod
    def parse(cls, text: str, vi: Iterable[str]) -> "PosFormula":
        """Read ``x<->y&z``, ``x\\/y``, ``true``; ``a<->b<->c`` chains pairwise."""
        vi = tuple(vi)
        return cls(vi, _FormulaReader(text, VarIndex(vi)).read())

    @property
    def index(self) -> VarIndex:
        return VarIndex(self.vi)

    def is_model(self, true_mask: int) -> bool:
        return bdd.evaluate(self.node, true_mask)

    def __str__(self) -> str:
        return to_text(self)


def _var_node(idx: VarIndex, name: str) -> int:
    return bdd.var(idx.pos[name])


def _conj_of_mask(mask: int) -> int:
    return bdd.conj_all(bdd.var(b.bit_length() - 1) for b in bits(mask))


def pos_amgu(phi: PosFormula, b: Binding) -> PosFormula:
    """Conjoin ``x <-> /\\ vars(t)``; a cyclic binding drops ``x`` from the right."""
    idx = phi.index
    rhs = idx.mask(b.rhs_vars - {b.lhs})
    eq = bdd.iff(_var_node(idx, b.lhs), _conj_of_mask(rhs))
    return PosFormula(phi.vi, bdd.conj(phi.node, eq))


def make_ground(phi: PosFormula, names: Iterable[str]) -> PosFormula:
    idx = phi.index
    return PosFormula(phi.vi, bdd.conj(phi.node, _conj_of_mask(idx.mask(names))))


def ground_mask(phi: PosFormula) -> int:
    out = 0
    for i in range(len(phi.vi)):
        if bdd.entails(phi.node, bdd.var(i)):
            out |= 1 << i
    return out


def ground_vars(phi: PosFormula) -> frozenset[str]:
    return phi.index.names(ground_mask(phi))


def pos_project(phi: PosFormula, names: Iterable[str]) -> PosFormula:
    """Existentially quantify ``names`` away (the variables stay in ``vi``)."""
    idx = phi.index
    levels = frozenset(idx.pos[n] for n in names)
    return PosFormula(phi.vi, bdd.exists(phi.node, levels))


def pos_lub(a: PosFormula, b: PosFormula) -> PosFormula:
    _same_vi(a, b)
    return PosFormula(a.vi, bdd.disj(a.node, b.node))


def pos_conj(a: PosFormula, b: PosFormula) -> PosFormula:
    _same_vi(a, b)
    return PosFormula(a.vi, bdd.conj(a.node, b.node))


def pos_leq(a: PosFormula, b: PosFormula) -> bool:
    """``a`` is at least as precise as ``b`` (``a`` entails ``b``)."""
    _same_vi(a, b)
    return bdd.entails(a.node, b.node)


def entails_binary_disjunction(phi: PosFormula, x: str, y: str) -> bool:
    idx = phi.index
    return bdd.entails(phi.node, bdd.disj(_var_node(idx, x), _var_node(idx, y)))


def entails_iff(phi: PosFormula, x: str, y: str) -> bool:
    idx = phi.index
    return bdd.entails(phi.node, bdd.iff(_var_node(idx, x), _var_node(idx, y)))


def ground_equiv_classes(phi: PosFormula) -> list[frozenset[str]]:
    """Finest partition of ``vi`` into ground-equivalent variables."""
    classes: list[list[str]] = []
    for v in phi.vi:
        for cls in classes:
            if entails_iff(phi, cls[0], v):
                cls.append(v)
                break
        else:
            classes.append([v])
    return [frozenset(c) for c in classes]


def models(phi: PosFormula, bound: int = DEFAULT_MODEL_BOUND) -> frozenset[frozenset[str]]:
    """Every model, as the set of variables it makes true."""
    return frozenset(phi.index.names(m) for m in model_masks(phi, bound))


def model_masks(phi: PosFormula, bound: int = DEFAULT_MODEL_BOUND) -> frozenset[int]:
    if len(phi.vi) > bound:
        raise ModelBoundExceeded(
            f"{len(phi.vi)} variables of interest exceed the enumeration bound {bound}"
        )
    return frozenset(bdd.iter_models(phi.node, len(phi.vi)))


# ---------------------------------------------------------------------------
# Changing the variables of interest
# ---------------------------------------------------------------------------


def extend(phi: PosFormula, other: PosFormula) -> PosFormula:
    """Conjunction of two formulas over disjoint variable tuples; ``vi`` is
    the concatenation."""
    clash = set(phi.vi) & set(other.vi)
    if clash:
        raise ValueError(f"variables not disjoint: {sorted(clash)}")
    n = len(phi.vi)
    shifted = bdd.relabel(other.node, {i: i + n for i in range(len(other.vi))})
    return PosFormula(phi.vi + other.vi, bdd.conj(phi.node, shifted))


def restrict(phi: PosFormula, keep: Iterable[str]) -> PosFormula:
    """Project onto ``keep`` (in the order of ``phi.vi``) and drop the rest."""
    keep = set(keep)
    gone = frozenset(i for i, v in enumerate(phi.vi) if v not in keep)
    node = bdd.exists(phi.node, gone)
    mapping, j = {}, 0
    for i, v in enumerate(phi.vi):
        if v in keep:
            mapping[i] = j
            j += 1
    return PosFormula(tuple(v for v in phi.vi if v in keep), bdd.relabel(node, mapping))


def rename(phi: PosFormula, mapping: dict[str, str]) -> PosFormula:
    return PosFormula(tuple(mapping.get(v, v) for v in phi.vi), phi.node)


def _same_vi(a: PosFormula, b: PosFormula) -> None:
    if a.vi != b.vi:
        raise ValueError(f"variables of interest differ: {a.vi} vs {b.vi}")


# ---------------------------------------------------------------------------
# Text form
# ---------------------------------------------------------------------------


def to_text(phi: PosFormula) -> str:
    """Disjunctive rendering of the BDD; meant for debugging output."""
    if phi.node == bdd.TRUE:
        return "true"
    if phi.node == bdd.FALSE:
        return "false"
    terms = []
    for path in _paths(phi.node):
        lits = [phi.vi[lv] if val else "~" + phi.vi[lv] for lv, val in path]
        terms.append("&".join(lits) if lits else "true")
    return " \\/ ".join(terms)


def _paths(u: int, prefix: tuple = ()):
    if u == bdd.FALSE:
        return
    if u == bdd.TRUE:
        yield prefix
        return
    lv = int(bdd.level(u))
    yield from _paths(bdd.low(u), prefix + ((lv, False),))
    yield from _paths(bdd.high(u), prefix + ((lv, True),))


_FTOKEN = re.compile(r"\s*(<->|\\/|/\\|&|\||\(|\)|[A-Za-z_][A-Za-z0-9_]*)")


class _FormulaReader:
    def __init__(self, text: str, idx: VarIndex) -> None:
        self.idx = idx
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _FTOKEN.match(text, pos)
            if not m:
                raise ValueError(f"bad formula syntax at {text[pos:]!r}")
            self.toks.append(m.group(1))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def read(self) -> int:
        u = self.iff()
        if self.peek() is not None:
            raise ValueError(f"trailing input at {self.peek()!r}")
        return u

    def iff(self) -> int:
        parts = [self.disj()]
        while self.peek() == "<->":
            self.take()
            parts.append(self.disj())
        out = bdd.TRUE
        for a, b in zip(parts, parts[1:]):
            out = bdd.conj(out, bdd.iff(a, b))
        return parts[0] if len(parts) == 1 else out

    def disj(self) -> int:
        u = self.conj()
        while self.peek() in ("\\/", "|"):
            self.take()
            u = bdd.disj(u, self.conj())
        return u

    def conj(self) -> int:
        u = self.atom()
        while self.peek() in ("&", "/\\"):
            self.take()
            u = bdd.conj(u, self.atom())
        return u

    def atom(self) -> int:
        t = self.take()
        if t == "(":
            u = self.iff()
            if self.take() != ")":
                raise ValueError("missing ')'")
            return u
        if t == "true":
            return bdd.TRUE
        if t is None or t not in self.idx.pos:
            raise ValueError(f"unknown variable {t!r} (variables: {self.idx.vi})")
        return bdd.var(self.idx.pos[t])
