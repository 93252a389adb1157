"""Bottom-up analysis driver: domain adapters, a weak topological ordering of
the call graph, and goal-independent / goal-dependent fixpoint iteration.
"""

from __future__ import annotations

import heapq
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence, Union

from . import enhancements as E
from . import mode_domains as M
from . import groundness_pos as P
from . import set_sharing as S
from .mode_domains import SflElement, SgflElement
from .groundness_pos import PosFormula
from .set_sharing import SharingSet
from .kernel_terms import (
    Bind,
    Binding,
    Call,
    Clause,
    Const,
    NormalClause,
    PredKey,
    Program,
    Struct,
    Var,
    normalize_clause,
    normalize_program,
)

DOMAINS = ("sh", "psd", "sfl", "sfl2", "sgfl2", "pos", "pos_x_sfl2", "pos_red_sfl")
PSD_BY_DEFAULT = frozenset({"psd", "sfl2", "sgfl2", "pos_x_sfl2"})
SFL_DOMAINS = frozenset({"sfl", "sfl2", "pos_x_sfl2", "pos_red_sfl"})
FREENESS_DOMAINS = SFL_DOMAINS | {"sgfl2"}
MODES = ("gi", "gd")
ENTRY: PredKey = ("$entry", 0)


class ConfigError(ValueError):
    """An incompatible combination of analysis options."""


@dataclass(frozen=True)
class Config:
    domain: str = "sfl"
    mode: str = "gi"
    order: str = "textual"
    klin: bool = False
    free_split: bool = False
    compound_reduce: bool = False
    occurs_check: bool = False
    psd: Optional[bool] = None  # None picks the domain's default backend
    timeout: float = 600.0

    @property
    def uses_psd(self) -> bool:
        return self.domain in PSD_BY_DEFAULT if self.psd is None else self.psd

    def validate(self) -> "Config":
        if self.domain not in DOMAINS:
            raise ConfigError(f"unknown domain {self.domain!r}; choose from {', '.join(DOMAINS)}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose gi or gd")
        E.OrderingStrategy(self.order)
        if self.domain == "pos_red_sfl" and self.uses_psd:
            raise ConfigError(
                "pos_red_sfl filters groups through Pos models, which is unsound on "
                "the pair-sharing backend; drop --psd"
            )
        if self.free_split:
            if self.domain not in SFL_DOMAINS:
                raise ConfigError(f"--free-split needs an SFL domain, not {self.domain}")
            if self.uses_psd:
                raise ConfigError(
                    "--free-split is unsound on the pair-sharing backend; use --no-psd "
                    "or a full-sharing domain (sfl, pos_red_sfl)"
                )
        if self.klin and self.domain not in SFL_DOMAINS:
            raise ConfigError(f"--klin needs an SFL domain, not {self.domain}")
        if self.compound_reduce and self.domain not in FREENESS_DOMAINS:
            raise ConfigError(f"--compound-reduce needs freeness information, not {self.domain}")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        return self

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "mode": self.mode,
            "order": self.order,
            "klin": self.klin,
            "free_split": self.free_split,
            "compound_reduce": self.compound_reduce,
            "occurs_check": self.occurs_check,
            "psd": self.uses_psd,
            "timeout": self.timeout,
        }


# ---------------------------------------------------------------------------
# Domain adapters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Combined:
    """A Pos formula next to an SFL description over the same variables."""

    phi: PosFormula
    d: SflElement

    @property
    def vi(self) -> tuple[str, ...]:
        return self.d.vi

    def __str__(self) -> str:
        return f"{self.d} & {self.phi}"


State = Union[SharingSet, PosFormula, SflElement, SgflElement, Combined]


class Domain:
    """Operations the fixpoint driver needs, for one configured domain."""

    orderable = True

    def __init__(self, cfg: Config) -> None:
        self.cfg = cfg
        self.psd = cfg.uses_psd
        # argument for the unification operators' ``psd`` parameter
        self.closure = "compact" if self.psd else False

    # elements
    def initial(self, vi: Sequence[str]) -> State: ...
    def top(self, vi: Sequence[str]) -> State: ...
    def extend(self, a: State, b: State) -> State: ...
    def restrict(self, a: State, keep: Iterable[str]) -> State: ...
    def rename(self, a: State, mapping: dict[str, str]) -> State: ...
    def lub(self, a: State, b: State) -> State: ...
    def equal(self, a: State, b: State) -> bool: ...

    def bind(self, a: State, b: Binding, compound: frozenset = frozenset()) -> Optional[State]:
        """Apply one binding; ``None`` means the computation definitely fails."""
        ...

    def view(self, a: State):
        """The description the ordering heuristics look at."""
        return a

    def join(self, a: Optional[State], b: Optional[State]) -> Optional[State]:
        if a is None:
            return b
        if b is None:
            return a
        return self.lub(a, b)

    def same(self, a: Optional[State], b: Optional[State]) -> bool:
        if a is None or b is None:
            return a is b
        return self.equal(a, b)

    def trim(self, groups):
        """On the pair-sharing backend, drop groups implied by smaller ones."""
        return S.rho_reduce(groups) if self.psd else groups


def _shift_groups(groups, n: int):
    return frozenset(g << n for g in groups)


class SharingDomain(Domain):
    def initial(self, vi):
        return SharingSet.singletons(vi)

    def top(self, vi):
        return SharingSet.full(vi)

    def extend(self, a, b):
        _disjoint(a.vi, b.vi)
        return SharingSet(a.vi + b.vi, a.groups | _shift_groups(b.groups, len(a.vi)))

    def restrict(self, a, keep):
        keep = set(keep)
        km = a.index.mask(v for v in a.vi if v in keep)
        groups = frozenset(c for c in (S.compress(g, km) for g in a.groups) if c)
        return SharingSet(tuple(v for v in a.vi if v in keep), groups)

    def rename(self, a, mapping):
        return SharingSet(tuple(mapping.get(v, v) for v in a.vi), a.groups)

    def lub(self, a, b):
        return SharingSet(a.vi, self.trim(a.groups | b.groups))

    def equal(self, a, b):
        return S.rho_eq(a.groups, b.groups) if self.psd else a.groups == b.groups

    def bind(self, a, b, compound=frozenset()):
        x, t = S.binding_masks(a.index, b)
        return SharingSet(a.vi, self.trim(S.amgu(a.groups, x, t, self.closure)))


class PosDomain(Domain):
    orderable = False

    def initial(self, vi):
        return PosFormula.true(vi)

    top = initial

    def extend(self, a, b):
        return P.extend(a, b)

    def restrict(self, a, keep):
        return P.restrict(a, keep)

    def rename(self, a, mapping):
        return P.rename(a, mapping)

    def lub(self, a, b):
        return P.pos_lub(a, b)

    def equal(self, a, b):
        return a.node == b.node

    def bind(self, a, b, compound=frozenset()):
        return P.pos_amgu(a, b)


class SflDomain(Domain):
    def __init__(self, cfg: Config, gf: bool = False) -> None:
        super().__init__(cfg)
        self.cls = SgflElement if gf else SflElement

    def initial(self, vi):
        return self.cls.initial(vi)

    def top(self, vi):
        return self.cls.top(vi)

    def extend(self, a, b):
        return M.extend(a, b)

    def restrict(self, a, keep):
        return M.restrict(a, keep)

    def rename(self, a, mapping):
        return M.rename(a, mapping)

    def lub(self, a, b):
        out = M.sfl_lub(a, b)
        return replace(out, sh=self.trim(out.sh)) if self.psd else out

    def equal(self, a, b):
        return M.sfl_equal(a, b, rho=self.psd)

    def bind(self, a, b, compound=frozenset()):
        cfg = self.cfg
        if cfg.compound_reduce:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", E.EnhancementSkipped)
                a = E.compound_reduce(a, b, compound, cfg.occurs_check)
            if a is E.BOTTOM:
                return None
        if isinstance(a, SgflElement):
            out = M.amgu_sgfl(a, b, self.closure)
        elif cfg.free_split:
            out = E.amgu_free_split(a, b)
        elif cfg.klin:
            out = E.amgu_klin(a, b, self.closure)
        else:
            out = M.amgu_sfl(a, b, self.closure)
        if self.psd:
            out = replace(out, sh=self.trim(out.sh))
        return M.canonical(out)


class ProductDomain(Domain):
    """Pos alongside SFL; with ``reduce`` the sharing groups are also
    filtered through the models of the Pos component."""

    def __init__(self, cfg: Config, reduce: bool) -> None:
        super().__init__(cfg)
        self.sfl = SflDomain(cfg)
        self.reduce = reduce

    def initial(self, vi):
        return Combined(PosFormula.true(vi), SflElement.initial(vi))

    def top(self, vi):
        return Combined(PosFormula.true(vi), SflElement.top(vi))

    def extend(self, a, b):
        return Combined(P.extend(a.phi, b.phi), M.extend(a.d, b.d))

    def restrict(self, a, keep):
        keep = list(keep)
        return Combined(P.restrict(a.phi, keep), M.restrict(a.d, keep))

    def rename(self, a, mapping):
        return Combined(P.rename(a.phi, mapping), M.rename(a.d, mapping))

    def lub(self, a, b):
        return Combined(P.pos_lub(a.phi, b.phi), self.sfl.lub(a.d, b.d))

    def equal(self, a, b):
        return a.phi.node == b.phi.node and M.sfl_equal(a.d, b.d, rho=self.psd)

    def bind(self, a, b, compound=frozenset()):
        phi = P.pos_amgu(a.phi, b)
        d = self.sfl.bind(a.d, b, compound)
        if d is None:
            return None
        if self.reduce:
            d = replace(d, sh=E.reduce_groups(phi, d.sh))
        return Combined(phi, M.canonical(E.apply_groundness(phi, d)))

    def view(self, a):
        return a.d


def make_domain(cfg: Config) -> Domain:
    cfg.validate()
    if cfg.domain in ("sh", "psd"):
        return SharingDomain(cfg)
    if cfg.domain == "pos":
        return PosDomain(cfg)
    if cfg.domain == "sgfl2":
        return SflDomain(cfg, gf=True)
    if cfg.domain in ("sfl", "sfl2"):
        return SflDomain(cfg)
    return ProductDomain(cfg, reduce=cfg.domain == "pos_red_sfl")


def top_element(domain: str, vi: Sequence[str]) -> State:
    """Description of distinct unaliased free variables, the usual starting
    point for a call with fresh arguments."""
    return make_domain(Config(domain=domain)).initial(tuple(vi))


def _disjoint(a: Sequence[str], b: Sequence[str]) -> None:
    clash = set(a) & set(b)
    if clash:
        raise ValueError(f"variables not disjoint: {sorted(clash)}")


# ---------------------------------------------------------------------------
# Weak topological ordering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    head: PredKey
    body: tuple  # of PredKey | Component

    def members(self) -> list[PredKey]:
        out = [self.head]
        for el in self.body:
            out.extend(el.members() if isinstance(el, Component) else [el])
        return out


Wto = tuple  # of PredKey | Component


def call_graph(normal: dict[PredKey, list[NormalClause]]) -> dict[PredKey, list[PredKey]]:
    """Callee -> callers edges over the defined predicates."""
    edges: dict[PredKey, list[PredKey]] = {p: [] for p in normal}
    for p, clauses in normal.items():
        for c in clauses:
            for call in c.calls():
                if call.pred in edges and p not in edges[call.pred]:
                    edges[call.pred].append(p)
    return edges


def weak_topological_order(program: Union[Program, dict]) -> Wto:
    """Bourdoncle's hierarchical ordering; callees come before callers."""
    normal = normalize_program(program) if isinstance(program, Program) else program
    succ = call_graph(normal)
    nodes = list(normal)
    dfn = {v: 0 for v in nodes}
    stack: list[PredKey] = []
    counter = [0]
    inf = float("inf")

    def visit(v, partition: list) -> float:
        stack.append(v)
        counter[0] += 1
        dfn[v] = head = counter[0]
        loop = False
        for w in succ[v]:
            low = dfn[w] if dfn[w] != 0 else visit(w, partition)
            if low <= head:
                head, loop = low, True
        if head == dfn[v]:
            dfn[v] = inf
            el = stack.pop()
            if loop:
                while el != v:
                    dfn[el] = 0
                    el = stack.pop()
                partition.insert(0, component(v))
            else:
                partition.insert(0, v)
        return head

    def component(v) -> Component:
        part: list = []
        for w in succ[v]:
            if dfn[w] == 0:
                visit(w, part)
        return Component(v, tuple(part))

    out: list = []
    for v in reversed(nodes):
        if dfn[v] == 0:
            visit(v, out)
    return tuple(out)


def flatten_wto(wto: Wto) -> list[PredKey]:
    out = []
    for el in wto:
        out.extend(el.members() if isinstance(el, Component) else [el])
    return out


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------


@dataclass
class PredicateResult:
    pred: PredKey
    vi: tuple[str, ...]
    success: Optional[State] = None
    call: Optional[State] = None

    @property
    def name(self) -> str:
        return self.pred[0]

    @property
    def arity(self) -> int:
        return self.pred[1]


@dataclass
class AnalysisResult:
    config: Config
    predicates: dict[PredKey, PredicateResult]
    timed_out: bool = False
    elapsed: float = 0.0
    wto: Wto = ()
    notes: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "timeout" if self.timed_out else "ok"

    def success(self, name: str, arity: int) -> Optional[State]:
        return self.predicates[(name, arity)].success


class _Timeout(Exception):
    pass


def head_names(arity: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(1, arity + 1))


def _callee_names(arity: int) -> tuple[str, ...]:
    # '@' cannot appear in a source variable name
    return tuple(f"@{i}" for i in range(1, arity + 1))


def _update_compound(compound: set[str], b: Binding) -> None:
    if isinstance(b.rhs, Struct):
        compound.add(b.lhs)
    elif isinstance(b.rhs, Var):
        if b.rhs.name in compound:
            compound.add(b.lhs)
        elif b.lhs in compound:
            compound.add(b.rhs.name)


class Analyzer:
    def __init__(self, program: Program, cfg: Config) -> None:
        self.cfg = cfg.validate()
        self.dom = make_domain(cfg)
        self.program = program
        self.normal = normalize_program(program)
        self.wto = weak_topological_order(self.normal)
        self.order = E.OrderingStrategy(cfg.order)
        self.success: dict[PredKey, Optional[State]] = {p: None for p in self.normal}
        self.calls: dict[PredKey, Optional[State]] = {p: None for p in self.normal}
        self.deadline = time.monotonic() + cfg.timeout
        self.on_call: Callable[[PredKey, PredKey, State, tuple], Optional[State]] = self._call_gi
        self.current: PredKey | None = None
        self.callers: dict[PredKey, set[PredKey]] = {}

    # -- clause evaluation -------------------------------------------------

    def run_bindings(self, s: State, bs: list[Binding], compound: set[str]) -> Optional[State]:
        dom = self.dom
        if dom.orderable and len(bs) > 1:
            frozen = frozenset(compound)

            def step(d, b):
                r = dom.bind(d, b, frozen)
                return d if r is None else r

            bs = E.order_bindings(self.order, s, bs, step, dom.view)
        for b in bs:
            if time.monotonic() > self.deadline:
                raise _Timeout
            s = dom.bind(s, b, frozenset(compound))
            if s is None:
                return None
            _update_compound(compound, b)
        return s

    def apply_pattern(self, s: State, args: tuple[str, ...], pattern: State) -> Optional[State]:
        """Conjoin a callee pattern over ``X1..Xn`` with the caller state."""
        dom = self.dom
        callee = _callee_names(len(args))
        p = dom.rename(pattern, dict(zip(head_names(len(args)), callee)))
        ext = dom.extend(s, p)
        bs = [Binding(a, Var(c)) for a, c in zip(args, callee)]
        out = self.run_bindings(ext, bs, set())
        if out is None:
            return None
        return dom.restrict(out, s.vi)

    def call_pattern(self, s: State, args: tuple[str, ...]) -> State:
        dom = self.dom
        callee = _callee_names(len(args))
        ext = dom.extend(s, dom.initial(callee))
        for a, c in zip(args, callee):
            ext = dom.bind(ext, Binding(c, Var(a)))
        out = dom.restrict(ext, callee)
        return dom.rename(out, dict(zip(callee, head_names(len(args)))))

    def eval_clause(self, c: NormalClause, entry: State) -> Optional[State]:
        if time.monotonic() > self.deadline:
            raise _Timeout
        s = entry
        compound: set[str] = set()
        body = c.body
        i = 0
        while i < len(body):
            item = body[i]
            if isinstance(item, Bind):
                run = []
                while i < len(body) and isinstance(body[i], Bind):
                    run.append(body[i].binding)
                    i += 1
                s = self.run_bindings(s, run, compound)
            else:
                s = self.on_call(c.pred, item.pred, s, item.args)
                i += 1
            if s is None:
                return None
        out = self.dom.restrict(s, c.head)
        return self.dom.rename(out, dict(zip(c.head, head_names(len(c.head)))))

    def clause_entry(self, c: NormalClause, call: Optional[State]) -> State:
        if call is None:
            return self.dom.initial(c.vi)
        pattern = self.dom.rename(call, dict(zip(head_names(len(c.head)), c.head)))
        rest = [v for v in c.vi if v not in set(c.head)]
        return self.dom.extend(pattern, self.dom.initial(rest))

    # -- calls -------------------------------------------------------------

    def _callee_success(self, q: PredKey) -> Optional[State]:
        if q in self.normal:
            return self.success[q]
        return self.dom.top(head_names(q[1]))

    def _call_gi(self, p, q, s, args):
        pattern = self._callee_success(q)
        if pattern is None:
            return None
        return self.apply_pattern(s, args, pattern)

    def _call_gd(self, p, q, s, args):
        if q in self.normal:
            self.callers.setdefault(q, set()).add(p)
            cp = self.call_pattern(s, args)
            old = self.calls[q]
            new = self.dom.join(old, cp)
            if not self.dom.same(old, new):
                self.calls[q] = new
                self._push(q)
        return self._call_gi(p, q, s, args)

    # -- predicate update ----------------------------------------------------

    def update(self, p: PredKey, goal_dependent: bool = False) -> bool:
        call = self.calls[p] if goal_dependent else None
        acc = None
        for c in self.normal[p]:
            acc = self.dom.join(acc, self.eval_clause(c, self.clause_entry(c, call)))
        old = self.success[p]
        new = self.dom.join(old, acc)
        if self.dom.same(old, new):
            return False
        self.success[p] = new
        return True

    # -- goal-independent iteration -----------------------------------------

    def _stabilize(self, elements: Iterable) -> bool:
        changed_any = False
        for el in elements:
            if isinstance(el, Component):
                while True:
                    changed = self.update(el.head)
                    changed = self._stabilize(el.body) or changed
                    if not changed:
                        break
                    changed_any = True
            else:
                changed_any = self.update(el) or changed_any
        return changed_any

    def run_gi(self) -> None:
        self._stabilize(self.wto)

    # -- goal-dependent iteration -------------------------------------------

    def _push(self, p: PredKey) -> None:
        if p not in self._queued:
            self._queued.add(p)
            heapq.heappush(self._heap, (self._rank[p], p))

    def run_gd(self, entries: Sequence) -> None:
        flat = flatten_wto(self.wto)
        self._rank = {p: i for i, p in enumerate(flat)}
        self._rank[ENTRY] = len(flat)
        self._heap, self._queued = [], set()
        self.on_call = self._call_gd
        entry_clauses = [
            normalize_clause(Clause(Const("$entry"), (g,), 0)) for g in entries
        ]
        self.normal[ENTRY] = entry_clauses
        self.calls[ENTRY] = self.dom.initial(())
        self.success[ENTRY] = None
        self._push(ENTRY)
        try:
            while self._heap:
                _, p = heapq.heappop(self._heap)
                self._queued.discard(p)
                if self.calls[p] is None:
                    continue
                if self.update(p, goal_dependent=True):
                    for caller in sorted(self.callers.get(p, ())):
                        self._push(caller)
        finally:
            del self.normal[ENTRY]
            self.calls.pop(ENTRY, None)
            self.success.pop(ENTRY, None)

    # -- driver --------------------------------------------------------------

    def run(self) -> AnalysisResult:
        start = time.monotonic()
        self.deadline = start + self.cfg.timeout
        timed_out = False
        notes = []
        try:
            with S.time_limit(self.deadline):
                if self.cfg.mode == "gd":
                    if not self.program.entries:
                        notes.append("goal-dependent mode without entry goals: nothing is called")
                    self.run_gd(self.program.entries)
                else:
                    self.run_gi()
        except (_Timeout, S.TimeLimitExceeded):
            timed_out = True
        preds = {}
        for p in self.normal:
            if p == ENTRY:
                continue
            preds[p] = PredicateResult(
                p,
                head_names(p[1]),
                self.success.get(p),
                self.calls.get(p) if self.cfg.mode == "gd" else None,
            )
        return AnalysisResult(
            self.cfg, preds, timed_out, time.monotonic() - start, self.wto, notes
        )


def analyze(program: Program, config: Config | None = None) -> AnalysisResult:
    """Analyze ``program``; ``config`` defaults to goal-independent SFL."""
    return Analyzer(program, config or Config()).run()
