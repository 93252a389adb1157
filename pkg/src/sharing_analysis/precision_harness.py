"""Precision metrics for analysis results, their comparison, and the
command-line front end.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from . import groundness_pos as P
from . import set_sharing as S
from .fixpoint_engine import (
    DOMAINS,
    MODES,
    AnalysisResult,
    Combined,
    Config,
    ConfigError,
    PredicateResult,
    State,
    analyze,
)
from .enhancements import OrderingStrategy
from .mode_domains import SflElement, SgflElement
from .groundness_pos import PosFormula
from .set_sharing import SharingSet, VarIndex
from .kernel_terms import ParseError, UnsupportedConstruct, parse_goals, parse_program

QUANTITIES = ("I", "G", "F", "GF", "L")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    I: int = 0
    G: int = 0
    F: int = 0
    GF: int = 0
    L: int = 0
    unknown: bool = False

    def __add__(self, other: "Metrics") -> "Metrics":
        return Metrics(
            *(getattr(self, q) + getattr(other, q) for q in QUANTITIES),
            unknown=self.unknown or other.unknown,
        )

    def as_dict(self) -> dict:
        return {q: getattr(self, q) for q in QUANTITIES}


UNKNOWN = Metrics(unknown=True)


def _count(mask: int) -> int:
    return mask.bit_count()


def _sharing_independent(vi: tuple[str, ...], sh) -> set[int]:
    return S.independent_pairs(sh, (1 << len(vi)) - 1)


def _pos_independent(phi: PosFormula) -> set[int]:
    """Pairs with at least one of the two variables ground in every model."""
    idx = phi.index
    return {
        idx.bit(x) | idx.bit(y)
        for x, y in combinations(phi.vi, 2)
        if P.entails_binary_disjunction(phi, x, y)
    }


def pattern_metrics(state: Optional[State], vi: Sequence[str]) -> Metrics:
    """Counts for one call or success pattern.

    ``None`` (the pattern is never reached, or the predicate always fails)
    counts as every variable ground and every pair independent.
    """
    vi = tuple(vi)
    n = len(vi)
    full = (1 << n) - 1
    if state is None:
        return Metrics(I=n * (n - 1) // 2, G=n, F=0, GF=n, L=n)
    if isinstance(state, PosFormula):
        g = P.ground_mask(state)
        return Metrics(I=len(_pos_independent(state)), G=_count(g), F=0, GF=_count(g), L=_count(g))
    if isinstance(state, SharingSet):
        g = full & ~S.vars_of(state.groups)
        pairs = _sharing_independent(vi, state.groups)
        return Metrics(I=len(pairs), G=_count(g), F=0, GF=_count(g), L=_count(g))
    phi = None
    if isinstance(state, Combined):
        phi, state = state.phi, state.d
    g = full & ~S.vars_of(state.sh)
    pairs = _sharing_independent(vi, state.sh)
    if phi is not None:
        g |= P.ground_mask(phi)
        pairs |= _pos_independent(phi)
    f = state.f & ~g
    gf = state.gf | g if isinstance(state, SgflElement) else g | f
    return Metrics(I=len(pairs), G=_count(g), F=_count(f), GF=_count(gf), L=_count(state.l | g))


def predicate_metrics(pr: PredicateResult, goal_dependent: bool) -> Metrics:
    m = pattern_metrics(pr.success, pr.vi)
    if goal_dependent:
        m = m + pattern_metrics(pr.call, pr.vi)
    return m


def measure(result: AnalysisResult) -> Metrics:
    """Totals over every predicate, each weighted once: success patterns in
    goal-independent mode, call and success patterns in goal-dependent mode."""
    if result.timed_out:
        return UNKNOWN
    gd = result.config.mode == "gd"
    total = Metrics()
    for key in sorted(result.predicates):
        total = total + predicate_metrics(result.predicates[key], gd)
    return total


# ---------------------------------------------------------------------------
# JSON encoding of results
# ---------------------------------------------------------------------------


def _names(vi: tuple[str, ...], mask: int) -> list[str]:
    return [x for x in vi if VarIndex(vi).bit(x) & mask]


def encode_state(state: Optional[State]) -> Optional[dict]:
    if state is None:
        return None
    out: dict = {}
    if isinstance(state, PosFormula):
        return {"pos": P.to_text(state)}
    if isinstance(state, Combined):
        out["pos"] = P.to_text(state.phi)
        state = state.d
    vi = state.vi
    groups = state.groups if isinstance(state, SharingSet) else state.sh
    out["sh"] = sorted((_names(vi, s) for s in groups), key=lambda g: (len(g), g))
    if isinstance(state, (SflElement, SgflElement)):
        out["f"] = _names(vi, state.f)
        if isinstance(state, SgflElement):
            out["gf"] = _names(vi, state.gf)
        out["l"] = _names(vi, state.l)
    return out


def result_to_json(benchmark: str, result: AnalysisResult) -> dict:
    gd = result.config.mode == "gd"
    per = []
    for key in sorted(result.predicates):
        pr = result.predicates[key]
        entry = {"name": pr.name, "arity": pr.arity, "success": encode_state(pr.success)}
        if gd:
            entry["call"] = encode_state(pr.call)
        per.append(entry)
    metrics = measure(result)
    return {
        "benchmark": benchmark,
        "config": result.config.as_dict(),
        "status": result.status,
        "elapsed": round(result.elapsed, 4),
        "per_predicate": per,
        "metrics": None if metrics.unknown else metrics.as_dict(),
    }


def metrics_from_json(doc: Mapping) -> Metrics:
    if doc.get("status") != "ok" or doc.get("metrics") is None:
        return UNKNOWN
    return Metrics(**{q: int(doc["metrics"][q]) for q in QUANTITIES})


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

CLASSES = (
    "p > 20",
    "10 < p <= 20",
    "5 < p <= 10",
    "2 < p <= 5",
    "0 < p <= 2",
    "same",
    "-2 <= p < 0",
    "-5 <= p < -2",
    "-10 <= p < -5",
    "-20 <= p < -10",
    "p < -20",
    "unknown",
)
_BOUNDS = (20, 10, 5, 2, 0)


def percent_change(base: int, new: int) -> Optional[Fraction]:
    """Exact percentage change; ``None`` stands for an unbounded gain or loss
    from a zero baseline."""
    if base == new:
        return Fraction(0)
    if base == 0:
        return None
    return Fraction(new - base, base) * 100


def classify(base: int, new: int) -> str:
    if new == base:
        return "same"
    p = percent_change(base, new)
    up = new > base
    if p is None:
        return CLASSES[0] if up else CLASSES[10]
    mag = abs(p)
    for i, b in enumerate(_BOUNDS):
        if mag > b:
            return CLASSES[i] if up else CLASSES[10 - i]
    raise AssertionError("unreachable")


def _rank(cls: str) -> int:
    """Larger is a bigger improvement; degradations are negative."""
    i = CLASSES.index(cls)
    return 5 - i


def overall_class(classes: Iterable[str]) -> str:
    """The largest improvement, unless some quantity got worse, in which
    case the largest degradation."""
    classes = list(classes)
    if "unknown" in classes:
        return "unknown"
    ranks = [_rank(c) for c in classes]
    if min(ranks) < 0:
        return CLASSES[5 - min(ranks)]
    return CLASSES[5 - max(ranks)]


@dataclass
class Comparison:
    benchmarks: list[str]
    per_benchmark: dict[str, dict[str, str]]
    deltas: dict[str, dict[str, Optional[float]]]
    distribution: dict[str, dict[str, float]]

    def as_dict(self) -> dict:
        return asdict(self)


def compare(
    baseline: Mapping[str, Metrics], enhanced: Mapping[str, Metrics], quantities=QUANTITIES
) -> Comparison:
    if set(baseline) != set(enhanced):
        only_b = sorted(set(baseline) - set(enhanced))
        only_e = sorted(set(enhanced) - set(baseline))
        raise ValueError(
            f"benchmark sets differ: only in baseline {only_b}, only in enhanced {only_e}"
        )
    names = sorted(baseline)
    columns = list(quantities) + ["O"]
    per: dict[str, dict[str, str]] = {}
    deltas: dict[str, dict[str, Optional[float]]] = {}
    for name in names:
        b, e = baseline[name], enhanced[name]
        row: dict[str, str] = {}
        drow: dict[str, Optional[float]] = {}
        for q in quantities:
            if b.unknown or e.unknown:
                row[q], drow[q] = "unknown", None
                continue
            x, y = getattr(b, q), getattr(e, q)
            row[q] = classify(x, y)
            p = percent_change(x, y)
            drow[q] = None if p is None else float(p)
        row["O"] = overall_class(row[q] for q in quantities)
        per[name], deltas[name] = row, drow
    dist = {}
    for col in columns:
        counts = {c: 0 for c in CLASSES}
        for name in names:
            counts[per[name][col]] += 1
        total = len(names)
        dist[col] = {c: (100.0 * k / total if total else 0.0) for c, k in counts.items()}
    return Comparison(names, per, deltas, dist)


def comparison_table(cmp: Comparison) -> str:
    """Classes as rows and quantities as columns, percentages of benchmarks."""
    columns = list(cmp.distribution)
    rows = [c for c in CLASSES if any(cmp.distribution[col][c] for col in columns)]
    if not rows:
        rows = ["same"]
    width = max(len(r) for r in rows + ["class"])
    lines = ["class".ljust(width) + "".join(f"{c:>8}" for c in columns)]
    for r in rows:
        lines.append(r.ljust(width) + "".join(f"{cmp.distribution[c][r]:8.1f}" for c in columns))
    return "\n".join(lines)


def metrics_table(docs: Sequence[Mapping]) -> str:
    header = ["benchmark", "domain", "mode", "status", *QUANTITIES]
    rows = []
    for d in docs:
        m = d.get("metrics") or {}
        rows.append(
            [d["benchmark"], d["config"]["domain"], d["config"]["mode"], d["status"]]
            + [str(m.get(q, "-")) for q in QUANTITIES]
        )
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    return "\n".join("  ".join(str(x).ljust(w) for x, w in zip(r, widths)) for r in [header, *rows])


# ---------------------------------------------------------------------------
# Bundled corpus
# ---------------------------------------------------------------------------


def corpus_files() -> list[Path]:
    root = resources.files(__package__) / "corpus"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".pl"))


def corpus_program(name: str):
    for p in corpus_files():
        if p.stem == name:
            return parse_program(p.read_text())
    raise KeyError(name)


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sharing-analysis", description="Sharing, freeness and groundness analysis."
    )
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="analyze Prolog programs")
    an.add_argument("programs", nargs="*", type=Path, help="Prolog source files")
    an.add_argument("--corpus", action="store_true", help="also analyze every bundled program")
    an.add_argument("--domain", choices=DOMAINS, default="sfl")
    an.add_argument("--mode", choices=MODES, default="gi")
    an.add_argument("--order", choices=[o.value for o in OrderingStrategy], default="textual")
    an.add_argument("--klin", action="store_true", help="improved linearity in amgu")
    an.add_argument("--free-split", action="store_true", help="split on free variables")
    an.add_argument("--compound-reduce", action="store_true", help="compoundness reduction")
    an.add_argument("--occurs-check", action="store_true", help="assume unification with occurs-check")
    psd = an.add_mutually_exclusive_group()
    psd.add_argument("--psd", dest="psd", action="store_true", default=None,
                     help="pair-sharing backend")
    psd.add_argument("--no-psd", dest="psd", action="store_false", help="full set-sharing backend")
    an.add_argument("--timeout", type=float, default=600.0, help="seconds per analysis")
    an.add_argument("--entry", action="append", default=[], metavar="GOAL",
                    help="entry goal for --mode gd (repeatable)")
    an.add_argument("--goals", type=Path, help="file of entry goals, one per line")
    an.add_argument("--out", type=Path, help="write output here instead of stdout")
    an.add_argument("--format", choices=("json", "table"), default="json")

    cp = sub.add_parser("compare", help="compare the metrics of two sets of results")
    cp.add_argument("--baseline", type=Path, required=True)
    cp.add_argument("--enhanced", type=Path, required=True)
    cp.add_argument("--out", type=Path)
    cp.add_argument("--format", choices=("json", "table"), default="table")

    sub.add_parser("corpus", help="list the bundled programs")
    return ap


class _UsageError(Exception):
    pass


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _load_docs(path: Path) -> list[dict]:
    doc = json.loads(path.read_text())
    return doc if isinstance(doc, list) else [doc]


def _metrics_by_benchmark(docs: Sequence[Mapping]) -> dict[str, Metrics]:
    out = {}
    for d in docs:
        if d["benchmark"] in out:
            raise _UsageError(f"benchmark {d['benchmark']!r} appears twice")
        out[d["benchmark"]] = metrics_from_json(d)
    return out


def _cmd_analyze(args) -> int:
    cfg = Config(
        domain=args.domain,
        mode=args.mode,
        order=args.order,
        klin=args.klin,
        free_split=args.free_split,
        compound_reduce=args.compound_reduce,
        occurs_check=args.occurs_check,
        psd=args.psd,
        timeout=args.timeout,
    ).validate()
    paths = list(args.programs) + (corpus_files() if args.corpus else [])
    if not paths:
        raise _UsageError("no programs given")
    extra = tuple(parse_goals("\n".join(args.entry)))
    if args.goals:
        extra += parse_goals(args.goals.read_text())
    docs = []
    for path in paths:
        program = parse_program(Path(path).read_text())
        if extra:
            program = replace(program, entries=program.entries + extra)
        result = analyze(program, cfg)
        docs.append(result_to_json(Path(path).stem, result))
    if args.format == "table":
        _emit(metrics_table(docs), args.out)
    else:
        _emit(json.dumps(docs[0] if len(docs) == 1 else docs, indent=2), args.out)
    return 0


def _cmd_compare(args) -> int:
    base = _metrics_by_benchmark(_load_docs(args.baseline))
    enh = _metrics_by_benchmark(_load_docs(args.enhanced))
    try:
        cmp = compare(base, enh)
    except ValueError as e:
        raise _UsageError(str(e)) from None
    if args.format == "json":
        _emit(json.dumps(cmp.as_dict(), indent=2), args.out)
    else:
        _emit(comparison_table(cmp), args.out)
    return 0


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Exit code 0 on success, 1 when an input cannot be analyzed, 2 on usage errors."""
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "corpus":
            _emit("\n".join(str(p) for p in corpus_files()), None)
            return 0
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_analyze(args)
    except (ConfigError, _UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ParseError, UnsupportedConstruct, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
