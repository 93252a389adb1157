"""Terms, a reader for a small Prolog subset, and clause normalization.

Clauses are normalized into sequences of bindings ``x = t`` and calls whose
arguments are distinct-or-repeated variables; this is the shape every
abstract unification operator in the package consumes.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    """An atomic constant: an atom name or an integer."""

    value: Union[str, int]

    def __str__(self) -> str:
        if isinstance(self.value, int):
            return str(self.value)
        return quote_atom(self.value)


@dataclass(frozen=True)
class Struct:
    functor: str
    args: tuple["Term", ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("compound terms need at least one argument; use Const")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return format_term(self)


Term = Union[Var, Const, Struct]

NIL = Const("[]")


def mklist(items: Iterable[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Struct(".", (item, out))
    return out


def iter_vars(t: Term) -> Iterator[str]:
    """Yield every variable occurrence of ``t`` (with repetitions)."""
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            yield s.name
        elif isinstance(s, Struct):
            stack.extend(reversed(s.args))


def term_vars(t: Term) -> tuple[frozenset[str], Counter]:
    """Return ``(vars(t), mvars(t))``: the set and the multiset of variables."""
    mv = Counter(iter_vars(t))
    return frozenset(mv), mv


def term_depth(t: Term) -> int:
    if isinstance(t, Struct):
        return 1 + max(term_depth(a) for a in t.args)
    return 0


@dataclass(frozen=True)
class Binding:
    """An equation ``lhs = rhs``; ``lhs`` may occur in ``rhs`` (cyclic)."""

    lhs: str
    rhs: Term

    def __post_init__(self) -> None:
        if isinstance(self.rhs, Var) and self.rhs.name == self.lhs:
            raise ValueError(f"trivial binding {self.lhs} = {self.lhs}")

    @property
    def rhs_vars(self) -> frozenset[str]:
        return frozenset(iter_vars(self.rhs))

    @property
    def is_cyclic(self) -> bool:
        return self.lhs in self.rhs_vars

    def __str__(self) -> str:
        return f"{self.lhs} = {format_term(self.rhs)}"


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_SOLO_ATOMS = {"[]", "!", ";", "{}", ","}
_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_SYMBOL_ATOM = re.compile(r"[+\-*/\\^<>=~:.?@#&$]+\Z")


def quote_atom(name: str) -> str:
    if name in _SOLO_ATOMS or _PLAIN_ATOM.match(name) or _SYMBOL_ATOM.match(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return str(t)
    if t.functor == "." and t.arity == 2:
        items = []
        while isinstance(t, Struct) and t.functor == "." and t.arity == 2:
            items.append(format_term(t.args[0]))
            t = t.args[1]
        body = ",".join(items)
        if t == NIL:
            return f"[{body}]"
        return f"[{body}|{format_term(t)}]"
    if t.arity == 2 and t.functor in INFIX_OPS:
        left, right = (format_term(a) for a in t.args)
        return f"({left} {t.functor} {right})"
    if t.arity == 1 and t.functor in PREFIX_OPS:
        return f"{t.functor}({format_term(t.args[0])})"
    args = ",".join(format_term(a) for a in t.args)
    return f"{quote_atom(t.functor)}({args})"


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------

# name -> (priority, type)
INFIX_OPS: dict[str, tuple[int, str]] = {
    ":-": (1200, "xfx"),
    ";": (1100, "xfy"),
    "->": (1050, "xfy"),
    ",": (1000, "xfy"),
    "=": (700, "xfx"),
    "\\=": (700, "xfx"),
    "==": (700, "xfx"),
    "\\==": (700, "xfx"),
    "<": (700, "xfx"),
    ">": (700, "xfx"),
    "=<": (700, "xfx"),
    ">=": (700, "xfx"),
    "=:=": (700, "xfx"),
    "=\\=": (700, "xfx"),
    "@<": (700, "xfx"),
    "@>": (700, "xfx"),
    "@=<": (700, "xfx"),
    "@>=": (700, "xfx"),
    "is": (700, "xfx"),
    "+": (500, "yfx"),
    "-": (500, "yfx"),
    "*": (400, "yfx"),
    "/": (400, "yfx"),
    "//": (400, "yfx"),
    "mod": (400, "yfx"),
}
PREFIX_OPS: dict[str, tuple[int, str]] = {
    ":-": (1200, "fx"),
    "\\+": (900, "fy"),
    "-": (200, "fy"),
}


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnsupportedConstruct(Exception):
    def __init__(self, construct: str, line: int | None = None) -> None:
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unsupported construct: {construct}{where}")
        self.construct = construct
        self.line = line


@dataclass(frozen=True)
class Token:
    kind: str  # var, atom, qatom, int, punct, end, eof
    text: str
    line: int
    col: int
    # whether a "(" follows immediately (functional notation)
    call: bool = False


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>'(?:[^'\\]|\\.|'')*')
  | (?P<punct>\(|\)|\[|\]|\{|\}|,|\|)
  | (?P<solo>!|;)
  | (?P<sym>[+\-*/\\^<>=~:.?@#&$]+)
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        end = m.end()
        if kind == "sym" and s.startswith(".") and (
            end == pos + 1 and (end == len(text) or text[end].isspace() or text[end] == "%")
        ):
            tokens.append(Token("end", ".", line, col))
        elif kind == "sym" and s.endswith(".") and len(s) > 1 and (
            end == len(text) or text[end].isspace() or text[end] == "%"
        ):
            # e.g. "X = []." never hits this, but "a =.." style symbol runs do
            end -= 1
            tokens.append(Token("atom", s[:-1], line, col, call=False))
        elif kind == "ws":
            pass
        elif kind == "qatom":
            body = s[1:-1].replace("''", "'")
            body = re.sub(r"\\(.)", r"\1", body)
            call = end < len(text) and text[end] == "("
            tokens.append(Token("qatom", body, line, col, call))
        elif kind in ("atom", "sym", "solo"):
            call = end < len(text) and text[end] == "("
            tokens.append(Token("atom", s, line, col, call))
        else:
            tokens.append(Token(kind, s, line, col))
        newlines = s.count("\n")
        if newlines:
            line += newlines
            line_start = pos + s.rindex("\n") + 1
        pos = end
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Reader:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.i = 0
        self.anon = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("punct", "atom", "end"):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def fresh_anon(self) -> Var:
        self.anon += 1
        return Var(f"_G{self.anon}")

    def is_term_start(self) -> bool:
        t = self.tok
        if t.kind in ("var", "int", "qatom"):
            return True
        if t.kind == "atom":
            return True
        return t.kind == "punct" and t.text in "([{"

    def read_clause(self) -> Term:
        t = self.parse(1200)
        if self.tok.kind != "end":
            raise self.error(f"operator expected, found {self.tok.text or 'end of input'!r}")
        self.advance()
        return t

    def parse(self, max_prec: int) -> Term:
        left, left_prec = self.parse_primary(max_prec)
        return self.parse_infix(left, left_prec, max_prec)

    def parse_infix(self, left: Term, left_prec: int, max_prec: int) -> Term:
        while True:
            t = self.tok
            name = t.text
            if t.kind == "punct" and name == ",":
                name = ","
            elif t.kind == "punct" and name == "|" and max_prec >= 1100:
                name = ";"
            elif t.kind != "atom":
                return left
            if name not in INFIX_OPS:
                return left
            prec, typ = INFIX_OPS[name]
            if prec > max_prec:
                return left
            la = prec - 1 if typ[0] == "x" else prec
            ra = prec - 1 if typ[2] == "x" else prec
            if left_prec > la:
                return left
            self.advance()
            right = self.parse(ra)
            left = Struct(name, (left, right))
            left_prec = prec

    def parse_arglist(self) -> list[Term]:
        self.expect("(")
        args = [self.parse(999)]
        while self.tok.kind == "punct" and self.tok.text == ",":
            self.advance()
            args.append(self.parse(999))
        self.expect(")")
        return args

    def parse_primary(self, max_prec: int) -> tuple[Term, int]:
        t = self.tok
        if t.kind == "var":
            self.advance()
            return (self.fresh_anon() if t.text == "_" else Var(t.text)), 0
        if t.kind == "int":
            self.advance()
            return Const(int(t.text)), 0
        if t.kind == "punct":
            if t.text == "(":
                self.advance()
                inner = self.parse(1200)
                self.expect(")")
                return inner, 0
            if t.text == "[":
                self.advance()
                if self.tok.kind == "punct" and self.tok.text == "]":
                    self.advance()
                    return NIL, 0
                items = [self.parse(999)]
                while self.tok.kind == "punct" and self.tok.text == ",":
                    self.advance()
                    items.append(self.parse(999))
                tail: Term = NIL
                if self.tok.kind == "punct" and self.tok.text == "|":
                    self.advance()
                    tail = self.parse(999)
                self.expect("]")
                return mklist(items, tail), 0
            if t.text == "{":
                raise UnsupportedConstruct("curly-brace term", t.line)
            raise self.error(f"unexpected {t.text!r}")
        if t.kind in ("atom", "qatom"):
            self.advance()
            name = t.text
            if t.call:
                return Struct(name, tuple(self.parse_arglist())), 0
            if t.kind == "atom" and name == "-" and self.tok.kind == "int":
                tok = self.advance()
                return Const(-int(tok.text)), 0
            if t.kind == "atom" and name in PREFIX_OPS and self.is_term_start() and not (
                self.tok.kind == "atom" and self.tok.text in INFIX_OPS and not self.tok.call
            ):
                prec, typ = PREFIX_OPS[name]
                if prec > max_prec:
                    prec = 999
                arg_max = prec - 1 if typ == "fx" else prec
                arg = self.parse(arg_max)
                return Struct(name, (arg,)), prec
            prec = 0
            if t.kind == "atom" and (name in INFIX_OPS or name in PREFIX_OPS):
                prec = max(INFIX_OPS.get(name, (0,))[0], PREFIX_OPS.get(name, (0,))[0])
                if prec > max_prec:
                    prec = 0
            return Const(name), prec
        if t.kind == "end":
            raise self.error("unexpected end of clause")
        raise self.error("unexpected end of input")


def read_terms(text: str) -> list[tuple[Term, int]]:
    """Read every clause-level term of ``text``, with its starting line."""
    reader = _Reader(tokenize(text))
    out = []
    while reader.tok.kind != "eof":
        line = reader.tok.line
        out.append((reader.read_clause(), line))
    return out


def parse_term(text: str) -> Term:
    text = text.strip()
    if not text.endswith("."):
        text += " ."
    terms = read_terms(text)
    if len(terms) != 1:
        raise ParseError("expected exactly one term", 1, 1)
    return terms[0][0]


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------

PredKey = tuple[str, int]


def pred_key(goal: Term) -> PredKey:
    if isinstance(goal, Struct):
        return goal.functor, goal.arity
    if isinstance(goal, Const) and isinstance(goal.value, str):
        return goal.value, 0
    raise ValueError(f"not a callable term: {goal}")


@dataclass(frozen=True)
class Clause:
    head: Term
    body: tuple[Term, ...]
    line: int = 0

    @property
    def pred(self) -> PredKey:
        return pred_key(self.head)

    @property
    def variables(self) -> tuple[str, ...]:
        """The clause's variables in order of first occurrence."""
        seen: dict[str, None] = {}
        for t in (self.head, *self.body):
            for v in iter_vars(t):
                seen.setdefault(v, None)
        return tuple(seen)

    def __str__(self) -> str:
        if not self.body:
            return f"{format_term(self.head)}."
        body = ", ".join(format_term(g) for g in self.body)
        return f"{format_term(self.head)} :- {body}."


@dataclass(frozen=True)
class Program:
    clauses: tuple[Clause, ...] = ()
    entries: tuple[Term, ...] = ()

    @property
    def predicates(self) -> tuple[PredKey, ...]:
        seen: dict[PredKey, None] = {}
        for c in self.clauses:
            seen.setdefault(c.pred, None)
        return tuple(seen)

    def clauses_for(self, pred: PredKey) -> tuple[Clause, ...]:
        return tuple(c for c in self.clauses if c.pred == pred)

    def __str__(self) -> str:
        lines = [f":- entry({format_term(e)})." for e in self.entries]
        lines += [str(c) for c in self.clauses]
        return "\n".join(lines) + ("\n" if lines else "")


_CONTROL = {(";", 2): "disjunction ';'/2", ("->", 2): "if-then-else '->'/2",
            ("\\+", 1): "negation '\\+'/1"}


def _flatten_conj(t: Term, line: int) -> list[Term]:
    if isinstance(t, Struct) and t.functor == "," and t.arity == 2:
        return _flatten_conj(t.args[0], line) + _flatten_conj(t.args[1], line)
    if isinstance(t, Var):
        raise UnsupportedConstruct(f"variable goal {t.name}", line)
    if isinstance(t, Const) and isinstance(t.value, int):
        raise UnsupportedConstruct(f"integer goal {t.value}", line)
    if isinstance(t, Struct) and (t.functor, t.arity) in _CONTROL:
        raise UnsupportedConstruct(_CONTROL[t.functor, t.arity], line)
    return [t]


def parse_program(text: str) -> Program:
    """Read a program: clauses plus ``:- entry(Goal).`` directives."""
    clauses: list[Clause] = []
    entries: list[Term] = []
    for term, line in read_terms(text):
        if isinstance(term, Struct) and term.functor == ":-" and term.arity == 1:
            d = term.args[0]
            if isinstance(d, Struct) and d.functor == "entry" and d.arity == 1:
                entries.append(d.args[0])
                continue
            raise UnsupportedConstruct(f"directive {format_term(d)}", line)
        if isinstance(term, Struct) and term.functor == ":-" and term.arity == 2:
            head, body = term.args
            goals = tuple(_flatten_conj(body, line))
        else:
            head, goals = term, ()
        if isinstance(head, Var) or (isinstance(head, Const) and isinstance(head.value, int)):
            raise ParseError(f"invalid clause head {format_term(head)}", line, 1)
        clauses.append(Clause(head, goals, line))
    return Program(tuple(clauses), tuple(entries))


def parse_goals(text: str) -> tuple[Term, ...]:
    """Read a goals file: one goal per line, trailing full stop optional."""
    goals = []
    for raw in text.splitlines():
        s = raw.split("%", 1)[0].strip()
        if s:
            goals.append(parse_term(s))
    return tuple(goals)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bind:
    binding: Binding

    def __str__(self) -> str:
        return f"Bind({self.binding})"


@dataclass(frozen=True)
class Call:
    pred: PredKey
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"Call({self.pred[0]}/{self.pred[1]}, [{', '.join(self.args)}])"


BodyItem = Union[Bind, Call]

# Arithmetic builtins: success means every argument variable is bound to a number.
ARITH_BUILTINS = frozenset(
    {("<", 2), (">", 2), ("=<", 2), (">=", 2), ("=:=", 2), ("=\\=", 2), ("is", 2)}
)
NOOP_BUILTINS = frozenset({("true", 0), ("!", 0)})
NUMBER = Const("$number")


@dataclass(frozen=True)
class NormalClause:
    pred: PredKey
    head: tuple[str, ...]
    body: tuple[BodyItem, ...]
    vi: tuple[str, ...]

    def calls(self) -> Iterator[Call]:
        return (item for item in self.body if isinstance(item, Call))

    def __str__(self) -> str:
        body = ", ".join(str(b) for b in self.body)
        return f"{self.pred[0]}({', '.join(self.head)}) :- [{body}]"


@dataclass
class _Fresh:
    taken: set[str]
    counters: dict[str, int] = field(default_factory=dict)

    def make(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0)
        while True:
            n += 1
            name = f"{prefix}{n}"
            if name not in self.taken:
                break
        self.counters[prefix] = n
        self.taken.add(name)
        return name

    def make_head(self, i: int) -> str:
        name = f"X{i}"
        while name in self.taken:
            name = "_" + name
        self.taken.add(name)
        return name


def normalize_clause(clause: Clause) -> NormalClause:
    """Rewrite a clause so that its head carries fresh distinct variables
    and its body is a flat sequence of bindings and variable-only calls."""
    fresh = _Fresh(set(clause.variables))
    pred = clause.pred
    head_args = clause.head.args if isinstance(clause.head, Struct) else ()
    head = tuple(fresh.make_head(i + 1) for i in range(len(head_args)))
    body: list[BodyItem] = []

    def bind(lhs: Term, rhs: Term) -> None:
        if isinstance(lhs, Var) and isinstance(rhs, Var) and lhs == rhs:
            return
        if isinstance(lhs, Var):
            body.append(Bind(Binding(lhs.name, rhs)))
        elif isinstance(rhs, Var):
            body.append(Bind(Binding(rhs.name, lhs)))
        else:
            tmp = fresh.make("T")
            body.append(Bind(Binding(tmp, lhs)))
            body.append(Bind(Binding(tmp, rhs)))

    for x, t in zip(head, head_args):
        body.append(Bind(Binding(x, t)))
    for goal in clause.body:
        key = pred_key(goal)
        args = goal.args if isinstance(goal, Struct) else ()
        if key == ("=", 2):
            bind(*args)
        elif key in NOOP_BUILTINS:
            continue
        elif key in ARITH_BUILTINS:
            for v in dict.fromkeys(v for a in args for v in iter_vars(a)):
                body.append(Bind(Binding(v, NUMBER)))
        else:
            names = []
            for a in args:
                if isinstance(a, Var):
                    names.append(a.name)
                else:
                    tmp = fresh.make("T")
                    body.append(Bind(Binding(tmp, a)))
                    names.append(tmp)
            body.append(Call(key, tuple(names)))

    vi: dict[str, None] = dict.fromkeys(head)
    for item in body:
        if isinstance(item, Bind):
            vi.setdefault(item.binding.lhs, None)
            for v in iter_vars(item.binding.rhs):
                vi.setdefault(v, None)
        else:
            for v in item.args:
                vi.setdefault(v, None)
    return NormalClause(pred, head, tuple(body), tuple(vi))


def normalize_program(program: Program) -> dict[PredKey, list[NormalClause]]:
    out: dict[PredKey, list[NormalClause]] = {}
    for c in program.clauses:
        out.setdefault(c.pred, []).append(normalize_clause(c))
    return out


def _lift_names(t: Term, names: frozenset[str]) -> Term:
    if isinstance(t, Const) and t.value in names:
        return Var(t.value)
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(_lift_names(a, names) for a in t.args))
    return t


def read_term(text: str, vi: Iterable[str] = ()) -> Term:
    """Parse a term, reading atoms named in ``vi`` as variables.

    Handy for fixtures written with lowercase variable names: with
    ``vi="xyz"``, ``f(y, z)`` has variables ``y`` and ``z``.
    """
    return _lift_names(parse_term(text), frozenset(vi))


def read_binding(text: str, vi: Iterable[str] = ()) -> Binding:
    """Parse ``x = t`` (see :func:`read_term` for ``vi``)."""
    t = read_term(text, vi)
    if not (isinstance(t, Struct) and t.functor == "=" and t.arity == 2):
        raise ValueError(f"expected a binding x = t: {text!r}")
    lhs, rhs = t.args
    if not isinstance(lhs, Var):
        raise ValueError(f"left-hand side must be a variable: {text!r}")
    return Binding(lhs.name, rhs)
