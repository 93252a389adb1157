"""A small reduced ordered BDD package.

Variables are integer levels (smaller level = closer to the root).  Nodes
are hash-consed in one module-level table, so two functions are equal iff
their node ids are equal.  Only order-preserving relabelings are supported,
which is all the groundness domain needs (extending and compressing the
variables of interest keeps their relative order).
"""

from __future__ import annotations

import threading
from typing import Callable, Iterator

FALSE = 0
TRUE = 1

_lock = threading.RLock()
# node id -> (level, lo, hi); terminals get level = +inf
_nodes: list[tuple[float, int, int]] = [(float("inf"), 0, 0), (float("inf"), 1, 1)]
_unique: dict[tuple[int, int, int], int] = {}
_cache: dict[tuple, int] = {}
_CACHE_LIMIT = 1 << 20


def _mk(level: int, lo: int, hi: int) -> int:
    if lo == hi:
        return lo
    key = (level, lo, hi)
    u = _unique.get(key)
    if u is None:
        u = len(_nodes)
        _nodes.append(key)
        _unique[key] = u
    return u


def level(u: int) -> float:
    return _nodes[u][0]


def low(u: int) -> int:
    return _nodes[u][1]


def high(u: int) -> int:
    return _nodes[u][2]


def var(i: int) -> int:
    with _lock:
        return _mk(i, FALSE, TRUE)


def _remember(key: tuple, value: int) -> int:
    if len(_cache) > _CACHE_LIMIT:
        _cache.clear()
    _cache[key] = value
    return value


_TERMINAL_OPS: dict[str, Callable[[int, int], int | None]] = {
    "and": lambda a, b: (
        FALSE if a == FALSE or b == FALSE else b if a == TRUE else a if b == TRUE
        else a if a == b else None
    ),
    "or": lambda a, b: (
        TRUE if a == TRUE or b == TRUE else b if a == FALSE else a if b == FALSE
        else a if a == b else None
    ),
    "xor": lambda a, b: (
        b if a == FALSE else a if b == FALSE else FALSE if a == b
        else (a ^ b) if a <= TRUE and b <= TRUE else None
    ),
}


def _apply(op: str, a: int, b: int) -> int:
    r = _TERMINAL_OPS[op](a, b)
    if r is not None:
        return r
    if a > b:
        a, b = b, a
    key = (op, a, b)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    la, lb = level(a), level(b)
    top = min(la, lb)
    a0, a1 = (low(a), high(a)) if la == top else (a, a)
    b0, b1 = (low(b), high(b)) if lb == top else (b, b)
    u = _mk(int(top), _apply(op, a0, b0), _apply(op, a1, b1))
    return _remember(key, u)


def conj(a: int, b: int) -> int:
    with _lock:
        return _apply("and", a, b)


def disj(a: int, b: int) -> int:
    with _lock:
        return _apply("or", a, b)


def neg(a: int) -> int:
    with _lock:
        return _apply("xor", a, TRUE)


def iff(a: int, b: int) -> int:
    with _lock:
        return _apply("xor", _apply("xor", a, b), TRUE)


def entails(a: int, b: int) -> bool:
    """Whether ``a`` implies ``b``."""
    with _lock:
        return _apply("and", a, _apply("xor", b, TRUE)) == FALSE


def conj_all(nodes) -> int:
    out = TRUE
    for n in nodes:
        out = conj(out, n)
    return out


def exists(u: int, levels: frozenset[int]) -> int:
    """Existentially quantify the given levels."""
    if not levels:
        return u
    with _lock:
        return _exists(u, levels, max(levels))


def _exists(u: int, levels: frozenset[int], deepest: int) -> int:
    if u <= TRUE or level(u) > deepest:
        return u
    key = ("ex", u, levels)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    lv = int(level(u))
    lo = _exists(low(u), levels, deepest)
    hi = _exists(high(u), levels, deepest)
    r = _apply("or", lo, hi) if lv in levels else _mk(lv, lo, hi)
    return _remember(key, r)


def relabel(u: int, mapping: dict[int, int]) -> int:
    """Rename levels by a strictly increasing ``mapping``.

    Every level occurring in ``u`` must be mapped.
    """
    with _lock:
        memo: dict[int, int] = {}

        def go(n: int) -> int:
            if n <= TRUE:
                return n
            r = memo.get(n)
            if r is None:
                r = _mk(mapping[int(level(n))], go(low(n)), go(high(n)))
                memo[n] = r
            return r

        return go(u)


def support(u: int) -> set[int]:
    seen, out, stack = set(), set(), [u]
    while stack:
        n = stack.pop()
        if n <= TRUE or n in seen:
            continue
        seen.add(n)
        out.add(int(level(n)))
        stack += [low(n), high(n)]
    return out


def evaluate(u: int, true_mask: int) -> bool:
    """Truth value under the assignment whose true levels are ``true_mask``."""
    while u > TRUE:
        u = high(u) if (true_mask >> int(level(u))) & 1 else low(u)
    return u == TRUE


def iter_models(u: int, nvars: int) -> Iterator[int]:
    """Yield every satisfying assignment over levels ``0..nvars-1`` as a mask."""

    def go(n: int, lv: int, acc: int) -> Iterator[int]:
        if n == FALSE:
            return
        if lv == nvars:
            if n == TRUE:
                yield acc
            return
        if n == TRUE or level(n) > lv:
            yield from go(n, lv + 1, acc)
            yield from go(n, lv + 1, acc | (1 << lv))
        else:
            yield from go(low(n), lv + 1, acc)
            yield from go(high(n), lv + 1, acc | (1 << lv))

    return go(u, 0, 0)


def count_models(u: int, nvars: int) -> int:
    memo: dict[tuple[int, int], int] = {}

    def go(n: int, lv: int) -> int:
        if n == FALSE:
            return 0
        if n == TRUE:
            return 1 << (nvars - lv)
        k = (n, lv)
        if k not in memo:
            nl = int(level(n))
            skip = 1 << (nl - lv)
            memo[k] = skip * (go(low(n), nl + 1) + go(high(n), nl + 1))
        return memo[k]

    return go(u, 0)
