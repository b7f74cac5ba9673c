"""Factor tables and variable elimination.

A factor's table has one trailing axis per scope variable.  Any leading axes
are batch axes (e.g. one entry per posterior draw) and are carried through
every product and sum unchanged, so a single elimination pass evaluates a
whole batch of parameter settings.
"""

from __future__ import annotations

import string
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ScopeMismatch

_LETTERS = string.ascii_letters


class Factor:
    __slots__ = ("scope", "table")

    def __init__(self, scope: Sequence[str], table):
        scope = tuple(scope)
        table = np.asarray(table, dtype=float)
        if len(set(scope)) != len(scope):
            raise ScopeMismatch(f"repeated variable in scope {scope}")
        if table.ndim < len(scope):
            raise ScopeMismatch(f"table of rank {table.ndim} cannot carry scope {scope}")
        self.scope = scope
        self.table = table

    @property
    def batch_ndim(self) -> int:
        return self.table.ndim - len(self.scope)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.table.shape[: self.batch_ndim]

    @property
    def cards(self) -> dict[str, int]:
        return dict(zip(self.scope, self.table.shape[self.batch_ndim :]))

    def reduce(self, assignment: Mapping[str, int]) -> "Factor":
        """Slice out the axes of assigned variables."""
        hit = [v for v in self.scope if v in assignment]
        if not hit:
            return self
        idx = [slice(None)] * self.batch_ndim
        idx += [assignment[v] if v in assignment else slice(None) for v in self.scope]
        return Factor([v for v in self.scope if v not in assignment], self.table[tuple(idx)])

    def marginalize(self, names: Iterable[str]) -> "Factor":
        names = set(names)
        axes = tuple(self.batch_ndim + i for i, v in enumerate(self.scope) if v in names)
        return Factor([v for v in self.scope if v not in names], self.table.sum(axis=axes))

    def transpose(self, scope: Sequence[str]) -> "Factor":
        scope = tuple(scope)
        if set(scope) != set(self.scope):
            raise ScopeMismatch(f"{scope} is not a permutation of {self.scope}")
        b = self.batch_ndim
        perm = list(range(b)) + [b + self.scope.index(v) for v in scope]
        return Factor(scope, self.table.transpose(perm))

    def __mul__(self, other: "Factor") -> "Factor":
        out = self.scope + tuple(v for v in other.scope if v not in self.scope)
        return contract([self, other], out)

    def __repr__(self):
        return f"Factor(scope={self.scope}, shape={self.table.shape})"


def _check_cards(factors: Sequence[Factor]) -> dict[str, int]:
    cards: dict[str, int] = {}
    for f in factors:
        for v, c in f.cards.items():
            if cards.setdefault(v, c) != c:
                raise ScopeMismatch(f"variable {v!r} has cardinality {cards[v]} and {c}")
    return cards


def contract(factors: Sequence[Factor], out_scope: Sequence[str]) -> Factor:
    """Multiply ``factors`` and sum out every variable not in ``out_scope``."""
    out_scope = tuple(out_scope)
    if not factors:
        if out_scope:
            raise ScopeMismatch(f"no factor mentions {out_scope}")
        return Factor((), 1.0)
    names = list(dict.fromkeys(v for f in factors for v in f.scope))
    missing = set(out_scope) - set(names)
    if missing:
        raise ScopeMismatch(f"variables {sorted(missing)} appear in no factor")
    if len(names) > len(_LETTERS):
        raise ScopeMismatch("too many variables in one contraction")
    letter = {v: _LETTERS[i] for i, v in enumerate(names)}
    terms = ",".join("..." + "".join(letter[v] for v in f.scope) for f in factors)
    spec = terms + "->..." + "".join(letter[v] for v in out_scope)
    return Factor(out_scope, np.einsum(spec, *(f.table for f in factors)))


def min_fill_order(scopes: Iterable[Sequence[str]], to_eliminate: Iterable[str]) -> list[str]:
    """Greedy min-fill elimination order; ties go to fewer neighbours, then name."""
    adj: dict[str, set[str]] = {}
    for s in scopes:
        for v in s:
            adj.setdefault(v, set()).update(u for u in s if u != v)
    remaining = set(to_eliminate) & set(adj)
    order = []
    while remaining:
        best = None
        for v in sorted(remaining):
            nb = list(adj[v])
            fill = sum(
                1 for i in range(len(nb)) for j in range(i + 1, len(nb)) if nb[j] not in adj[nb[i]]
            )
            key = (fill, len(nb), v)
            if best is None or key < best:
                best = key
        v = best[2]
        nb = adj.pop(v)
        for u in nb:
            adj[u].discard(v)
            adj[u].update(nb - {u})
        remaining.discard(v)
        order.append(v)
    return order


def eliminate(
    factors: Sequence[Factor],
    keep: Sequence[str],
    order: Sequence[str] | None = None,
) -> Factor:
    """Sum the product of ``factors`` over every variable outside ``keep``.

    ``order`` fixes the elimination sequence; by default min-fill is used.
    The result's scope is ``keep`` in the given order.
    """
    factors = list(factors)
    keep = tuple(keep)
    _check_cards(factors)
    present = {v for f in factors for v in f.scope}
    missing = set(keep) - present
    if missing:
        raise ScopeMismatch(f"cannot keep {sorted(missing)}: not in any factor scope")
    hidden = present - set(keep)
    if order is None:
        order = min_fill_order([f.scope for f in factors], hidden)
    elif set(order) != hidden:
        raise ScopeMismatch("elimination order must list exactly the summed-out variables")
    pool = factors
    for v in order:
        involved = [f for f in pool if v in f.scope]
        pool = [f for f in pool if v not in f.scope]
        out = tuple(dict.fromkeys(u for f in involved for u in f.scope if u != v))
        pool.append(contract(involved, out))
    return contract(pool, keep)


def eliminate_with_grad(factors: Sequence[Factor], order: Sequence[str] | None = None):
    """Total sum Z of the product of ``factors`` and dZ/d(table) for each factor.

    Runs elimination forward while recording the contraction tree, then
    propagates adjoints back down it, so every partial costs about as much as
    one extra pass rather than one pass per factor.
    """
    factors = list(factors)
    _check_cards(factors)
    hidden = {v for f in factors for v in f.scope}
    if order is None:
        order = min_fill_order([f.scope for f in factors], hidden)
    values: list[Factor] = list(factors)
    children: list[list[int]] = [[] for _ in factors]
    pool = list(range(len(factors)))
    for v in order:
        involved = [i for i in pool if v in values[i].scope]
        pool = [i for i in pool if v not in values[i].scope]
        out = tuple(dict.fromkeys(u for i in involved for u in values[i].scope if u != v))
        values.append(contract([values[i] for i in involved], out))
        children.append(involved)
        pool.append(len(values) - 1)
    values.append(contract([values[i] for i in pool], ()))
    children.append(pool)
    root = len(values) - 1

    adj: list[Factor | None] = [None] * len(values)
    adj[root] = Factor((), np.ones_like(values[root].table))
    for node in range(root, len(factors) - 1, -1):
        a = adj[node]
        kids = children[node]
        if a is None or not kids:
            continue
        for pos, c in enumerate(kids):
            others = [values[k] for j, k in enumerate(kids) if j != pos]
            seen = set(a.scope).union(*(o.scope for o in others))
            lone = [v for v in values[c].scope if v not in seen]
            if lone:
                cards = values[c].cards
                others.append(Factor(lone, np.ones([cards[v] for v in lone])))
            g = contract([a] + others, values[c].scope)
            adj[c] = g if adj[c] is None else Factor(g.scope, g.table + adj[c].table)
    grads = []
    for i, f in enumerate(factors):
        g = adj[i]
        grads.append(np.zeros_like(f.table) if g is None else g.transpose(f.scope).table)
    return values[root].table, grads
