"""Queries and exact inference on a network with fixed (or batched) CPTs.

``params`` arguments map each variable to a CPT-shaped array, optionally with
leading batch axes shared by all variables.  Passing ``None`` uses the
posterior means of a :class:`~beliefvar.network.Network`, which makes
:func:`evaluate_query` the plug-in estimate q1.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import NetworkError, ZeroEvidenceProbability
from .factors import Factor, eliminate


def _parse_assignment(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, value = part.partition("=")
        if not sep or not name.strip() or not value.strip():
            raise ValueError(f"expected VAR=value, got {part!r}")
        out[name.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class Query:
    """P(hypothesis | evidence): w(H) is the indicator of H = h."""

    hypothesis: Mapping[str, Hashable]
    evidence: Mapping[str, Hashable] = MappingProxyType({})

    def __post_init__(self):
        if not self.hypothesis:
            raise ValueError("a query needs at least one hypothesis variable")
        object.__setattr__(self, "hypothesis", MappingProxyType(dict(self.hypothesis)))
        object.__setattr__(self, "evidence", MappingProxyType(dict(self.evidence)))

    @classmethod
    def parse(cls, hypothesis: str, evidence: str = "") -> "Query":
        """Build from ``"A=a1,B=b2"`` style strings."""
        return cls(_parse_assignment(hypothesis), _parse_assignment(evidence))

    def __hash__(self):
        return hash((tuple(self.hypothesis.items()), tuple(self.evidence.items())))

    def __str__(self):
        h = ",".join(f"{k}={v}" for k, v in self.hypothesis.items())
        e = ",".join(f"{k}={v}" for k, v in self.evidence.items())
        return f"P({h} | {e})" if e else f"P({h})"

    def resolve(self, net) -> "ResolvedQuery":
        """Map labels to indices, folding hypothesis variables fixed by the evidence.

        A hypothesis variable that is also observed contributes a factor of 1
        if the values agree and makes the query identically 0 otherwise.
        """
        ev = {n: net.var(n).index(v) for n, v in self.evidence.items()}
        hyp = {}
        constant = None
        for n, v in self.hypothesis.items():
            i = net.var(n).index(v)
            if n in ev:
                if ev[n] != i:
                    constant = 0.0
            else:
                hyp[n] = i
        if constant is None and not hyp:
            constant = 1.0
        return ResolvedQuery(hyp, ev, constant)


@dataclass(frozen=True)
class ResolvedQuery:
    hypothesis: dict[str, int]
    evidence: dict[str, int]
    constant: float | None


def marginal_table(
    net,
    params: Mapping[str, np.ndarray] | None = None,
    keep: Sequence[str] = (),
    evidence: Mapping[str, int] | None = None,
    masks: Mapping[str, np.ndarray] | None = None,
    exclude: Sequence[str] = (),
    prune: bool = True,
) -> Factor:
    """Unnormalised marginal over ``keep`` with ``evidence`` (value indices) clamped.

    ``masks`` multiplies in per-variable weight vectors; ``exclude`` drops the
    CPT factors of the listed variables.  With ``prune`` the computation is
    restricted to ancestors of everything mentioned, which is exact only
    when every CPT row sums to one.
    """
    params = _params(net, params)
    evidence = dict(evidence or {})
    masks = dict(masks or {})
    keep = tuple(keep)
    clash = set(keep) & set(evidence)
    if clash:
        raise NetworkError(f"cannot keep clamped variables {sorted(clash)}")
    if prune:
        touched = set(keep) | set(evidence) | set(masks)
        for n in exclude:
            touched.update(net.family(n))
        relevant = net.ancestors(touched)
    else:
        relevant = set(net.names)
    factors = []
    for n in net.topological_order:
        if n in relevant and n not in exclude:
            factors.append(Factor(net.family(n), params[n]).reduce(evidence))
    for n, w in masks.items():
        w = np.asarray(w, dtype=float)
        if n in evidence:
            factors.append(Factor((), w[evidence[n]]))
        else:
            factors.append(Factor((n,), w))
    present = {v for f in factors for v in f.scope}
    for n in keep:
        if n not in present:
            factors.append(Factor((n,), np.ones(net.card(n))))
    return eliminate(factors, keep)


def _params(net, params):
    if params is not None:
        return params
    if hasattr(net, "means"):
        return net.means()
    return net.tables


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def joint_prob(net, params=None, assignment: Mapping[str, Hashable] | None = None):
    """Probability of a (partial) assignment of labels."""
    idx = {n: net.var(n).index(v) for n, v in (assignment or {}).items()}
    return _scalar(marginal_table(net, params, evidence=idx).table)


def evidence_probability(net, params=None, evidence: Mapping[str, Hashable] | None = None):
    """R = P(E = e | params)."""
    return joint_prob(net, params, evidence)


def query_terms(net, params, rq: ResolvedQuery, prune: bool = True):
    """Return (P(h, e), P(e)) for a resolved query, batched like ``params``."""
    keep = tuple(rq.hypothesis)
    t = marginal_table(net, params, keep=keep, evidence=rq.evidence, prune=prune).table
    b = t.ndim - len(keep)
    axes = tuple(range(b, t.ndim))
    total = t.sum(axis=axes)
    if rq.constant is not None:
        return rq.constant * total, total
    num = t[(Ellipsis,) + tuple(rq.hypothesis[n] for n in keep)]
    return num, total


def evaluate_query(net, params, q: Query):
    """P(H = h | E = e) under ``params``; with posterior means this is q1."""
    rq = q.resolve(net)
    num, total = query_terms(net, params, rq)
    if np.any(np.asarray(total) == 0):
        raise ZeroEvidenceProbability(f"evidence of {q} has probability 0")
    return _scalar(num / total)
