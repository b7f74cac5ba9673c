"""Network doubling: second moments of a query from one pass on a paired network.

Every variable B becomes B* = (B1, B2) with domain Dom_B x Dom_B.  The pair
``(b1, b2)`` is stored at flat index ``b1 * card + b2``.  Doubled CPT entries
are the posterior expectations E{theta_{b1|a1} theta_{b2|a2}}, which are not
Dirichlet rows; they are only used as fixed tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import NumericalInstability, ZeroEvidenceProbability
from .inference import Query, evidence_probability, marginal_table
from .network import DirichletRow, Network, TableNetwork, Variable

NEGATIVE_VARIANCE_TOL = 1e-12


def double_cpt_row(row: DirichletRow, same_parent: bool = True, other: DirichletRow | None = None) -> np.ndarray:
    """Table ``t[b1, b2]`` of expected products of two CPT entries.

    With ``same_parent`` both replicates read the same row, so the Dirichlet
    covariance is added; otherwise the entries come from independent rows
    (``other``, defaulting to ``row``) and the table is an outer product.
    """
    p1 = row.means
    p2 = (other if other is not None else row).means
    t = np.outer(p1, p2)
    if same_parent:
        if other is not None and not np.array_equal(other.alpha, row.alpha):
            raise ValueError("same_parent requires a single row")
        t = t + (np.diag(p1) - np.outer(p1, p1)) / (row.alpha_sum + 1.0)
    return t


def _doubled_table(means: np.ndarray, alpha_sums: np.ndarray) -> np.ndarray:
    parent_cards = means.shape[:-1]
    d = means.shape[-1]
    r = int(np.prod(parent_cards, dtype=int))
    m2 = means.reshape(r, d)
    s = alpha_sums.reshape(r)
    t = m2[:, :, None, None] * m2[None, None, :, :]
    rows = np.arange(r)
    cov = m2[:, :, None] * (np.eye(d)[None] - m2[:, None, :]) / (s[:, None, None] + 1.0)
    t[rows, :, rows, :] += cov
    k = len(parent_cards)
    t = t.reshape(parent_cards + (d,) + parent_cards + (d,))
    perm = [ax for i in range(k + 1) for ax in (i, k + 1 + i)]
    return t.transpose(perm).reshape(tuple(c * c for c in parent_cards) + (d * d,))


class DoubledNetwork(TableNetwork):
    def __init__(self, source: Network):
        variables = [
            Variable(v.name, tuple(itertools.product(v.domain, v.domain))) for v in source.variables
        ]
        means = source.means()
        tables = {n: _doubled_table(means[n], source.alpha_sums(n)) for n in source.names}
        super().__init__(variables, source.parents, tables)
        self.source = source

    def pair_index(self, name: str, i1: int, i2: int) -> int:
        return i1 * self.source.card(name) + i2


def double_network(net: Network) -> DoubledNetwork:
    return DoubledNetwork(net)


@dataclass(frozen=True)
class DoubledMoments:
    q2: float
    second_moment: float
    v2: float
    r2: float  # E{R^2}: doubled-network probability of (e, e)


@dataclass(frozen=True)
class EvidenceMoments:
    mu_r: float
    sigma_rr: float


def _clamp_variance(v: float, what: str) -> float:
    if v >= 0:
        return v
    if v >= -NEGATIVE_VARIANCE_TOL:
        return 0.0
    raise NumericalInstability(f"{what} came out negative ({v:.3e})")


def doubled_moments(net: Network, q: Query) -> DoubledMoments:
    """q2, E{w*(H*) | e*} and E{R^2} from a single pass over the doubled network."""
    rq = q.resolve(net)
    dnet = net.doubled
    ev = {n: dnet.pair_index(n, i, i) for n, i in rq.evidence.items()}
    keep = tuple(rq.hypothesis)
    t = marginal_table(dnet, dnet.tables, keep=keep, evidence=ev).table
    total = float(t.sum())
    if total == 0:
        raise ZeroEvidenceProbability(f"evidence of {q} has probability 0 in the doubled network")
    if rq.constant is not None:
        return DoubledMoments(rq.constant, rq.constant, 0.0, total)
    t = t.reshape(tuple(c for n in keep for c in (net.card(n),) * 2))
    first = tuple(x for n in keep for x in (rq.hypothesis[n], slice(None)))
    both = tuple(x for n in keep for x in (rq.hypothesis[n],) * 2)
    q2 = float(t[first].sum()) / total
    second = float(t[both]) / total
    v2 = _clamp_variance(second - q2 * q2, "doubling variance")
    return DoubledMoments(q2, second, v2, total)


def estimate_q2_v2(net: Network, q: Query) -> tuple[float, float]:
    """Mean and variance of the query given two extra copies of the evidence."""
    dm = doubled_moments(net, q)
    return dm.q2, dm.v2


def evidence_moments(net: Network, evidence) -> EvidenceMoments:
    """Exact mean and variance of R = P(E = e | Theta)."""
    evidence = dict(evidence or {})
    mu = evidence_probability(net, None, evidence)
    dnet = net.doubled
    pairs = {n: (v, v) for n, v in evidence.items()}
    r2 = evidence_probability(dnet, dnet.tables, pairs)
    return EvidenceMoments(mu, _clamp_variance(r2 - mu * mu, "evidence variance"))
