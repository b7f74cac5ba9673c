"""Delta-method query variance v1 = g' C g.

Partials treat every CPT entry as a free coordinate.  The row covariance has
zero row sums, so adding a constant to all partials of one row leaves the
quadratic form unchanged; no simplex projection is needed.
"""

from __future__ import annotations

import numpy as np

from .errors import ZeroEvidenceProbability
from .factors import Factor, eliminate_with_grad
from .inference import Query, marginal_table
from .network import DirichletRow, Network


def dirichlet_row_covariance(row: DirichletRow) -> np.ndarray:
    p = row.means
    return (np.diag(p) - np.outer(p, p)) / (row.alpha_sum + 1.0)


def _all_partials(net: Network, clamp: dict[str, int]) -> tuple[float, dict[str, np.ndarray]]:
    """P(clamp) and its partials with respect to every CPT entry, in one sweep."""
    means = net.means()
    factors = [Factor(net.family(n), means[n]).reduce(clamp) for n in net.names]
    z, grads = eliminate_with_grad(factors)
    out = {}
    for n, g in zip(net.names, grads):
        full = np.zeros(net.cpt_shape(n))
        full[tuple(clamp.get(v, slice(None)) for v in net.family(n))] = g
        out[n] = full
    return float(z), out


def _family_partials(net: Network, name: str, clamp: dict[str, int]) -> np.ndarray:
    """d P(clamp) / d theta_{b|a} for one CPT via a dedicated elimination.

    The probability is multilinear in the CPT entries, so the partial for
    (a, b) is the marginal of all other factors at (A = a, B = b).
    """
    fam = net.family(name)
    free = tuple(v for v in fam if v not in clamp)
    t = marginal_table(net, None, keep=free, evidence=clamp, exclude=(name,)).table
    out = np.zeros(net.cpt_shape(name))
    out[tuple(clamp[v] if v in clamp else slice(None) for v in fam)] = t
    return out


def _check_constant(net, q, rq):
    if marginal_table(net, None, evidence=rq.evidence).table == 0:
        raise ZeroEvidenceProbability(f"evidence of {q} has probability 0")
    return {n: np.zeros(net.cpt_shape(n)) for n in net.names}


def query_gradient(net: Network, q: Query) -> dict[str, np.ndarray]:
    """Exact partials of q = P(h, e) / P(e) at the posterior means, CPT-shaped."""
    rq = q.resolve(net)
    if rq.constant is not None:
        return _check_constant(net, q, rq)
    f, df = _all_partials(net, {**rq.evidence, **rq.hypothesis})
    g, dg = _all_partials(net, rq.evidence)
    if g == 0:
        raise ZeroEvidenceProbability(f"evidence of {q} has probability 0")
    return {n: (g * df[n] - f * dg[n]) / (g * g) for n in net.names}


def query_gradient_reference(net: Network, q: Query) -> dict[str, np.ndarray]:
    """Same partials as :func:`query_gradient`, two eliminations per CPT."""
    rq = q.resolve(net)
    if rq.constant is not None:
        return _check_constant(net, q, rq)
    both = {**rq.evidence, **rq.hypothesis}
    f = float(marginal_table(net, None, evidence=both).table)
    g = float(marginal_table(net, None, evidence=rq.evidence).table)
    if g == 0:
        raise ZeroEvidenceProbability(f"evidence of {q} has probability 0")
    grad = {}
    for n in net.names:
        df = _family_partials(net, n, both)
        dg = _family_partials(net, n, rq.evidence)
        grad[n] = (g * df - f * dg) / (g * g)
    return grad


def variance_v1(net: Network, q: Query, gradient: dict[str, np.ndarray] | None = None) -> float:
    """Sum over CPT rows of g_row' Cov(row) g_row."""
    if gradient is None:
        gradient = query_gradient(net, q)
    means = net.means()
    total = 0.0
    for n in net.names:
        g = gradient[n]
        p = means[n]
        first = (p * g).sum(axis=-1)
        quad = (p * g * g).sum(axis=-1) - first * first
        total += float((quad / (net.alpha_sums(n) + 1.0)).sum())
    return total
