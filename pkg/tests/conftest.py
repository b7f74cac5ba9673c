import itertools
import warnings

import numpy as np
import pytest

from beliefvar.network import Network, Variable


def brute_joint(net, tables):
    """Full joint by explicit enumeration: dict assignment-index-tuple -> prob."""
    names = net.names
    out = {}
    for combo in itertools.product(*(range(net.card(n)) for n in names)):
        val = dict(zip(names, combo))
        p = 1.0
        for n in names:
            p *= tables[n][tuple(val[v] for v in net.family(n))]
        out[combo] = p
    return out


def brute_query(net, tables, hyp: dict, ev: dict) -> float:
    """P(hyp | ev) from enumeration; hyp/ev map names to value indices."""
    names = net.names
    num = den = 0.0
    for combo, p in brute_joint(net, tables).items():
        val = dict(zip(names, combo))
        if all(val[k] == v for k, v in ev.items()):
            den += p
            if all(val[k] == v for k, v in hyp.items()):
                num += p
    return num / den


def idx(net, assignment):
    return {k: net.var(k).index(v) for k, v in assignment.items()}


def make_net(cards: dict, parents: dict, rng, lo=0.5, hi=5.0) -> Network:
    """cards: name -> cardinality.  Random positive alpha on every row."""
    variables = [Variable(n, tuple(str(i) for i in range(c))) for n, c in cards.items()]
    shape = {n: tuple(cards[p] for p in parents.get(n, ())) + (cards[n],) for n in cards}
    return Network(variables, parents, {n: rng.uniform(lo, hi, size=shape[n]) for n in cards})


def chain_net(rng, m_scale=1.0) -> Network:
    """E -> B -> H, binary."""
    return make_net({"E": 2, "B": 2, "H": 2}, {"B": ("E",), "H": ("B",)}, rng, 0.5 * m_scale, 5.0 * m_scale)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_undersampling():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="k=.*below m")
        yield


def fd_gradient(net, q, h=1e-6):
    """Central differences of the enumerated query, one free CPT coordinate at a time."""
    rq = q.resolve(net)
    base = {n: np.array(t) for n, t in net.means().items()}
    if rq.constant is not None:
        return {n: np.zeros_like(t) for n, t in base.items()}
    grad = {}
    for n in net.names:
        g = np.zeros_like(base[n])
        for pos in np.ndindex(base[n].shape):
            vals = []
            for sign in (1, -1):
                tables = dict(base)
                t = base[n].copy()
                t[pos] += sign * h
                tables[n] = t
                vals.append(brute_query(net, tables, rq.hypothesis, rq.evidence))
            g[pos] = (vals[0] - vals[1]) / (2 * h)
        grad[n] = g
    return grad


def _beta_nodes(a, b, n=40):
    from scipy.special import roots_jacobi

    t, w = roots_jacobi(n, b - 1, a - 1)
    return (1 + t) / 2, w / w.sum()


def nb2_exact_moments(net, q, n=24):
    """Mean and variance of P(H=0 | F1, F2) for NB-2 by Gauss-Jacobi quadrature.

    The query depends on five independent Beta parameters (binary rows), so a
    tensor product of one-dimensional rules is exact to quadrature precision.
    """
    xh, wh = _beta_nodes(*net.alpha["H"], n)
    nodes, weights = [xh], [wh]
    for f in ("F1", "F2"):
        for h in (0, 1):
            x, w = _beta_nodes(*net.alpha[f][h], n)
            nodes.append(x)
            weights.append(w)
    grids = np.meshgrid(*nodes, indexing="ij", sparse=True)
    wgrid = np.ones(())
    for i, w in enumerate(weights):
        shape = [1] * 5
        shape[i] = n
        wgrid = wgrid * w.reshape(shape)
    th, f1h0, f1h1, f2h0, f2h1 = grids
    e1, e2 = int(q.evidence["F1"]), int(q.evidence["F2"])

    def pick(x, e):
        return x if e == 0 else 1 - x

    num = th * pick(f1h0, e1) * pick(f2h0, e2)
    qv = num / (num + (1 - th) * pick(f1h1, e1) * pick(f2h1, e2))
    mu = float((wgrid * qv).sum())
    return mu, float((wgrid * (qv - mu) ** 2).sum())
