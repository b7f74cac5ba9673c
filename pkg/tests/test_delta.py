import numpy as np
import pytest

from beliefvar.delta import dirichlet_row_covariance, query_gradient, query_gradient_reference, variance_v1
from beliefvar.experiments import build_benchmark
from beliefvar.inference import Query
from beliefvar.network import DirichletRow

from conftest import fd_gradient, make_net


def test_row_covariance_closed_form(rng):
    a = rng.uniform(0.5, 4, 4)
    s = a.sum()
    expected = (np.diag(a) * s - np.outer(a, a)) / (s * s * (s + 1))
    np.testing.assert_allclose(dirichlet_row_covariance(DirichletRow(a)), expected, rtol=1e-12)
    np.testing.assert_allclose(dirichlet_row_covariance(DirichletRow(a)).sum(axis=1), 0, atol=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = make_net({"A": 2, "B": 3, "C": 2, "D": 2}, {"B": ("A",), "C": ("A", "B"), "D": ("C",)}, rng)
    q = Query({"B": "2"}, {"D": "1"})
    g, fd = query_gradient(net, q), fd_gradient(net, q)
    for n in net.names:
        np.testing.assert_allclose(g[n], fd[n], rtol=1e-5, atol=1e-9)


def test_one_sweep_gradient_equals_per_family_eliminations():
    net, qs = build_benchmark("diamond", 20)
    for q in qs[::7]:
        a, b = query_gradient(net, q), query_gradient_reference(net, q)
        for n in net.names:
            np.testing.assert_allclose(a[n], b[n], rtol=1e-12, atol=1e-15)


def test_v1_is_sum_of_row_quadratic_forms(rng):
    net = make_net({"A": 3, "B": 2, "C": 2}, {"B": ("A",), "C": ("B",)}, rng)
    q = Query({"A": "1"}, {"C": "0"})
    g = query_gradient(net, q)
    expected = 0.0
    for n in net.names:
        flat_g = g[n].reshape(-1, net.card(n))
        for (config, row), gr in zip(net.rows(n), flat_g):
            expected += gr @ dirichlet_row_covariance(row) @ gr
    assert variance_v1(net, q) == pytest.approx(expected, rel=1e-12)


def test_v1_is_invariant_to_row_constant_shifts(rng):
    net = make_net({"A": 2, "B": 3}, {"B": ("A",)}, rng)
    q = Query({"A": "0"}, {"B": "2"})
    g = query_gradient(net, q)
    shifted = {n: t + rng.normal(size=t.shape[:-1])[..., None] for n, t in g.items()}
    assert variance_v1(net, q, shifted) == pytest.approx(variance_v1(net, q, g), rel=1e-10)


def test_single_node_closed_form(rng):
    net = make_net({"A": 4}, {}, rng)
    a = net.alpha["A"]
    p = a[1] / a.sum()
    assert variance_v1(net, Query({"A": "1"})) == pytest.approx(p * (1 - p) / (a.sum() + 1), rel=1e-12)


def test_constant_query_gradient_is_zero(rng):
    net = make_net({"A": 2, "B": 2}, {"B": ("A",)}, rng)
    g = query_gradient(net, Query({"A": "1"}, {"A": "1"}))
    assert all(not t.any() for t in g.values())
    assert variance_v1(net, Query({"A": "1"}, {"A": "1"})) == 0.0
