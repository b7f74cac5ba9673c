import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, stats

from beliefvar.adjustments import (
    adjusted_means,
    full_bundle,
    iterate_fixed_point,
    moment_approximations,
    sigma_qr_hat,
    solve_v3,
    solve_v4,
    v3_residual,
    v4_residual,
)
from beliefvar.errors import DegenerateDenominator, DegenerateQuery, NonConvergence
from beliefvar.experiments import build_benchmark
from beliefvar.inference import Query

from conftest import make_net


def test_beta_third_moment_is_exact_for_a_beta_variable():
    for a, b in [(2.0, 5.0), (0.7, 0.4), (30.0, 12.0)]:
        d = stats.beta(a, b)
        mu, var = d.mean(), d.var()
        third = float(d.stats(moments="s")) * var**1.5
        approx, _, _ = moment_approximations(mu, mu, var, var, var)
        assert approx == pytest.approx(third, rel=1e-10)


def test_fourth_order_cross_moment():
    _, _, s = moment_approximations(0.3, 0.4, 0.01, 0.02, 0.005)
    assert s == pytest.approx(2 * 0.005**2 + 0.01 * 0.02)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(-0.05, 0.05), st.floats(1e-4, 0.02))
def test_sigma_qr_solves_the_two_shift_equations(mu_q, mu_r, shift, s_rr):
    """Recover sigma_qr by root finding on the q1/q2 moment relations directly."""
    den = mu_r**3 * (1 - mu_r) + mu_r * (1 - 2 * mu_r) * s_rr - s_rr**2
    if abs(den) < 1e-6:
        return

    def gap(s):
        s_qrr = 2 * s * s_rr * (1 - 2 * mu_r) / (mu_r * (1 - mu_r) + s_rr)
        q1 = mu_q + s / mu_r
        q2 = mu_q + (2 * mu_r * s + s_qrr) / (mu_r**2 + s_rr)
        return (q2 - q1) - shift

    # gap is linear in s
    slope = gap(1.0) - gap(0.0)
    expected = -gap(0.0) / slope
    q1 = 0.5
    assert sigma_qr_hat(q1, q1 + shift, mu_r, s_rr) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_sigma_qr_special_cases():
    assert sigma_qr_hat(0.3, 0.35, 1.0, 0.0) == 0.0
    # sigma_rr = 0 reduces to (q2 - q1) mu_r
    assert sigma_qr_hat(0.3, 0.35, 0.4, 0.0) == pytest.approx(0.05 * 0.4, rel=1e-12)
    with pytest.warns(DegenerateDenominator):
        s = sigma_qr_hat(0.3, 0.35, 0.5, 0.25)
    assert s == pytest.approx(0.05 * 0.5)


def test_adjusted_means():
    q3, q4 = adjusted_means(0.3, 0.34, 0.4, 0.0)
    assert q3 == pytest.approx(0.26)
    assert q4 == pytest.approx(0.26)


def test_v4_solves_the_moment_identity():
    """Fixed point of the rearranged identity equals a root of the unrearranged one."""
    q2, q4, s_qr, mu_r, s_rr, v2 = 0.41, 0.36, 0.012, 0.3, 0.004, 0.02
    fp = solve_v4(q2, q4, s_qr, mu_r, s_rr, v2)

    def identity(v):
        s_qqr = 2 * s_qr * v * (1 - 2 * q4) / (q4 * (1 - q4) + v)
        s_qqrr = 2 * s_qr**2 + v * s_rr
        lhs = (mu_r**2 * v + 2 * mu_r * s_qqr + s_qqrr) / (mu_r**2 + s_rr)
        return lhs - (v2 + (q2 - q4) ** 2)

    root = optimize.brentq(identity, 1e-9, 1.0, xtol=1e-15)
    assert fp.converged
    assert fp.value == pytest.approx(root, rel=1e-9)


def test_v3_fixed_point_residual():
    fp = solve_v3(0.3, 0.33, 0.27, 0.015)
    assert fp.converged and fp.iterations <= 20
    assert abs(v3_residual(fp.value, 0.3, 0.33, 0.27, 0.015)) < 1e-10


def test_no_shift_means_no_adjustment():
    assert solve_v3(0.3, 0.3, 0.3, 0.01).value == 0.01
    assert solve_v4(0.3, 0.3, 0.0, 0.5, 0.01, 0.01).value == 0.01


def test_iteration_controls():
    fp = iterate_fixed_point(lambda v: 0.5 * v + 1.0, 0.0)
    assert fp.converged and fp.value == pytest.approx(2.0, abs=1e-11)
    fp = iterate_fixed_point(lambda v: 2.0 - v, 0.0)
    assert fp.damped and fp.converged and fp.value == pytest.approx(1.0)
    with pytest.warns(NonConvergence):
        fp = iterate_fixed_point(lambda v: v + 1.0, 0.0, max_iter=5)
    assert not fp.converged and fp.iterations == 5
    with pytest.raises(DegenerateQuery):
        iterate_fixed_point(lambda v: math.inf, 0.0)


def test_single_root_bundle_matches_dirichlet(rng):
    net = make_net({"A": 2}, {}, rng)
    a = net.alpha["A"]
    p = a[0] / a.sum()
    b = full_bundle(net, Query({"A": "0"}))
    for v in b.variances:
        assert v == pytest.approx(p * (1 - p) / (a.sum() + 1), rel=1e-12)
    for q in b.means:
        assert q == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("name", ["nb2", "nb4", "diamond"])
def test_bundle_residuals_on_benchmarks(name):
    net, qs = build_benchmark(name, 20)
    for q in qs:
        b = full_bundle(net, q)
        s_qr = sigma_qr_hat(b.q1, b.q2, b.mu_r, b.sigma_rr)
        assert abs(v3_residual(b.v3, b.q1, b.q2, b.q3, b.v2)) < 1e-10
        assert abs(v4_residual(b.v4, b.q2, b.q4, s_qr, b.mu_r, b.sigma_rr, b.v2)) < 1e-10
        assert all(0 <= x <= 1 for x in b.means)
        assert all(x >= 0 for x in b.variances)
