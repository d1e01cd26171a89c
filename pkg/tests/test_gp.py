import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import minimize

from radiostripe.gp import (GPDomainError, GPProblem, Monomial, Posynomial, SignomialProblem,
                            _LogSumExpOracle, dump_gp, gp_solve, monomial_condense, sgp_solve)

x, y, t, d, g = (Monomial.var(v) for v in "xytdg")


def test_monomial_algebra_and_evaluation():
    m = 3.0 * x**2 / y
    assert_allclose(m({"x": 2.0, "y": 4.0}), 3.0)
    assert_allclose((m * m)({"x": 2.0, "y": 4.0}), 9.0)
    assert set(m.variables) == {"x", "y"}
    assert_allclose(m.gradient({"x": 2.0, "y": 4.0})["x"], 3.0)  # 6x/y
    with pytest.raises(GPDomainError):
        m({"x": -1.0, "y": 1.0})
    with pytest.raises(GPDomainError):
        Monomial(0.0)


def test_posynomial_evaluation_and_gradient():
    p = x + 2 * y + x * y
    pt = {"x": 1.5, "y": 0.5}
    assert_allclose(p(pt), 1.5 + 1.0 + 0.75)
    grad = p.gradient(pt)
    assert_allclose([grad["x"], grad["y"]], [1 + 0.5, 2 + 1.5])
    assert len(p) == 3


def test_condense_cancelling_exponents():
    m = monomial_condense(x + x**-1, {"x": 1.0})
    assert_allclose(m.coef, 2.0)
    assert_allclose(m.exps.get("x", 0.0), 0.0, atol=1e-15)


def test_condense_inverse_power_sum():
    d1, d2 = Monomial.var("d1"), Monomial.var("d2")
    m = monomial_condense(d1**-4 + d2**-4, {"d1": 1.0, "d2": 1.0})
    assert_allclose(m.coef, 2.0)
    assert_allclose([m.exps["d1"], m.exps["d2"]], [-2.0, -2.0])


def test_condense_single_term_unchanged():
    m = 2.5 * x**3 * y**-1
    assert monomial_condense(Posynomial([m]), {"x": 2.0, "y": 3.0}) == m


def test_condense_rejects_non_positive_point():
    with pytest.raises(GPDomainError):
        monomial_condense(x + y, {"x": 0.0, "y": 1.0})


def random_posynomial(rng, n_vars=3, n_terms=4):
    names = [f"v{i}" for i in range(n_vars)]
    terms = [Monomial(float(rng.uniform(0.1, 5)),
                      {v: float(rng.uniform(-3, 3)) for v in names})
             for _ in range(n_terms)]
    return Posynomial(terms), names


@given(seed=st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_condensed_monomial_underestimates(seed):
    rng = np.random.default_rng(seed)
    p, names = random_posynomial(rng, int(rng.integers(1, 5)), int(rng.integers(2, 6)))
    x0 = {v: float(rng.uniform(0.2, 5)) for v in names}
    m = monomial_condense(p, x0)
    assert_allclose(m(x0), p(x0), rtol=1e-12)
    pts = np.exp(rng.uniform(-4, 4, (500, len(names))))
    for row in pts:
        pt = dict(zip(names, row))
        assert m(pt) <= p(pt) * (1 + 1e-12)


@given(seed=st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_condensed_gradient_matches_finite_difference(seed):
    rng = np.random.default_rng(seed)
    p, names = random_posynomial(rng)
    x0 = {v: float(rng.uniform(0.5, 2)) for v in names}
    m = monomial_condense(p, x0)
    gm = m.gradient(x0)
    for v in names:
        h = 1e-6 * x0[v]
        fd = (p({**x0, v: x0[v] + h}) - p({**x0, v: x0[v] - h})) / (2 * h)
        assert_allclose(gm[v], fd, rtol=1e-6, atol=1e-9 * abs(p(x0)))


def test_gp_active_constraint():
    prob = GPProblem(objective=t)
    prob.add(t * x, 1.0)
    prob.add(2 * x**-1, 1.0)  # x >= 2
    res = gp_solve(prob)
    assert res.status == "optimal"
    assert_allclose([res.values["t"], res.values["x"]], [0.5, 2.0], rtol=1e-7)


def test_gp_minimize_sum_with_product_floor():
    # minimize x + y  <=>  maximize t with t (x + y) <= 1
    prob = GPProblem(objective=t)
    prob.add((x + y) * t, 1.0)
    prob.add(x**-1 * y**-1, 1.0)
    res = gp_solve(prob)
    assert res.status == "optimal"
    assert_allclose([res.values["x"], res.values["y"]], [1.0, 1.0], rtol=1e-6)
    assert_allclose(1 / res.objective, 2.0, rtol=1e-8)


def test_gp_trivial_bound():
    prob = GPProblem(objective=t)
    prob.add(t, 1.0)
    res = gp_solve(prob)
    assert_allclose(res.objective, 1.0, rtol=1e-8)


def test_gp_box_bounds():
    prob = GPProblem(objective=t, bounds={"x": (0.5, 3.0)})
    prob.add(t * x**-1, 1.0)
    res = gp_solve(prob)
    assert_allclose(res.values["x"], 3.0, rtol=1e-7)
    assert max(prob.violations(res.values).values()) <= 1e-8


def test_gp_infeasible_reports_constraints():
    prob = GPProblem(objective=t)
    prob.add(t, 1.0, "cap")
    prob.add(x, 1.0, "x_small")
    prob.add(2 * x**-1, 1.0, "x_large")
    res = gp_solve(prob)
    assert res.status == "infeasible"
    assert set(res.diagnostics["violated"]) & {"x_small", "x_large"}


@pytest.mark.parametrize("seed", range(6))
def test_gp_matches_independent_nlp(seed):
    """Random feasible GPs: compare with SLSQP on the convex log-domain form."""
    rng = np.random.default_rng(seed)
    names = ["v0", "v1", "v2"]
    prob = GPProblem(objective=Monomial(1.0, {"v0": 1.0, "v1": 0.5}))
    for _ in range(4):
        lhs, _ = random_posynomial(rng, 3, 3)
        # scale so that the all-ones point is strictly feasible
        prob.add(lhs * (0.5 / lhs({v: 1.0 for v in names})), 1.0)
    prob.bounds = {v: (0.05, 20.0) for v in names}
    res = gp_solve(prob)
    assert res.status == "optimal"

    cons = []
    for lhs, _ in prob.constraints:
        cons.append({"type": "ineq",
                     "fun": lambda z, lhs=lhs: -math.log(lhs(dict(zip(names, np.exp(z)))))})
    ref = minimize(lambda z: -(z[0] + 0.5 * z[1]), np.zeros(3), method="SLSQP",
                   bounds=[(math.log(0.05), math.log(20.0))] * 3, constraints=cons,
                   options={"ftol": 1e-12, "maxiter": 500})
    assert ref.success
    assert_allclose(math.log(res.objective), -ref.fun, atol=1e-6)


def test_lse_oracle_derivatives():
    rng = np.random.default_rng(0)
    n = 5
    K = [1, 3, 2]
    rows = [{0: 1.0}, {0: 2.0, 1: -1.0}, {2: 0.5, 3: 1.0}, {1: 1.0, 4: -2.0},
            {0: -1.0, 4: 1.0}, {3: 1.5}]
    gvec = list(rng.normal(size=6))
    oracle = _LogSumExpOracle(K, rows, gvec, n)
    y0 = rng.normal(size=n)
    z = np.array([1.0, 0.7, 1.3])

    def dense(yv):
        f, df, _ = oracle.evaluate(yv)
        J = np.zeros((len(K), n))
        np.add.at(J, (oracle.df_I, oracle.df_J), df)
        return f, J

    f0, J0 = dense(y0)
    h = 1e-6
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        fd = (dense(y0 + e)[0] - dense(y0 - e)[0]) / (2 * h)
        assert_allclose(J0[:, c], fd, rtol=1e-6, atol=1e-9)
    _, _, hv = oracle.evaluate(y0, z)
    H = np.zeros((n, n))
    np.add.at(H, (oracle.h_I, oracle.h_J), hv)
    H = np.tril(H) + np.tril(H, -1).T
    fd_h = np.zeros((n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        fd_h[:, c] = (z @ dense(y0 + e)[1] - z @ dense(y0 - e)[1]) / (2 * h)
    assert_allclose(H, fd_h, rtol=1e-5, atol=1e-8)


def toy_signomial():
    """maximize t s.t. t <= d^-4, d^2 >= (g - 3)^2 + 1, 0.5 <= g <= 2; optimum g=2, t=1/4."""
    sgp = SignomialProblem(objective=t, bounds={"g": (0.5, 2.0)}, trust_vars=("g", "d"))
    sgp.add(t * d**4, 1.0, "gain")
    sgp.add(d**-2 * (g**2 + 10.0), 1.0 + 6.0 * g * d**-2, "dist")
    return sgp


def test_sgp_toy_converges_monotonically():
    res, trace = sgp_solve(toy_signomial(), {"t": 0.01, "g": 1.0, "d": math.sqrt(5)})
    ts = [e["t"] for e in trace]
    assert all(b >= a - 1e-9 for a, b in zip(ts, ts[1:]))
    assert_allclose(res.values["g"], 2.0, rtol=1e-5)
    assert_allclose(res.objective, 0.25, rtol=1e-5)
    assert res.status == "optimal"


def test_sgp_trust_region_limits_steps():
    omega = 1.001
    res, trace = sgp_solve(toy_signomial(), {"t": 0.01, "g": 1.0, "d": math.sqrt(5)},
                           omega=omega, max_iter=5, record=lambda v: {"g": v["g"]})
    gs = [1.0] + [e["g"] for e in trace]
    for a, b in zip(gs, gs[1:]):
        assert abs(math.log(b / a)) <= math.log(omega) + 1e-9
    assert res.status == "max-iter"
    assert len(trace) == 5


def test_sgp_on_plain_gp_matches_gp_solve():
    sgp = SignomialProblem(objective=t)
    sgp.add(t * x, 1.0)
    sgp.add(2 * x**-1, 1.0)
    res, trace = sgp_solve(sgp, {"t": 0.1, "x": 3.0}, omega=10.0)
    assert len(trace) <= 2
    assert_allclose(res.objective, 0.5, rtol=1e-7)


def test_sgp_infeasible_start():
    sgp = SignomialProblem(objective=t, bounds={"x": (2.0, 3.0)})
    sgp.add(t, 1.0)
    sgp.add(x, 1.0)
    res, trace = sgp_solve(sgp, {"t": 0.5, "x": 2.5})
    assert res.status == "infeasible"
    assert trace == []


def test_sgp_argument_checks():
    with pytest.raises(ValueError):
        sgp_solve(toy_signomial(), {"t": 1, "g": 1, "d": 3}, eps=0)
    with pytest.raises(GPDomainError):
        toy_signomial().condense({"t": 1, "g": 1, "d": 3}, 1.0)


def test_dump_gp_format():
    prob = GPProblem(objective=t, bounds={"x": (0.5, None)})
    prob.add(t * x + y, 2.0 * x, "c0")
    text = dump_gp(prob)
    lines = text.splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "variables: t x y"
    assert lines[2] == "maximize: 1.0 * t^1.0"
    assert lines[3] == "c0: 1.0 * t^1.0 * x^1.0 + 1.0 * y^1.0 <= 2.0 * x^1.0"
    assert lines[4] == "bound x: 0.5 <= x <= -"
