import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from golem_dag import graphs, scores, sem
from golem_dag.errors import DegenerateResidualError
from golem_dag.graphs import GraphSpec
from golem_dag.numlin import log_abs_det
from golem_dag.scores import ScoreConfig, ScoreObjective, Variant

B0 = 1.5
SIGMA2 = np.array([[1.0, B0], [B0, B0**2 + 1.0]])
PLAIN = {v: ScoreConfig(v, 0.0, 0.0) for v in Variant}


def bivariate(b, c):
    return np.array([[0.0, b], [c, 0.0]])


def test_defaults():
    assert ScoreConfig.golem_ev() == ScoreConfig(Variant.EV, 2e-2, 5.0)
    assert ScoreConfig.golem_nv() == ScoreConfig(Variant.NV, 2e-3, 5.0)
    with pytest.raises(ValueError):
        ScoreConfig(Variant.EV, -1.0, 0.0)
    assert ScoreConfig("NV").variant is Variant.NV


def test_hand_computed_values():
    x = np.array([[1.0, 2.0], [-1.0, -2.0], [2.0, 1.0], [-2.0, -1.0]])
    b = bivariate(0.5, 0.0)
    r = x - x @ b
    s = (r**2).sum(axis=0)  # [10, 10 - 2*0.5*8 + 0.25*10] = [10, 4.5]
    np.testing.assert_allclose(s, [10.0, 4.5])
    assert math.isclose(scores.likelihood_nv(b, x), 0.5 * math.log(10 * 4.5), rel_tol=1e-14)
    assert math.isclose(scores.likelihood_ev(b, x), math.log(14.5), rel_tol=1e-14)
    assert math.isclose(scores.least_squares(b, x), 14.5 / 8, rel_tol=1e-14)


def test_logdet_term_for_cycle():
    x = sem.population_data(SIGMA2)
    b = bivariate(0.5, 0.4)
    # det(I - B) = 1 - bc = 0.8
    tr = ((x - x @ b) ** 2).sum()
    assert math.isclose(scores.likelihood_ev(b, x), math.log(tr) - math.log(0.8), rel_tol=1e-13)


def test_penalties():
    b = np.array([[0.0, -2.0], [0.5, 0.0]])
    assert scores.l1_penalty(b) == 2.5
    assert scores.dag_penalty(np.zeros((3, 3))) == 0.0
    assert math.isclose(scores.dag_penalty(bivariate(1.0, 1.0)), 2 * math.cosh(1) - 2, rel_tol=1e-14)
    # 2-cycle with weights a, c: tr(exp(B o B)) = 2 cosh(|a c|).
    assert math.isclose(scores.dag_penalty(b), 2 * math.cosh(1.0) - 2, rel_tol=1e-13)


def test_score_composition():
    x = sem.center_columns(sem.sample(graphs.generate(GraphSpec("ER", 4, 1, seed=0)), sem.NoiseSpec("gaussian_ev"), 100, 0))
    b = np.random.default_rng(0).normal(scale=0.3, size=(4, 4))
    np.fill_diagonal(b, 0)
    cfg = ScoreConfig(Variant.NV, 0.1, 2.0)
    v = scores.score(b, x, cfg)
    assert math.isclose(v.total, v.data_term + 0.1 * v.l1_term + 2.0 * v.dag_term, rel_tol=1e-14)
    obj = ScoreObjective.from_data(x, cfg).value(b)
    assert math.isclose(obj.total, v.total, rel_tol=1e-12)


def test_input_validation():
    x = np.array([[1.0, 0.0], [-1.0, 0.0]]) + 1.0
    with pytest.raises(ValueError, match="centered"):
        scores.likelihood_ev(np.zeros((2, 2)), x)
    with pytest.raises(ValueError, match="columns"):
        scores.likelihood_ev(np.zeros((3, 3)), x - 1.0)
    with pytest.raises(DegenerateResidualError):
        scores.likelihood_nv(np.zeros((2, 2)), x - 1.0)  # second column all zero


# ---------------------------------------------------------------------------
# Bivariate population oracles


def test_ls_population_matches_closed_form():
    for b, c in [(0.0, 0.0), (1.5, 0.0), (0.3, -0.7)]:
        want = 0.5 * ((b - B0) ** 2 + (B0 * c - 1) ** 2 + c**2 + 1)
        assert math.isclose(scores.population_score(bivariate(b, c), SIGMA2, PLAIN[Variant.LS]), want, rel_tol=1e-13)


def test_ev_population_stationary_values():
    pts = [(B0, 0.0, math.log(2)), ((B0**2 + 2) / B0, 2 / B0, math.log(2)), (-2 / B0, 2 / B0, math.log(B0**2 + 2))]
    obj = ScoreObjective.from_covariance(SIGMA2, PLAIN[Variant.EV])
    for b, c, want in pts:
        bb = bivariate(b, c)
        assert abs(scores.population_score(bb, SIGMA2, PLAIN[Variant.EV]) - want) < 1e-12
        assert np.abs(obj.gradient(bb)).max() < 1e-12


def test_population_offset():
    sigma = SIGMA2
    x = sem.population_data(sigma)
    n = x.shape[0]
    b = bivariate(0.7, 0.2)
    for v, f in [(Variant.EV, scores.likelihood_ev), (Variant.NV, scores.likelihood_nv), (Variant.LS, scores.least_squares)]:
        pop = scores.population_score(b, sigma, PLAIN[v])
        assert math.isclose(f(b, x), pop + scores.population_offset(v, 2, n), rel_tol=1e-12)


def test_population_score_validation():
    with pytest.raises(ValueError, match="symmetric"):
        scores.population_score(np.zeros((2, 2)), np.array([[1.0, 0.5], [0.0, 1.0]]), PLAIN[Variant.LS])
    with pytest.raises(ValueError, match="positive definite"):
        scores.population_score(np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]), PLAIN[Variant.LS])


def test_dag_has_zero_logdet():
    for seed in range(20):
        b = graphs.generate(GraphSpec("ER", 10, 2, seed=seed))
        assert abs(log_abs_det(np.eye(10) - b)) < 1e-12
        assert scores.dag_penalty(b) < 1e-12


# ---------------------------------------------------------------------------
# Gradients


def _fd(f, b, eps=1e-6):
    g = np.zeros_like(b)
    d = b.shape[0]
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            e = np.zeros_like(b)
            e[i, j] = eps
            g[i, j] = (f(b + e) - f(b - e)) / (2 * eps)
    return g


def _instance(rng, d, n=60):
    x = sem.center_columns(rng.normal(size=(n, d)) @ rng.normal(size=(d, d)))
    b = rng.normal(scale=0.4, size=(d, d))
    b[np.abs(b) < 0.05] = 0.1  # keep away from l1 kinks
    np.fill_diagonal(b, 0.0)
    return x, b


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Variant)), st.integers(2, 6))
def test_gradient_matches_finite_differences(seed, variant, d):
    rng = np.random.default_rng(seed)
    x, b = _instance(rng, d)
    cfg = ScoreConfig(variant, 0.05, 0.5)
    g = scores.score_gradient(b, x, cfg)
    num = _fd(lambda m: scores.score(m, x, cfg).total, b)
    np.testing.assert_allclose(g, num, rtol=1e-5, atol=1e-5 * max(1.0, np.abs(num).max()))
    assert np.all(np.diag(g) == 0)


def test_dag_penalty_gradient():
    rng = np.random.default_rng(4)
    b = rng.normal(scale=0.5, size=(5, 5))
    off = ~np.eye(5, dtype=bool)
    np.testing.assert_allclose(scores.dag_penalty_grad(b)[off], _fd(scores.dag_penalty, b)[off], rtol=1e-6, atol=1e-8)


def test_l1_subgradient_zero_at_zero():
    x = sem.center_columns(np.random.default_rng(0).normal(size=(20, 3)))
    g_l1 = scores.score_gradient(np.zeros((3, 3)), x, ScoreConfig(Variant.LS, 1.0, 0.0))
    g0 = scores.score_gradient(np.zeros((3, 3)), x, ScoreConfig(Variant.LS, 0.0, 0.0))
    np.testing.assert_array_equal(g_l1, g0)
