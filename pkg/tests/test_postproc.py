import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from golem_dag import postproc
from golem_dag.graphs import descendants, is_dag
from golem_dag.postproc import PostprocConfig


def test_threshold_examples():
    b = np.array([[0.0, 0.29, -0.31], [0.3, 0.0, 1.0], [-0.1, 2.0, 0.0]])
    want = np.array([[0.0, 0.0, -0.31], [0.3, 0.0, 1.0], [0.0, 2.0, 0.0]])
    np.testing.assert_array_equal(postproc.threshold(b), want)
    np.testing.assert_array_equal(postproc.threshold(b, PostprocConfig(0.0)), b)
    with pytest.raises(ValueError):
        PostprocConfig(-0.1)


def test_threshold_does_not_mutate():
    b = np.array([[0.0, 0.1], [0.0, 0.0]])
    postproc.threshold(b)
    assert b[0, 1] == 0.1


def test_dagify_removes_weakest_cycle_edge():
    b = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.9], [0.5, 0.0, 0.0]])
    removed = []
    out = postproc.dagify(b, removed)
    assert removed == [(2, 0, 0.5)]
    assert is_dag(out)


def test_dagify_global_order_can_drop_off_cycle_edge():
    # The 0.35 edge is weaker than every cycle edge, so it goes first.
    b = np.zeros((4, 4))
    b[0, 1], b[1, 0], b[2, 3] = 1.0, 0.6, 0.35
    removed = []
    out = postproc.dagify(b, removed)
    assert [(s, t) for s, t, _ in removed] == [(2, 3), (1, 0)]
    assert out[0, 1] == 1.0 and out[2, 3] == 0.0 and is_dag(out)


def test_dagify_tie_break():
    b = np.array([[0.0, 0.5], [-0.5, 0.0]])
    removed = []
    postproc.dagify(b, removed)
    assert removed == [(0, 1, 0.5)]


def test_dagify_noop_on_dag():
    b = np.triu(np.ones((4, 4)), 1)
    removed = []
    np.testing.assert_array_equal(postproc.dagify(b, removed), b)
    assert removed == []


def _weights(d):
    return arrays(np.float64, (d, d), elements=st.one_of(st.just(0.0), st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3)))


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6).flatmap(_weights))
def test_dagify_properties(b):
    np.fill_diagonal(b, 0.0)
    removed = []
    out = postproc.dagify(b, removed)
    assert oracles.is_acyclic(out != 0)
    kept = out != 0
    np.testing.assert_array_equal(out[kept], b[kept])  # weights unchanged
    assert not np.any(kept & (b == 0))  # no edges added
    if removed:
        # Minimality: putting the last removed edge back recreates a cycle.
        s, t, _ = removed[-1]
        assert s in descendants(out != 0, t)
        # Removal follows ascending |weight|.
        mags = [abs(w) for _, _, w in removed]
        assert mags == sorted(mags)
        assert max(mags) <= np.abs(out[kept]).min(initial=np.inf)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6).flatmap(_weights), st.floats(0.0, 1.5))
def test_postprocess_is_threshold_then_dagify(b, omega):
    np.fill_diagonal(b, 0.0)
    cfg = PostprocConfig(omega)
    out = postproc.postprocess(b, cfg)
    assert is_dag(out)
    assert np.all(np.abs(out[out != 0]) >= omega)
    np.testing.assert_array_equal(out, postproc.dagify(postproc.threshold(b, cfg)))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6).flatmap(_weights))
def test_postprocess_idempotent(b):
    np.fill_diagonal(b, 0.0)
    once = postproc.postprocess(b)
    np.testing.assert_array_equal(postproc.postprocess(once), once)
