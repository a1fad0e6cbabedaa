import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsnn.plasticity import (
    ADAPTIVE,
    STANDARD,
    FiringFactorState,
    PlasticityConfig,
    TraceState,
    ad_stdp_delta,
    apply_trace_updates,
    firing_factor,
    gating_vectors,
    normalize_weights,
    record_selection,
    standard_stdp_delta,
)

# frozen scalar evaluations of the closed forms
E_INV = 0.36787944117144233
LTP_AT_TAU = 0.0036787944117144233  # 0.01 * e^-1
LTD_HALF_F = -0.0022072766470286540  # -0.012 * 0.5 * e^-1


def test_firing_factor_frozen_values():
    assert firing_factor(10, 1.0, 10.0) == pytest.approx(E_INV, abs=1e-12)
    assert firing_factor(0, 3.7, 2.0) == 1.0
    assert abs(firing_factor(1e6, 1.0, 10.0)) < 1e-6


@pytest.mark.parametrize("alpha", [1.0, 1.5, 4.0])
def test_firing_factor_asymptote(alpha):
    assert firing_factor(1e9, alpha, 10.0) == pytest.approx(1 - 1 / alpha, abs=1e-12)


def test_firing_factor_vectorizes():
    f = firing_factor(np.array([0, 10, 20]), 1.0, 10.0)
    np.testing.assert_allclose(f, [1.0, E_INV, E_INV ** 2], rtol=1e-12)


@pytest.mark.parametrize("n,alpha,tau", [(-1, 1.0, 10.0), (1, 0.0, 10.0), (1, 1.0, 0.0)])
def test_firing_factor_rejects(n, alpha, tau):
    with pytest.raises(ValueError):
        firing_factor(n, alpha, tau)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(1.0, 10.0), st.floats(0.1, 100.0))
def test_firing_factor_monotone_and_bounded(n1, n2, alpha, tau):
    lo, hi = sorted((n1, n2))
    f_lo, f_hi = firing_factor(lo, alpha, tau), firing_factor(hi, alpha, tau)
    assert f_hi <= f_lo + 1e-15
    assert 1 - 1 / alpha - 1e-12 <= f_hi <= 1.0


def test_selection_accumulation():
    ff = FiringFactorState.fresh(3, 1.0, 10.0)
    for _ in range(10):
        record_selection(ff, 0, 1, asr_bmu=0.2, asr_sbmu=0.1)
    assert ff.f[0] == pytest.approx(E_INV, abs=1e-12)
    assert ff.exposure[1] == pytest.approx(5.0)
    assert ff.f[1] == pytest.approx(firing_factor(5.0, 1.0, 10.0), abs=1e-12)
    assert ff.f[2] == 1.0
    np.testing.assert_array_equal(ff.n, [10, 10, 0])


def test_silent_sbmu_is_unchanged():
    ff = FiringFactorState.fresh(2)
    record_selection(ff, 1, 0, 0.3, 0.0)
    assert ff.f[0] == 1.0


def test_equal_rates_decay_sbmu_like_bmu():
    ff = FiringFactorState.fresh(2)
    record_selection(ff, 0, 1, 0.3, 0.3)
    assert ff.f[0] == ff.f[1]


@pytest.mark.parametrize("bmu,sbmu,a,b", [(0, 0, 0.2, 0.1), (0, 1, 0.0, 0.0), (0, 1, 0.1, 0.2)])
def test_record_selection_rejects(bmu, sbmu, a, b):
    with pytest.raises(ValueError):
        record_selection(FiringFactorState.fresh(2), bmu, sbmu, a, b)


def test_identical_histories_identical_factors():
    a, b = FiringFactorState.fresh(3), FiringFactorState.fresh(3)
    for s in (a, b):
        record_selection(s, 2, 0, 0.4, 0.1)
        record_selection(s, 2, 1, 0.3, 0.3)
    np.testing.assert_array_equal(a.f, b.f)


def test_stdp_frozen_values():
    cfg = PlasticityConfig(A_plus=0.01, A_minus=-0.012)
    assert ad_stdp_delta(20.0, 1.0, cfg) == pytest.approx(LTP_AT_TAU, abs=1e-15)
    assert ad_stdp_delta(-20.0, 0.5, cfg) == pytest.approx(LTD_HALF_F, abs=1e-15)
    assert standard_stdp_delta(cfg.tau_pre, cfg) == pytest.approx(cfg.A_plus / math.e, abs=1e-15)


@pytest.mark.parametrize("dt", [-50.0, -1.0, 0.0, 1.0, 50.0])
def test_zero_factor_blocks_learning(dt):
    assert ad_stdp_delta(dt, 0.0, PlasticityConfig()) == 0.0


def test_coincidence_is_full_ltp():
    cfg = PlasticityConfig()
    assert ad_stdp_delta(0.0, 1.0, cfg) == cfg.A_plus


def test_far_pairs_vanish():
    cfg = PlasticityConfig()
    assert abs(standard_stdp_delta(1e4, cfg)) < 1e-100
    assert abs(standard_stdp_delta(-1e4, cfg)) < 1e-100


@settings(max_examples=200, deadline=None)
@given(st.floats(-500, 500), st.floats(0, 1))
def test_delta_bound_and_sign(dt, f):
    cfg = PlasticityConfig()
    d = ad_stdp_delta(dt, f, cfg)
    assert abs(d) <= max(cfg.A_plus, abs(cfg.A_minus)) * f + 1e-18
    assert d >= 0 if dt >= 0 else d <= 0
    if dt != 0:
        assert standard_stdp_delta(dt, cfg) == ad_stdp_delta(dt, 1.0, cfg)


def _pair(cfg, t_pre, t_post, f=1.0, mode=ADAPTIVE):
    w = np.full((1, 1), 0.5)
    tr = TraceState.zeros(1, 1)
    for t in range(max(t_pre, t_post) + 1):
        apply_trace_updates(w, np.array([t == t_pre]), np.array([t == t_post]), tr, np.array([f]), cfg, mode, t=t)
    return w[0, 0] - 0.5


@pytest.mark.parametrize("f", [1.0, 0.6, 0.1])
def test_trace_matches_pairwise(f):
    cfg = PlasticityConfig(A_plus=0.01, A_minus=-0.012)
    for k in range(1, 101):
        assert abs(_pair(cfg, 0, k, f) - ad_stdp_delta(k, f, cfg)) <= 1e-12
        assert abs(_pair(cfg, k, 0, f) - ad_stdp_delta(-k, f, cfg)) <= 1e-12


def test_no_spikes_only_decay():
    cfg = PlasticityConfig()
    w = np.full((2, 3), 0.4)
    tr = TraceState(np.array([1.0, 0.5]), np.array([0.2, 0.0, 1.0]))
    apply_trace_updates(w, np.zeros(2, bool), np.zeros(3, bool), tr, None, cfg, STANDARD)
    np.testing.assert_array_equal(w, 0.4)
    np.testing.assert_allclose(tr.pre, np.array([1.0, 0.5]) * math.exp(-1 / 20))


def test_ltp_at_ceiling_stays():
    cfg = PlasticityConfig()
    w = np.full((1, 1), cfg.w_max)
    tr = TraceState.zeros(1, 1)
    apply_trace_updates(w, np.array([True]), np.array([True]), tr, None, cfg, STANDARD)
    assert w[0, 0] == cfg.w_max


def test_adaptive_with_unit_factor_equals_standard(rng):
    cfg = PlasticityConfig()
    w1 = rng.random((6, 4))
    w2 = w1.copy()
    t1, t2 = TraceState.zeros(6, 4), TraceState.zeros(6, 4)
    for t in range(60):
        pre, post = rng.random(6) < 0.3, rng.random(4) < 0.2
        apply_trace_updates(w1, pre, post, t1, FiringFactorState.fresh(4), cfg, ADAPTIVE, t=t)
        apply_trace_updates(w2, pre, post, t2, None, cfg, STANDARD, t=t)
    np.testing.assert_array_equal(w1, w2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_weights_stay_in_bounds(seed):
    rng = np.random.default_rng(seed)
    cfg = PlasticityConfig(A_plus=0.5, A_minus=-0.5, w_min=0.1, w_max=0.9, normalize_mean=None)
    w = rng.uniform(0.1, 0.9, (5, 3))
    tr = TraceState.zeros(5, 3)
    f = rng.random(3)
    for t in range(30):
        apply_trace_updates(w, rng.random(5) < 0.5, rng.random(3) < 0.5, tr, f, cfg, ADAPTIVE, t=t)
        assert w.min() >= 0.1 and w.max() <= 0.9


def test_gating_sides():
    f = np.array([0.2, 0.9])
    pre, post = gating_vectors(PlasticityConfig(), f, 3, 2, ADAPTIVE)
    np.testing.assert_array_equal(pre, 1.0)
    np.testing.assert_array_equal(post, f)
    pre, post = gating_vectors(PlasticityConfig(ff_side="presynaptic"), f, 3, 2, ADAPTIVE)
    np.testing.assert_array_equal(post, 1.0)
    with pytest.raises(ValueError):
        gating_vectors(PlasticityConfig(), f, 3, 2, "bogus")


def test_normalize_columns():
    w = np.array([[1.0, 0.0], [3.0, 0.0]])
    normalize_weights(w, 2.0)
    np.testing.assert_allclose(w[:, 0], [0.5, 1.5])
    np.testing.assert_array_equal(w[:, 1], 0.0)


@pytest.mark.parametrize("kwargs", [
    {"A_plus": 0.0}, {"A_minus": 0.01}, {"w_min": 1.0, "w_max": 0.5}, {"alpha_base": 0.5},
    {"tau_ff": 0.0}, {"ff_side": "left"}, {"normalize_mean": 1.0},
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        PlasticityConfig(**kwargs)
