"""One sample presentation: Poisson input raster -> LIF layer with optional online STDP.

Two interchangeable implementations share one signature:

* ``present_numpy`` composes :func:`dsnn.lif.step_layer`,
  :func:`dsnn.lif.apply_lateral_inhibition` and
  :func:`dsnn.plasticity.apply_trace_updates` step by step.
* ``present_numba`` is the fused loop compiled with numba.

Both evaluate the same floating-point expressions in the same order and
produce bit-identical results. ``present`` picks numba unless
``DSNN_DISABLE_NUMBA`` is set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, njit
from .lif import LayerState, LifParams, apply_lateral_inhibition, step_layer
from .plasticity import PlasticityConfig, TraceState, apply_trace_updates


@dataclass
class Presentation:
    counts: np.ndarray  # spikes per neuron
    raster: np.ndarray | None = None  # (duration, neurons) when requested

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def present_numpy(
    raster: np.ndarray,
    weights: np.ndarray,
    state: LayerState,
    traces: TraceState,
    lif: LifParams,
    stdp: PlasticityConfig,
    f_pre: np.ndarray,
    f_post: np.ndarray,
    weight_scale: float,
    learn: bool,
    adapt: bool,
    dt: float = 1.0,
    record: bool = False,
) -> Presentation:
    n_post = weights.shape[1]
    counts = np.zeros(n_post, dtype=np.int64)
    out = np.zeros((raster.shape[0], n_post), dtype=bool) if record else None
    inhibition = np.zeros(n_post)
    for t in range(raster.shape[0]):
        pre = raster[t]
        rows = np.flatnonzero(pre)
        drive = weights[rows].sum(axis=0) if rows.size else np.zeros(n_post)
        current = weight_scale * drive + inhibition
        spikes = step_layer(state, current, lif, dt, adapt=adapt)
        inhibition = apply_lateral_inhibition(spikes, lif)
        if learn:
            apply_trace_updates(weights, pre, spikes, traces, None, stdp, dt=dt, t=t, gates=(f_pre, f_post))
        counts += spikes
        if record:
            out[t] = spikes
    return Presentation(counts, out)


@njit
def _present_kernel(
    raster, weights, v, theta, refrac, pre_tr, post_tr, f_pre, f_post,
    v_rest, v_reset, v_thresh, leak, refractory_period, theta_plus, theta_decay, inhibition_strength,
    a_plus, a_minus, pre_decay, post_decay, w_min, w_max,
    weight_scale, learn, adapt, record_out,
):
    n_steps, n_pre = raster.shape
    n_post = weights.shape[1]
    counts = np.zeros(n_post, dtype=np.int64)
    drive = np.zeros(n_post)
    inhibition = np.zeros(n_post)
    spikes = np.zeros(n_post, dtype=np.bool_)
    g = np.zeros(n_post)
    h = np.zeros(n_pre)
    record = record_out.shape[0] > 0
    for t in range(n_steps):
        for j in range(n_post):
            drive[j] = 0.0
        for i in range(n_pre):
            if raster[t, i]:
                for j in range(n_post):
                    drive[j] += weights[i, j]
        n_spk = 0
        for j in range(n_post):
            current = weight_scale * drive[j] + inhibition[j]
            spikes[j] = False
            if refrac[j] == 0:
                v[j] = v[j] + leak * (v_rest - v[j]) + current
                if v[j] >= v_thresh + theta[j]:
                    spikes[j] = True
                    v[j] = v_reset
                    refrac[j] = refractory_period
                    n_spk += 1
            else:
                refrac[j] -= 1
            if adapt:
                theta[j] = theta[j] * theta_decay
                if spikes[j]:
                    theta[j] += theta_plus
        for j in range(n_post):
            peers = n_spk - (1 if spikes[j] else 0)
            inhibition[j] = -inhibition_strength * float(peers)
            if spikes[j]:
                counts[j] += 1
                if record:
                    record_out[t, j] = True
        if learn:
            for i in range(n_pre):
                pre_tr[i] *= pre_decay
            for j in range(n_post):
                post_tr[j] *= post_decay
            for i in range(n_pre):
                if raster[t, i]:
                    pre_tr[i] = 1.0
            for j in range(n_post):
                g[j] = (a_minus * f_post[j]) * post_tr[j]
            for i in range(n_pre):
                if raster[t, i]:
                    for j in range(n_post):
                        w = weights[i, j] + g[j] * f_pre[i]
                        weights[i, j] = min(max(w, w_min), w_max)
            if n_spk > 0:
                for i in range(n_pre):
                    h[i] = (a_plus * f_pre[i]) * pre_tr[i]
                for j in range(n_post):
                    if spikes[j]:
                        for i in range(n_pre):
                            w = weights[i, j] + h[i] * f_post[j]
                            weights[i, j] = min(max(w, w_min), w_max)
                for j in range(n_post):
                    if spikes[j]:
                        post_tr[j] = 1.0
    return counts


def present_numba(
    raster, weights, state, traces, lif, stdp, f_pre, f_post, weight_scale, learn, adapt, dt=1.0, record=False
) -> Presentation:
    n_post = weights.shape[1]
    out = np.zeros((raster.shape[0] if record else 0, n_post), dtype=np.bool_)
    counts = _present_kernel(
        np.ascontiguousarray(raster, dtype=np.bool_), weights,
        state.v, state.theta, state.refrac, traces.pre, traces.post,
        np.ascontiguousarray(f_pre, dtype=np.float64), np.ascontiguousarray(f_post, dtype=np.float64),
        float(lif.v_rest), float(lif.v_reset), float(lif.v_thresh_base), float(lif.leak(dt)),
        int(lif.refractory_period), float(lif.theta_plus), float(lif.theta_decay(dt)),
        float(lif.inhibition_strength),
        float(stdp.A_plus), float(stdp.A_minus), float(stdp.pre_decay(dt)), float(stdp.post_decay(dt)),
        float(stdp.w_min), float(stdp.w_max),
        float(weight_scale), bool(learn), bool(adapt), out,
    )
    return Presentation(counts, out if record else None)


present = present_numba if USE_NUMBA else present_numpy
BACKEND = "numba" if USE_NUMBA else "numpy"
