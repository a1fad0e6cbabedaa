"""Pair-based STDP, its firing-factor-gated variant, and the firing-factor lifecycle.

Weight changes are

    LTP (dt > 0):  A_plus  * f * exp(-dt / tau_pre)
    LTD (dt < 0):  A_minus * f * exp(+dt / tau_post)

with ``dt = t_post - t_pre``. Coincident spikes (dt == 0) count as LTP at full
amplitude. Standard STDP is the same rule with ``f`` fixed to 1.

The firing factor of a neuron decays with its selection history,

    f = 1 - (1/alpha) * (1 - exp(-alpha * E / tau_ff)),

where ``E`` is the accumulated selection exposure: +1 per BMU event and
+asr_sbmu/asr_bmu per SBMU event (scaled by alpha_bmu/alpha_sbmu when the
rate constants differ). For pure-BMU histories E equals the selection count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STANDARD = "standard"
ADAPTIVE = "adaptive"


@dataclass
class PlasticityConfig:
    A_plus: float = 0.01
    A_minus: float = -0.003
    tau_pre: float = 20.0  # ms
    tau_post: float = 20.0  # ms
    w_min: float = 0.0
    w_max: float = 1.0
    alpha_base: float = 1.0
    tau_ff: float = 10.0
    ff_side: str = "excitatory"
    normalize_mean: float | None = 0.1  # target mean incoming weight per neuron

    def __post_init__(self):
        if self.A_plus <= 0:
            raise ValueError("A_plus must be > 0")
        if self.A_minus >= 0:
            raise ValueError("A_minus must be < 0")
        if self.tau_pre <= 0 or self.tau_post <= 0:
            raise ValueError("tau_pre and tau_post must be > 0")
        if not self.w_min < self.w_max:
            raise ValueError("require w_min < w_max")
        # alpha < 1 lets f go negative, which would flip the sign of learning
        if self.alpha_base < 1.0:
            raise ValueError("alpha_base must be >= 1")
        if self.tau_ff <= 0:
            raise ValueError("tau_ff must be > 0")
        if self.ff_side not in ("excitatory", "presynaptic"):
            raise ValueError("ff_side must be 'excitatory' or 'presynaptic'")
        if self.normalize_mean is not None and not self.w_min < self.normalize_mean < self.w_max:
            raise ValueError("normalize_mean must lie strictly between w_min and w_max")

    def pre_decay(self, dt: float = 1.0) -> float:
        return math.exp(-dt / self.tau_pre)

    def post_decay(self, dt: float = 1.0) -> float:
        return math.exp(-dt / self.tau_post)


def firing_factor(n, alpha, tau_ff):
    """Closed-form firing factor; vectorizes over array arguments."""
    alpha = np.asarray(alpha, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    if np.any(alpha <= 0):
        raise ValueError("alpha must be positive")
    if tau_ff <= 0:
        raise ValueError("tau_ff must be positive")
    if np.any(n < 0):
        raise ValueError("selection count must be non-negative")
    f = 1.0 - (1.0 / alpha) * (1.0 - np.exp(-(alpha * n) / tau_ff))
    return float(f) if f.ndim == 0 else f


@dataclass
class FiringFactorState:
    alpha: np.ndarray
    tau_ff: float = 10.0
    n: np.ndarray = None
    exposure: np.ndarray = None

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.n is None:
            self.n = np.zeros(self.alpha.size, dtype=np.int64)
        if self.exposure is None:
            self.exposure = np.zeros(self.alpha.size)

    @classmethod
    def fresh(cls, size: int, alpha: float = 1.0, tau_ff: float = 10.0) -> "FiringFactorState":
        return cls(np.full(size, float(alpha)), tau_ff)

    @property
    def f(self) -> np.ndarray:
        return np.atleast_1d(firing_factor(self.exposure, self.alpha, self.tau_ff))

    @property
    def size(self) -> int:
        return self.alpha.size

    def copy(self) -> "FiringFactorState":
        return FiringFactorState(self.alpha.copy(), self.tau_ff, self.n.copy(), self.exposure.copy())

    def append(self, alpha: float, count: int = 1) -> None:
        self.alpha = np.concatenate([self.alpha, np.full(count, float(alpha))])
        self.n = np.concatenate([self.n, np.zeros(count, dtype=np.int64)])
        self.exposure = np.concatenate([self.exposure, np.zeros(count)])

    def keep(self, mask: np.ndarray) -> None:
        self.alpha = self.alpha[mask]
        self.n = self.n[mask]
        self.exposure = self.exposure[mask]


def record_selection(state: FiringFactorState, bmu: int, sbmu: int, asr_bmu: float, asr_sbmu: float) -> FiringFactorState:
    """Count one BMU/SBMU event in place and return ``state``."""
    if asr_bmu <= 0:
        raise ValueError("asr_bmu must be positive to record a selection")
    if bmu == sbmu:
        raise ValueError("bmu and sbmu must differ")
    if not 0 <= asr_sbmu <= asr_bmu:
        raise ValueError("require 0 <= asr_sbmu <= asr_bmu")
    state.n[bmu] += 1
    state.n[sbmu] += 1
    state.exposure[bmu] += 1.0
    alpha_eff = state.alpha[bmu] * (asr_sbmu / asr_bmu)
    state.exposure[sbmu] += alpha_eff / state.alpha[sbmu]
    return state


def ad_stdp_delta(delta_t: float, f_pre: float, cfg: PlasticityConfig) -> float:
    if delta_t >= 0:
        return cfg.A_plus * f_pre * math.exp(-delta_t / cfg.tau_pre)
    return cfg.A_minus * f_pre * math.exp(delta_t / cfg.tau_post)


def standard_stdp_delta(delta_t: float, cfg: PlasticityConfig) -> float:
    return ad_stdp_delta(delta_t, 1.0, cfg)


@dataclass
class TraceState:
    """Nearest-spike traces: set to 1 on a spike, exponential decay otherwise."""

    pre: np.ndarray
    post: np.ndarray
    last_pre: np.ndarray = field(default=None)
    last_post: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.last_pre is None:
            self.last_pre = np.full(self.pre.size, -1, dtype=np.int64)
        if self.last_post is None:
            self.last_post = np.full(self.post.size, -1, dtype=np.int64)

    @classmethod
    def zeros(cls, n_pre: int, n_post: int) -> "TraceState":
        return cls(np.zeros(n_pre), np.zeros(n_post))

    def clear(self) -> None:
        self.pre[:] = 0.0
        self.post[:] = 0.0
        self.last_pre[:] = -1
        self.last_post[:] = -1

    def resize_post(self, mask: np.ndarray | None = None, grow: int = 0) -> None:
        if mask is not None:
            self.post = self.post[mask]
            self.last_post = self.last_post[mask]
        if grow:
            self.post = np.concatenate([self.post, np.zeros(grow)])
            self.last_post = np.concatenate([self.last_post, np.full(grow, -1, dtype=np.int64)])


def gating_vectors(cfg: PlasticityConfig, f: np.ndarray | None, n_pre: int, n_post: int, mode: str):
    """Per-channel and per-neuron multipliers applied to every weight change."""
    f_pre = np.ones(n_pre)
    f_post = np.ones(n_post)
    if mode == ADAPTIVE and f is not None:
        if cfg.ff_side == "excitatory":
            f_post = np.asarray(f, dtype=np.float64).copy()
        else:
            # input channels are never selected, so their factor stays at 1
            f_pre = np.ones(n_pre)
    elif mode not in (STANDARD, ADAPTIVE):
        raise ValueError(f"unknown plasticity mode {mode!r}")
    return f_pre, f_post


def apply_trace_updates(
    weights: np.ndarray,
    pre_spikes: np.ndarray,
    post_spikes: np.ndarray,
    traces: TraceState,
    ff: FiringFactorState | np.ndarray | None,
    cfg: PlasticityConfig,
    mode: str = ADAPTIVE,
    dt: float = 1.0,
    t: int = 0,
    gates: tuple[np.ndarray, np.ndarray] | None = None,
):
    """One online STDP step on ``weights`` (shape n_pre x n_post), in place.

    Order within the step: decay both traces, set the pre trace of spiking
    channels, depress rows of spiking channels by the post trace (which does not
    yet include this step's post spikes), potentiate columns of spiking neurons
    by the pre trace, then set the post trace of spiking neurons.
    """
    pre_spikes = np.asarray(pre_spikes, dtype=bool)
    post_spikes = np.asarray(post_spikes, dtype=bool)
    n_pre, n_post = weights.shape
    if pre_spikes.size != n_pre or post_spikes.size != n_post:
        raise ValueError("spike vector sizes do not match the weight matrix")
    if traces.pre.size != n_pre or traces.post.size != n_post:
        raise ValueError("trace sizes do not match the weight matrix")
    if gates is None:
        f = ff.f if isinstance(ff, FiringFactorState) else ff
        gates = gating_vectors(cfg, f, n_pre, n_post, mode)
    f_pre, f_post = gates

    traces.pre *= cfg.pre_decay(dt)
    traces.post *= cfg.post_decay(dt)
    traces.pre[pre_spikes] = 1.0
    traces.last_pre[pre_spikes] = t

    rows = np.flatnonzero(pre_spikes)
    if rows.size:
        g = (cfg.A_minus * f_post) * traces.post
        block = weights[rows] + g[None, :] * f_pre[rows, None]
        weights[rows] = np.minimum(np.maximum(block, cfg.w_min), cfg.w_max)
    cols = np.flatnonzero(post_spikes)
    if cols.size:
        h = (cfg.A_plus * f_pre) * traces.pre
        block = weights[:, cols] + h[:, None] * f_post[None, cols]
        weights[:, cols] = np.minimum(np.maximum(block, cfg.w_min), cfg.w_max)

    traces.post[post_spikes] = 1.0
    traces.last_post[post_spikes] = t
    return weights, traces


def normalize_weights(weights: np.ndarray, total: float) -> np.ndarray:
    """Rescale each neuron's incoming weights (columns) to sum to ``total``, in place."""
    sums = weights.sum(axis=0)
    scale = np.where(sums > 0, total / np.where(sums > 0, sums, 1.0), 1.0)
    weights *= scale[None, :]
    return weights
