"""Discrete-time leaky integrate-and-fire excitatory layer.

Lateral inhibition is all-to-all between excitatory neurons and arrives one step
after the spikes that cause it. Homeostasis is an adaptive threshold offset
``theta`` that survives between sample presentations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class LifParams:
    v_rest: float = -65.0
    v_reset: float = -65.0
    v_thresh_base: float = -52.0
    tau_mem: float = 100.0  # ms
    refractory_period: int = 5  # steps
    theta_plus: float = 0.05  # mV
    tau_theta: float = 1e4  # ms
    inhibition_strength: float = 17.0  # mV per spiking peer

    def __post_init__(self):
        if self.tau_mem <= 0 or self.tau_theta <= 0:
            raise ValueError("tau_mem and tau_theta must be positive")
        if not (self.v_reset <= self.v_rest < self.v_thresh_base):
            raise ValueError("require v_reset <= v_rest < v_thresh_base")
        if self.inhibition_strength < 0:
            raise ValueError("inhibition_strength must be non-negative")
        if self.theta_plus < 0:
            raise ValueError("theta_plus must be non-negative")
        if self.refractory_period < 0:
            raise ValueError("refractory_period must be non-negative")

    def leak(self, dt: float = 1.0) -> float:
        return dt / self.tau_mem

    def theta_decay(self, dt: float = 1.0) -> float:
        return math.exp(-dt / self.tau_theta)


@dataclass
class LayerState:
    v: np.ndarray
    theta: np.ndarray
    refrac: np.ndarray

    @classmethod
    def at_rest(cls, n: int, params: LifParams) -> "LayerState":
        return cls(np.full(n, params.v_rest), np.zeros(n), np.zeros(n, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.v.size

    def copy(self) -> "LayerState":
        return LayerState(self.v.copy(), self.theta.copy(), self.refrac.copy())

    def append(self, params: LifParams, count: int = 1) -> None:
        self.v = np.concatenate([self.v, np.full(count, params.v_rest)])
        self.theta = np.concatenate([self.theta, np.zeros(count)])
        self.refrac = np.concatenate([self.refrac, np.zeros(count, dtype=np.int64)])

    def keep(self, mask: np.ndarray) -> None:
        self.v = self.v[mask]
        self.theta = self.theta[mask]
        self.refrac = self.refrac[mask]


def step_layer(
    state: LayerState,
    input_current: np.ndarray,
    params: LifParams,
    dt: float = 1.0,
    adapt: bool = True,
) -> np.ndarray:
    """Advance ``state`` in place by one step and return the boolean spike vector.

    Refractory neurons skip integration entirely. With ``adapt=False`` theta is
    left untouched (inference on a frozen model).
    """
    input_current = np.asarray(input_current, dtype=np.float64)
    if input_current.shape != state.v.shape:
        raise ValueError(f"input length {input_current.size} != neuron count {state.v.size}")
    active = state.refrac == 0
    state.refrac[~active] -= 1
    v_new = state.v + params.leak(dt) * (params.v_rest - state.v) + input_current
    state.v = np.where(active, v_new, state.v)
    spikes = active & (state.v >= params.v_thresh_base + state.theta)
    state.v[spikes] = params.v_reset
    state.refrac[spikes] = params.refractory_period
    if adapt:
        state.theta = state.theta * params.theta_decay(dt)
        state.theta[spikes] += params.theta_plus
    return spikes


def apply_lateral_inhibition(spikes: np.ndarray, params: LifParams) -> np.ndarray:
    """Inhibitory drive for the next step: -strength per spiking peer, none from self."""
    spikes = np.asarray(spikes, dtype=bool)
    peers = spikes.sum() - spikes.astype(np.int64)
    return -params.inhibition_strength * peers.astype(np.float64)


def reset_between_samples(state: LayerState, params: LifParams, traces=None) -> LayerState:
    state.v[:] = params.v_rest
    state.refrac[:] = 0
    if traces is not None:
        traces.clear()
    return state
