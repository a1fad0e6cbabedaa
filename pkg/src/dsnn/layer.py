"""Excitatory layer with its input synapses and per-neuron bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .lif import LayerState, LifParams, reset_between_samples
from .plasticity import (
    ADAPTIVE,
    STANDARD,
    FiringFactorState,
    PlasticityConfig,
    TraceState,
    gating_vectors,
    normalize_weights,
)


@dataclass
class ExcitatoryLayer:
    """Weights are (n_in, n_neurons); every per-neuron array is indexed alike."""

    weights: np.ndarray
    state: LayerState
    traces: TraceState
    ff: FiringFactorState
    age: np.ndarray
    ids: np.ndarray
    lif: LifParams
    stdp: PlasticityConfig
    weight_scale: float = 5.0
    dt: float = 1.0
    next_id: int = 0
    mode: str = ADAPTIVE

    @classmethod
    def create(
        cls,
        n_in: int,
        n_neurons: int,
        lif: LifParams,
        stdp: PlasticityConfig,
        rng: np.random.Generator,
        weight_scale: float = 5.0,
        init_scale: float = 0.3,
        dt: float = 1.0,
        mode: str = ADAPTIVE,
    ) -> "ExcitatoryLayer":
        span = stdp.w_max - stdp.w_min
        w = stdp.w_min + init_scale * span * rng.random((n_in, n_neurons))
        return cls(
            weights=np.ascontiguousarray(w),
            state=LayerState.at_rest(n_neurons, lif),
            traces=TraceState.zeros(n_in, n_neurons),
            ff=FiringFactorState.fresh(n_neurons, stdp.alpha_base, stdp.tau_ff),
            age=np.zeros(n_neurons, dtype=np.int64),
            ids=np.arange(n_neurons, dtype=np.int64),
            lif=lif,
            stdp=stdp,
            weight_scale=weight_scale,
            dt=dt,
            next_id=n_neurons,
            mode=mode,
        )

    @property
    def n_in(self) -> int:
        return self.weights.shape[0]

    @property
    def size(self) -> int:
        return self.weights.shape[1]

    @property
    def f(self) -> np.ndarray:
        return self.ff.f

    def present(self, raster: np.ndarray, learn: bool, record: bool = False) -> kernels.Presentation:
        """Simulate one sample from rest. Without learning theta is frozen too."""
        if raster.shape[1] != self.n_in:
            raise ValueError(f"input has {raster.shape[1]} channels, layer expects {self.n_in}")
        if learn:
            reset_between_samples(self.state, self.lif, self.traces)
            state, traces = self.state, self.traces
        else:
            state = LayerState.at_rest(self.size, self.lif)
            state.theta = self.state.theta.copy()
            traces = TraceState.zeros(self.n_in, self.size)
        mode = self.mode if learn else STANDARD
        f_pre, f_post = gating_vectors(self.stdp, self.f if mode == ADAPTIVE else None, self.n_in, self.size, mode)
        result = kernels.present(
            raster, self.weights, state, traces, self.lif, self.stdp, f_pre, f_post,
            self.weight_scale, learn, learn, self.dt, record,
        )
        if learn and self.stdp.normalize_mean is not None:
            normalize_weights(self.weights, self.stdp.normalize_mean * self.n_in)
            np.clip(self.weights, self.stdp.w_min, self.stdp.w_max, out=self.weights)
        return result

    def append_neuron(self, column: np.ndarray) -> int:
        self.weights = np.ascontiguousarray(np.concatenate([self.weights, column[:, None]], axis=1))
        self.state.append(self.lif)
        self.traces.resize_post(grow=1)
        self.ff.append(self.stdp.alpha_base)
        self.age = np.concatenate([self.age, np.zeros(1, dtype=np.int64)])
        self.ids = np.concatenate([self.ids, np.array([self.next_id], dtype=np.int64)])
        self.next_id += 1
        return int(self.ids[-1])

    def keep(self, mask: np.ndarray) -> None:
        mask = np.asarray(mask, dtype=bool)
        self.weights = np.ascontiguousarray(self.weights[:, mask])
        self.state.keep(mask)
        self.traces.resize_post(mask=mask)
        self.ff.keep(mask)
        self.age = self.age[mask]
        self.ids = self.ids[mask]

    def copy(self) -> "ExcitatoryLayer":
        return ExcitatoryLayer(
            weights=self.weights.copy(),
            state=self.state.copy(),
            traces=TraceState(self.traces.pre.copy(), self.traces.post.copy(),
                              self.traces.last_pre.copy(), self.traces.last_post.copy()),
            ff=self.ff.copy(),
            age=self.age.copy(),
            ids=self.ids.copy(),
            lif=self.lif,
            stdp=self.stdp,
            weight_scale=self.weight_scale,
            dt=self.dt,
            next_id=self.next_id,
            mode=self.mode,
        )
