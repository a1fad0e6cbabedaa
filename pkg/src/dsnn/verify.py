"""Desk-scale self-checks: formula oracles, trace/pairwise agreement, structural
plasticity properties and the synthetic two-task comparison.

Every check returns a plain dict so the whole report serializes to JSON. Nothing
time-dependent goes into the report, which keeps reruns byte-identical.
"""
from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from .config import ExperimentConfig
from .experiment import run_lifelong, synthetic_data
from .layer import ExcitatoryLayer
from .lif import LifParams
from .plasticity import (
    STANDARD,
    PlasticityConfig,
    TraceState,
    ad_stdp_delta,
    apply_trace_updates,
    firing_factor,
    standard_stdp_delta,
)
from .topology import GrowthConfig, prune, should_grow


def check_formulas(cfg: PlasticityConfig | None = None) -> dict:
    cfg = cfg or PlasticityConfig()
    worst = 0.0
    points = 0
    for dt, f in itertools.product(np.linspace(-100, 100, 41), np.linspace(0.0, 1.0, 11)):
        if dt >= 0:
            want = cfg.A_plus * f * math.exp(-dt / cfg.tau_pre)
        else:
            want = cfg.A_minus * f * math.exp(dt / cfg.tau_post)
        worst = max(worst, abs(ad_stdp_delta(dt, f, cfg) - want))
        if f == 1.0:
            worst = max(worst, abs(standard_stdp_delta(dt, cfg) - want))
        points += 1
    for n, alpha, tau in itertools.product(np.arange(0, 60, 3.0), (1.0, 1.05, 2.0, 5.0), (1.0, 10.0, 100.0)):
        want = 1.0 - (1.0 - math.exp(-alpha * n / tau)) / alpha
        worst = max(worst, abs(firing_factor(n, alpha, tau) - want))
        points += 1
    # large exposure: f settles at 1 - 1/alpha
    worst = max(worst, abs(firing_factor(1e6, 2.0, 10.0) - 0.5))
    return {"points": points + 1, "max_abs_error": worst, "passed": bool(worst <= 1e-9)}


def _pair_change(cfg: PlasticityConfig, t_pre: int, t_post: int) -> float:
    w = np.full((1, 1), 0.5 * (cfg.w_min + cfg.w_max))
    w0 = float(w[0, 0])
    traces = TraceState.zeros(1, 1)
    for t in range(max(t_pre, t_post) + 1):
        apply_trace_updates(w, np.array([t == t_pre]), np.array([t == t_post]), traces, None, cfg, STANDARD, t=t)
    return float(w[0, 0]) - w0


def check_trace_equivalence(cfg: PlasticityConfig | None = None, max_offset: int = 100) -> dict:
    cfg = cfg or PlasticityConfig()
    worst = 0.0
    for k in range(1, max_offset + 1):
        worst = max(worst, abs(_pair_change(cfg, 0, k) - standard_stdp_delta(k, cfg)))
        worst = max(worst, abs(_pair_change(cfg, k, 0) - standard_stdp_delta(-k, cfg)))
    return {"offsets": max_offset, "max_abs_error": worst, "passed": bool(worst <= 1e-12)}


def _random_layer(rng: np.random.Generator, n: int) -> ExcitatoryLayer:
    layer = ExcitatoryLayer.create(4, n, LifParams(), PlasticityConfig(), rng)
    layer.age = rng.integers(0, 12, n)
    layer.ff.exposure = rng.choice([0.0, 0.5, 1.0, 5.0, 30.0], n)
    layer.state.theta = rng.random(n)
    return layer


def check_structural(cases: int = 2000, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(cases):
        cfg = GrowthConfig(a_th=float(rng.uniform(0.01, 0.5)), f_th=float(rng.uniform(0.05, 0.5)),
                           p_th=float(rng.uniform(0.55, 0.99)), age_max=int(rng.integers(1, 10)),
                           max_neurons=int(rng.integers(2, 12)), init_neurons=2)
        asr, f, live = float(rng.random()), float(rng.random()), int(rng.integers(0, 14))
        if should_grow(asr, f, cfg, live) != (asr < cfg.a_th and f < cfg.f_th and live < cfg.max_neurons):
            failures += 1

        layer = _random_layer(rng, int(rng.integers(2, 9)))
        before = layer.copy()
        bad = (layer.age > cfg.age_max) & (layer.f > cfg.p_th)
        removed = prune(layer, cfg)
        expected = set(np.flatnonzero(bad).tolist()) if before.size - bad.sum() >= 2 else None
        kept = np.setdiff1d(np.arange(before.size), removed)
        ok = layer.size >= 2 and set(removed) <= set(np.flatnonzero(bad).tolist())
        ok &= expected is None or set(removed) == expected
        ok &= np.array_equal(layer.weights, before.weights[:, kept])
        ok &= np.array_equal(layer.ids, before.ids[kept]) and np.array_equal(layer.state.theta, before.state.theta[kept])
        failures += int(not ok)
    return {"cases": 2 * cases, "failures": failures, "passed": failures == 0}


def synthetic_protocol(cfg: ExperimentConfig) -> dict:
    """Dynamic model vs. static twin on every configured synthetic seed."""
    cap = cfg.growth.max_neurons
    runs = []
    for seed in cfg.synth.seeds:
        # the master seed shifts the whole seed set
        run_seed = int(cfg.seed) + int(seed)
        run_cfg = dataclasses.replace(cfg, seed=run_seed)
        data, oracle = synthetic_data(run_cfg, run_seed)
        res = run_lifelong(run_cfg, data)
        dyn, sta = res["dynamic"], res["static"]
        last = len(dyn["accuracy_matrix"]) - 1
        counts = dyn["neurons_after_task"]
        runs.append({
            "seed": run_seed,
            "oracle_accuracy": oracle,
            "task1_recall": {"dynamic": dyn["accuracy_matrix"][0][last], "static": sta["accuracy_matrix"][0][last]},
            "mean_forgetting": {"dynamic": float(np.mean(dyn["forgetting"])), "static": float(np.mean(sta["forgetting"]))},
            "neurons_after_task": {"dynamic": counts, "static": sta["neurons_after_task"]},
            "grew_on_task2": bool(len(counts) > 1 and counts[1] > counts[0]),
            "within_cap": bool(max(r[2] for r in dyn["trajectory"]) <= cap) if dyn["trajectory"] else True,
            "sparsity": {"dynamic": dyn["sparsity"], "static": sta["sparsity"]},
            "a1": dyn["a1"],
            "a2": {"dynamic": dyn["a2"], "static": sta["a2"]},
        })
    dyn_t1 = [r["task1_recall"]["dynamic"] for r in runs]
    wins = sum(r["task1_recall"]["dynamic"] >= r["task1_recall"]["static"] for r in runs)
    need = max(1, math.ceil(0.8 * len(runs)))
    checks = {
        "separable": all(r["oracle_accuracy"] >= 0.99 for r in runs),
        "growth_on_novelty": all(r["grew_on_task2"] and r["within_cap"] for r in runs),
        "retention": bool(wins >= need and float(np.mean(dyn_t1)) >= 0.6),
        "forgetting": bool(np.mean([r["mean_forgetting"]["dynamic"] for r in runs])
                           <= np.mean([r["mean_forgetting"]["static"] for r in runs])),
        "sparsity": all(max(r["sparsity"]["dynamic"]["phase1"], r["sparsity"]["dynamic"]["phase2"]) < 0.01 for r in runs),
    }
    return {
        "runs": runs,
        "dynamic_not_worse": f"{wins}/{len(runs)}",
        "mean_task1_recall": {"dynamic": float(np.mean(dyn_t1)),
                              "static": float(np.mean([r["task1_recall"]["static"] for r in runs]))},
        "checks": checks,
        "passed": all(checks.values()),
    }


def synth_verify(cfg: ExperimentConfig) -> dict:
    properties = {
        "formulas": check_formulas(cfg.plasticity),
        "trace_equivalence": check_trace_equivalence(cfg.plasticity),
        "structural": check_structural(seed=cfg.subseed("structural")),
    }
    protocol = synthetic_protocol(cfg)
    return {
        "seed": cfg.seed,
        "properties": properties,
        "protocol": protocol,
        "passed": bool(all(p["passed"] for p in properties.values()) and protocol["passed"]),
    }
