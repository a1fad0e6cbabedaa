"""Time one sample presentation on the numpy and numba backends.

    python3 benchmarks/bench_kernels.py --neurons 10 100 200 --repeats 20
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dsnn._accel import NUMBA_OK
from dsnn.encoding import encode_poisson
from dsnn.kernels import present_numba, present_numpy
from dsnn.lif import LayerState, LifParams
from dsnn.plasticity import PlasticityConfig, TraceState


def _setup(n_in, n_post, seed):
    rng = np.random.default_rng(seed)
    lif, stdp = LifParams(), PlasticityConfig()
    raster = encode_poisson(rng.random(n_in), rng=rng).raster
    w = 0.3 * rng.random((n_in, n_post))
    return raster, w, lif, stdp


def _run(fn, raster, w, lif, stdp, learn):
    n_in, n_post = w.shape
    state = LayerState.at_rest(n_post, lif)
    traces = TraceState.zeros(n_in, n_post)
    w = w.copy()
    t0 = time.perf_counter()
    res = fn(raster, w, state, traces, lif, stdp, np.ones(n_in), np.ones(n_post), 5.0, learn, learn)
    return time.perf_counter() - t0, res.counts, w


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--inputs", type=int, default=142)
    ap.add_argument("--neurons", type=int, nargs="+", default=[10, 100, 200])
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not NUMBA_OK:
        print("numba unavailable or disabled; only the numpy path would run")
        return 1
    # compile once outside the timed region
    _run(present_numba, *_setup(args.inputs, 2, args.seed), True)
    print(f"{'neurons':>8} {'learn':>6} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'identical':>10}")
    for n in args.neurons:
        raster, w, lif, stdp = _setup(args.inputs, n, args.seed)
        for learn in (False, True):
            tn, cn, wn = zip(*(_run(present_numpy, raster, w, lif, stdp, learn) for _ in range(args.repeats)))
            tb, cb, wb = zip(*(_run(present_numba, raster, w, lif, stdp, learn) for _ in range(args.repeats)))
            same = np.array_equal(cn[0], cb[0]) and np.array_equal(wn[0], wb[0])
            a, b = 1e3 * np.median(tn), 1e3 * np.median(tb)
            print(f"{n:>8} {str(learn):>6} {a:>10.2f} {b:>10.3f} {a / b:>8.1f} {str(same):>10}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
