"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run twice to see both backends end to end:

    python benchmarks/bench_kernels.py
    BAYESFMM_DISABLE_NUMBA=1 python benchmarks/bench_kernels.py

Within one process both implementations are timed directly (the env
flag only changes which one the package dispatches to), plus a short
sampler run under the active backend.
"""

import time

import numpy as np

from bayesfmm import kernels
from bayesfmm.basis import bspline_knot_vector
from bayesfmm.mcmc import ChainConfig, run_chain
from bayesfmm.model import ModelConfig
from bayesfmm.simulate import SimSpec, generate_from_model


def timeit(fn, *args, repeat=2000):
    fn(*args)  # warmup / jit compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat * 1e6


def main():
    rng = np.random.default_rng(0)
    T, n, bf, br = 50, 30, 6, 6
    times = rng.uniform(0, 1, T)
    kv = bspline_knot_vector(br)
    resid = rng.normal(size=T)
    gdot = rng.uniform(0.5, 1.5, T)
    phit = rng.normal(size=(T, br))
    f_all = rng.normal(size=(n, T))
    phi_all = rng.normal(size=(n, T, bf))
    phit_all = rng.normal(size=(n, T, br))
    gdot_all = rng.uniform(0.5, 1.5, (n, T))
    a = rng.normal(size=bf)
    knots = np.linspace(0, 1, 7)
    vals = np.sort(rng.uniform(0, 1, 7))
    vals[0], vals[-1] = 0.0, 1.0

    cases = [
        ("modified_fourier (T=50, B=6)", (times, bf)),
        ("bspline (T=50, B=6)", (times, kv, br)),
        ("piecewise_slopes (T=50)", (knots, vals, times)),
        ("loglik_resid (T=50, Br=6)", (resid, gdot, 0.1, 0.25, phit)),
        ("loglik_vector (n=30)", (f_all, phi_all, phit_all, gdot_all, a, 0.1, 0.25)),
    ]
    numpy_fns = {
        "modified_fourier (T=50, B=6)": kernels._np_modified_fourier,
        "bspline (T=50, B=6)": kernels._np_bspline,
        "piecewise_slopes (T=50)": kernels._np_piecewise_slopes,
        "loglik_resid (T=50, Br=6)": kernels._np_loglik_resid,
        "loglik_vector (n=30)": kernels._np_loglik_vector,
    }
    numba_fns = {}
    if kernels.USE_NUMBA:
        numba_fns = {
            "modified_fourier (T=50, B=6)": kernels._nb_modified_fourier,
            "bspline (T=50, B=6)": kernels._nb_bspline,
            "piecewise_slopes (T=50)": kernels._np_piecewise_slopes,
            "loglik_resid (T=50, Br=6)": kernels._nb_loglik_resid,
            "loglik_vector (n=30)": kernels._nb_loglik_vector,
        }
        numba_fns["piecewise_slopes (T=50)"] = kernels._nb_piecewise_slopes

    print(f"active backend: {kernels.backend()}")
    print(f"{'kernel':36s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for name, args in cases:
        t_np = timeit(numpy_fns[name], *args)
        if numba_fns:
            t_nb = timeit(numba_fns[name], *args)
            print(f"{name:36s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:36s} {t_np:10.2f} {'-':>10s} {'-':>8s}")

    config = ModelConfig(b_fixed=6, b_random=6)
    data, _ = generate_from_model(
        SimSpec(n_obs=30, n_times=50, generator="pm1", seed=1), config
    )
    run_chain(data, config, None, ChainConfig(n_total=200, n_burn=100, seed=1))
    t0 = time.perf_counter()
    iters = 2000
    run_chain(data, config, None, ChainConfig(n_total=iters, n_burn=1000, seed=1))
    per_iter = (time.perf_counter() - t0) / iters * 1e3
    print(f"\nchain sweep (n=30, T=50, pm1), {kernels.backend()} backend: {per_iter:.3f} ms/iteration")


if __name__ == "__main__":
    main()
