"""Compare the numba and pure-numpy kernels on a realistic workload.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20] [--trial]

The kernel section times one presentation of a bundled example sentence through
the default network (``simulate``) and the hidden-layer pairing pass on its
rasters (``pair_stdp``), checks that both backends return identical
arrays, and prints per-call times. ``--trial`` also times a full
ten-presentation reward trial end to end in two subprocesses, one per
backend, since the backend is fixed at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from spikecol import kernels
from spikecol.column import HIDDEN, IN
from spikecol.corpus import load_bundled
from spikecol.plasticity import _tables
from spikecol.train import TrainConfig, build_model

TRIAL_SNIPPET = """
import time, numpy as np
from spikecol.corpus import load_bundled
from spikecol.train import TrainConfig, build_model, train_sample
corpus = load_bundled("table1")
model = build_model(corpus, TrainConfig())
rng = np.random.default_rng(0)
train_sample(model, corpus[0], rng)
t = time.perf_counter()
for s in list(corpus) * 2:
    train_sample(model, s, rng)
print((time.perf_counter() - t) / (2 * len(corpus)))
"""


def kernel_inputs():
    corpus = load_bundled("table1")
    model = build_model(corpus, TrainConfig())
    net = model.net.network
    train = model.encode(corpus[0], None)
    horizon = train.horizon + model.net.config.tail_steps
    ext = net._external_current(train, horizon)
    noise = np.random.default_rng(0).standard_normal(ext.shape) * 10.0
    a = net._neuron_arrays()
    args = (net.effective_matrix(), ext, noise, a["tau"], a["resistance"], a["u_rest"],
            a["u_reset"], a["u_threshold"], a["i_background"], net.dt,
            net.potentials(), net.last_spikes.copy())
    return model, args


def net_dt(model):
    return model.net.network.dt


def bench(fn, args, repeat):
    fn(*args)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--trial", action="store_true", help="also time a full reward trial per backend")
    opts = ap.parse_args(argv)

    model, sim_args = kernel_inputs()
    raster, _, _ = kernels.simulate_numpy(*sim_args)
    net = model.net.network
    pre = np.ascontiguousarray(raster[:, net._slice(IN)])
    post = np.ascontiguousarray(raster[:, net._slice(HIDDEN)])
    p = model.net.config.stdp
    ltp, ltd, decay = _tables(raster.shape[0], p, net_dt(model), 250.0)
    pair_args = (pre, post, ltp, ltd, decay, p.a_plus, p.a_minus)

    rows = []
    for name, np_fn, nb_fn, args in (("simulate", kernels.simulate_numpy, kernels.simulate_numba, sim_args),
                                     ("pair_stdp", kernels.pair_stdp_numpy, kernels.pair_stdp_numba, pair_args)):
        t_np = bench(np_fn, args, opts.repeat)
        if nb_fn is None:
            rows.append((name, t_np, None, None))
            continue
        same = all(np.array_equal(a, b) for a, b in zip(np_fn(*args), nb_fn(*args)))
        rows.append((name, t_np, bench(nb_fn, args, opts.repeat), same))

    print(f"{'kernel':<10} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}  identical")
    for name, t_np, t_nb, same in rows:
        if t_nb is None:
            print(f"{name:<10} {t_np * 1e3:>10.3f} {'n/a':>10} {'n/a':>8}  (numba unavailable)")
        else:
            print(f"{name:<10} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / t_nb:>7.1f}x  {same}")

    if opts.trial:
        out = {}
        for label, flag in (("numba", "0"), ("numpy", "1")):
            env = dict(os.environ, SPIKECOL_DISABLE_NUMBA=flag)
            res = subprocess.run([sys.executable, "-c", TRIAL_SNIPPET], env=env, check=True,
                                 capture_output=True, text=True)
            out[label] = float(res.stdout.strip())
        print(f"reward trial: numpy {out['numpy'] * 1e3:.1f} ms, numba {out['numba'] * 1e3:.1f} ms "
              f"({out['numpy'] / out['numba']:.1f}x)")


if __name__ == "__main__":
    main()
