"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--N 16] [--sweeps 200] [--degree 12]

Both backends run in-process (the kernels take a ``backend`` argument), and
a subprocess with DIRACENS_DISABLE_NUMBA=1 confirms the env-flag path picks
the fallback. Outputs agree to roundoff because both backends share the
same RNG stream.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from diracens import _kernels
from diracens._accel import HAS_NUMBA
from diracens.criticality import family
from diracens.montecarlo import action_arrays


def _best(f, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = f()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_metropolis(backend, N, sweeps, repeat):
    p = family("quartic", t2=1, t4=0.05)
    K, a, b = action_arrays(p, N)
    step = np.sqrt(1.0 / N)

    def run():
        return _kernels.metropolis_chain(np.zeros((N, N)), a, b, K, sweeps, sweeps // 4,
                                         step, step / np.sqrt(2), 1, 10 ** 9, 7,
                                         backend=backend)
    return _best(run, repeat)


def bench_pairings(backend, degree, repeat):
    lengths = [4] * (degree // 4) + ([degree % 4] if degree % 4 else [])
    return _best(lambda: _kernels.pairing_face_histogram(lengths, backend=backend), repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--sweeps", type=int, default=200)
    ap.add_argument("--degree", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    rows = {}
    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    if HAS_NUMBA:  # compile outside the timed region
        bench_metropolis("numba", 4, 4, 1)
        bench_pairings("numba", 4, 1)
    for be in backends:
        tm, mc = bench_metropolis(be, args.N, args.sweeps, args.repeat)
        tp, hist = bench_pairings(be, args.degree, args.repeat)
        rows[be] = {"metropolis_s": tm, "pairings_s": tp,
                    "acceptance": float(mc[2]), "hist": [int(h) for h in hist]}
    if len(rows) == 2:
        rows["speedup"] = {k: rows["numpy"][k] / rows["numba"][k]
                           for k in ("metropolis_s", "pairings_s")}
        rows["agree"] = rows["numba"]["hist"] == rows["numpy"]["hist"]

    env = dict(os.environ, DIRACENS_DISABLE_NUMBA="1")
    probe = subprocess.run([sys.executable, "-c",
                            "from diracens._accel import backend; print(backend())"],
                           env=env, capture_output=True, text=True, check=True)
    rows["env_flag_backend"] = probe.stdout.strip()

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"metropolis N={args.N} sweeps={args.sweeps}; pairings degree {args.degree}")
    for be in backends:
        r = rows[be]
        print(f"  {be:6s} metropolis {r['metropolis_s']:.4f} s   pairings {r['pairings_s']:.4f} s")
    if "speedup" in rows:
        s = rows["speedup"]
        print(f"  speedup: metropolis x{s['metropolis_s']:.1f}, pairings x{s['pairings_s']:.1f}; "
              f"histograms agree: {rows['agree']}")
    print(f"  DIRACENS_DISABLE_NUMBA=1 selects: {rows['env_flag_backend']}")


if __name__ == "__main__":
    main()
