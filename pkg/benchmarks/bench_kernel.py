"""Compare the compiled and pure-Python Metropolis kernels.

    python3 benchmarks/bench_kernel.py [--n 200 1000] [--sweeps 20] [--repeat 3]

Both backends consume the same random stream, so the final states must
agree up to rounding in the periodic renormalisation; the script checks
that before reporting timings.
"""

import argparse
import time

import numpy as np

from twospike import gibbs, kernel
from twospike.spectrum import build_two_spike_spectrum


def time_backend(s, backend, sweeps, repeat):
    best, eta = float("inf"), None
    for _ in range(repeat):
        chain = gibbs.Chain(s, gibbs.ChainConfig(beta=1.0, sweeps=sweeps, burnin=0, seed=1, backend=backend))
        start = time.perf_counter()
        chain.advance(sweeps)
        best = min(best, time.perf_counter() - start)
        eta = chain.eta.copy()
    return best, eta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[200, 1000])
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernel.available_backends()
    print(f"backends: {', '.join(backends)} (import-time default: {kernel.BACKEND})")
    print(f"{'n':>6} {'backend':>8} {'ns/proposal':>12} {'speedup':>8}")
    for n in args.n:
        s = build_two_spike_spectrum(n, 2.0, 2.0)
        proposals = args.sweeps * (n // 2)
        timings, states = {}, {}
        for b in backends:
            timings[b], states[b] = time_backend(s, b, args.sweeps, args.repeat)
        if len(states) == 2 and not np.allclose(states["cython"], states["python"], rtol=0, atol=1e-12):
            raise SystemExit(f"backends disagree at n={n}")
        for b in backends:
            speedup = timings["python"] / timings[b]
            print(f"{n:>6} {b:>8} {1e9 * timings[b] / proposals:>12.1f} {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
