"""Time the cumulative-table sampler against ``Generator.choice`` at d = 2**20.

Run with ``python3 benchmarks/bench_sampler.py [--qubits 20] [--draws 1000000]``.
"""
import argparse
import time

import numpy as np

from evaqs.statevector import DiscreteSampler


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--qubits", type=int, default=20)
    parser.add_argument("--draws", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    d = 1 << args.qubits
    rng = np.random.default_rng(0)
    p = rng.exponential(size=d)  # Porter-Thomas shaped weights
    p /= p.sum()

    build = best_of(lambda: DiscreteSampler(p), args.repeats)
    sampler = DiscreteSampler(p)
    ours = best_of(lambda: sampler.sample(rng, args.draws), args.repeats)
    choice = best_of(lambda: rng.choice(d, size=args.draws, p=p), args.repeats)

    print(f"d = 2^{args.qubits}, {args.draws} draws per batch, best of {args.repeats}")
    print(f"table build      {build * 1e3:8.2f} ms")
    print(f"DiscreteSampler  {ours / args.draws * 1e9:8.1f} ns/draw")
    print(f"Generator.choice {choice / args.draws * 1e9:8.1f} ns/draw (rebuilds its table per call)")


if __name__ == "__main__":
    main()
