"""Benchmark the compiled auction kernel against the pure-Python twin.

Runs identical price-walk problems through every available backend,
checks that the outputs are bit-identical, and reports wall-clock
timings.  Usage::

    python benchmarks/bench_auction.py [--seed N] [--repeats N]
"""

import argparse
import time

import numpy as np

from cogmarket._backend import available_backends, get_price_walk
from cogmarket.channel import ScenarioConfig, build_utility_tables, generate_realization
from cogmarket.market import single_channel_values

CASES = (
    # (K, L, quota, alpha, trials)
    (10, 10, 1, 0.001, 20),
    (10, 20, 2, 0.001, 20),
    (20, 30, 2, 0.0005, 10),
)


def build_problems(n_sus, n_channels, quota, alpha, trials, seed):
    config = ScenarioConfig(
        K=n_sus, L=n_channels, quotas=quota, snr_db=0.0, alpha=alpha,
        seed=seed, trials=trials,
    )
    problems = []
    for trial in range(trials):
        tables = build_utility_tables(generate_realization(config, trial), config)
        values = np.ascontiguousarray(single_channel_values(tables, config.lambda_))
        quotas = np.asarray(config.quotas, dtype=np.int64)
        problems.append((values, quotas, config.alpha, config.initial_price))
    return problems


def run_backend(name, problems):
    walk = get_price_walk(name)
    started = time.perf_counter()
    outputs = [walk(*problem) for problem in problems]
    elapsed = time.perf_counter() - started
    return elapsed, outputs


def check_equal(reference, candidate):
    for ref, out in zip(reference, candidate):
        assert np.array_equal(ref[0], out[0]), "price vectors differ"
        assert np.array_equal(ref[1], out[1]), "demand matrices differ"
        assert ref[2:5] == out[2:5], "counters differ"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = [name for name in ("python", "cython") if name in available_backends()]
    print(f"backends: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled kernel unavailable; timing the pure backend only")

    header = f"{'case':<24}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for n_sus, n_channels, quota, alpha, trials in CASES:
        problems = build_problems(n_sus, n_channels, quota, alpha, trials, args.seed)
        label = f"K={n_sus} L={n_channels} q={quota} a={alpha}"
        times = {}
        reference = None
        for name in backends:
            best = float("inf")
            for _ in range(args.repeats):
                elapsed, outputs = run_backend(name, problems)
                best = min(best, elapsed)
            times[name] = best
            if reference is None:
                reference = outputs
            else:
                check_equal(reference, outputs)
        row = f"{label:<24}" + "".join(f"{times[name]*1e3:>10.1f}ms" for name in backends)
        if len(backends) > 1:
            row += f"{times[backends[0]] / times[backends[-1]]:>9.1f}x"
        print(row)
    print("outputs bit-identical across backends" if len(backends) > 1 else "done")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
