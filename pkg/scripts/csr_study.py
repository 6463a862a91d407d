#!/usr/bin/env python3
"""Calibration and power of the angle-based randomness test.

Prints the null rejection rate at the default threshold for several sample
sizes, then the detection rate for a few planted shapes, to show which
patterns the test can and cannot see.
"""

import argparse
import math

import numpy as np

from layoutsynth.csr import DEFAULT_EPSILON, ks_uniform_d_batch, pair_d_value

TWO_PI = 2 * math.pi


def null_rates(trials: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    print(f"null rejection rate at d > {DEFAULT_EPSILON} ({trials} trials)")
    for m in (30, 50, 100, 300, 1000):
        d = ks_uniform_d_batch(rng.uniform(0, TWO_PI, (trials, m)))
        print(f"  m={m:5d}  rate={(d > DEFAULT_EPSILON).mean():.4f}")


def _samples(xz: np.ndarray) -> np.ndarray:
    s = np.zeros((len(xz), 4))
    s[:, 0], s[:, 2] = xz[:, 0], xz[:, 1]
    return s


def shapes(rng: np.random.Generator, n: int):
    side = rng.choice([-1.0, 1.0], n)
    r = np.sqrt(rng.uniform(1, 4, n))
    a = rng.uniform(0, TWO_PI, n)
    yield "uniform disc r=2", np.c_[2 * np.sqrt(rng.uniform(size=n)) * np.cos(a), 2 * np.sqrt(rng.uniform(size=n)) * np.sin(a)]
    yield "annulus 1..2", np.c_[r * np.cos(a), r * np.sin(a)]
    for sigma in (0.02, 0.1):
        yield f"2 Gaussian blobs sigma={sigma}", np.c_[1.2 * side + rng.normal(0, sigma, n), rng.normal(0, sigma, n)]
    yield "2 uniform squares 0.2 m", np.c_[1.2 * side + rng.uniform(-0.1, 0.1, n), rng.uniform(-0.1, 0.1, n)]
    for width in (0.0, 0.01, 0.03):
        yield f"2 segments 0.12 m, width {width}", np.c_[rng.uniform(-0.06, 0.06, n), 1.1 * side + rng.uniform(-width, width, n) if width else 1.1 * side]
    yield "1 segment 0.5 m", np.c_[np.zeros(n), rng.uniform(-0.25, 0.25, n)]


def power(runs: int, n: int) -> None:
    print(f"\ndetection rate at d > {DEFAULT_EPSILON} ({runs} runs, n={n}, 10% subsample)")
    names, hits, dvals = [], None, []
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        res = [pair_d_value(_samples(xz), seed=seed).d_value for _, xz in shapes(rng, n)]
        if hits is None:
            names = [name for name, _ in shapes(np.random.default_rng(0), 3)]
            hits = np.zeros(len(res))
        hits += np.array(res) > DEFAULT_EPSILON
        dvals.append(res)
    med = np.median(np.array(dvals), axis=0)
    for name, h, d in zip(names, hits, med):
        print(f"  {name:34s} rate={h / runs:.2f}  median d={d:.2f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    null_rates(a.trials, a.seed)
    power(a.runs, a.n)
