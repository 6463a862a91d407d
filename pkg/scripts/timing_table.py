#!/usr/bin/env python3
"""Synthesis wall-clock per scene size, priors loaded beforehand."""

import argparse
import time

import numpy as np

from layoutsynth.cli import load_objects, load_room, load_spec
from layoutsynth.priors import learn_priors
from layoutsynth.synthesis import synthesize
from layoutsynth.synthetic import generate_synthetic_corpus

CASES = [
    ("bedroom", "bedroom_objects"),
    ("bedroom", "bedroom9_objects"),
    ("living_room", "living_room_objects"),
]


def main(seeds: int, scenes: int) -> None:
    priors = {}
    print(f"{'objects':>7}  {'room':12}  {'feasible':>8}  {'median s':>8}  {'max s':>6}  {'iters':>5}")
    for preset, objs in CASES:
        if preset not in priors:
            corpus = generate_synthetic_corpus(load_spec(preset), scenes, seed=0)
            priors[preset], _ = learn_priors(corpus.scenes, seed=0)
        room, fixtures = load_room(f"scripts/inputs/{preset}_room.json")
        objects = load_objects(f"scripts/inputs/{objs}.json")
        times, feasible, iters = [], 0, []
        for seed in range(seeds):
            t0 = time.perf_counter()
            r = synthesize(room, objects, priors[preset], 1, seed, fixtures)[0]
            times.append(time.perf_counter() - t0)
            feasible += r.feasible
            iters.append(r.iterations)
        print(
            f"{len(objects):7d}  {preset:12}  {feasible:4d}/{seeds:<3d}  {np.median(times):8.3f}  {max(times):6.3f}  {np.median(iters):5.0f}"
        )


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--scenes", type=int, default=1000, help="corpus size used to learn the priors")
    a = ap.parse_args()
    main(a.seeds, a.scenes)
