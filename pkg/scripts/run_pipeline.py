#!/usr/bin/env python3
"""Whole pipeline through the CLI: corpus, priors, layouts, drawings and the strength table.

    python3 scripts/run_pipeline.py [bedroom|living_room] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

from layoutsynth.cli import main

HERE = Path(__file__).resolve().parent
OBJECTS = {"bedroom": "bedroom_objects", "living_room": "living_room_objects"}


def run(argv: list[str]) -> int:
    print("$ layoutsynth " + " ".join(argv))
    return main(argv)


def pipeline(preset: str, out: Path, n: int, variants: int, seed: int) -> int:
    out.mkdir(parents=True, exist_ok=True)
    corpus, priors, layouts = out / "corpus.jsonl", out / "priors.json", out / "layouts.jsonl"
    steps = [
        ["gen-corpus", preset, str(corpus), "--n", str(n), "--seed", str(seed)],
        ["learn", str(corpus), str(priors), "--seed", str(seed)],
        ["ssg-report", str(priors), str(out / "ssg.csv")],
        ["render", str(corpus), str(out / "corpus_0.svg")],
    ]
    for argv in steps:
        if run(argv) != 0:
            return 1
    code = run(
        ["synth", str(priors), str(HERE / "inputs" / f"{preset}_room.json"), str(HERE / "inputs" / f"{OBJECTS[preset]}.json"),
         "--variants", str(variants), "--seed", str(seed), "--out", str(layouts)]
    )
    for k in range(variants):
        run(["render", str(layouts), str(out / f"layout_{k}.svg"), "--index", str(k)])
    pair = {"bedroom": "bed|nightstand", "living_room": "dining_table|dining_chair"}[preset]
    run(["render", str(priors), str(out / "template.svg"), "--pair", pair])
    print(f"outputs in {out}")
    return code


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("preset", nargs="?", default="bedroom", choices=sorted(OBJECTS))
    ap.add_argument("--out", default="out")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--variants", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    sys.exit(pipeline(a.preset, Path(a.out) / a.preset, a.n, a.variants, a.seed))
