"""Command-line entry point: ``layoutsynth <command> ...``.

Exit codes: 0 success, 2 bad input, 3 some synthesized layout is infeasible.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib.resources import files
from pathlib import Path

from .corpus import CorruptRecordError, ObjectInstance, Scene, read_scenes, write_scenes
from .csr import DEFAULT_EPSILON, DEFAULT_RATIO, write_ssg_csv
from .geometry import Polygon
from .priors import DpcParams, NoPriorError, PriorsFormatError, PriorStore, learn_priors
from .render import RenderOptions, render_scene, render_template
from .synthesis import ObjectSpec, SolverParams, synthesize
from .synthetic import SpecError, generate_synthetic_corpus

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3

log = logging.getLogger("layoutsynth")


class InputError(Exception):
    pass


def presets() -> list[str]:
    return sorted(p.name[:-5] for p in files("layoutsynth").joinpath("specs").iterdir() if p.name.endswith(".json"))


def load_spec(name: str) -> dict:
    """A spec file path, or the name of a bundled preset."""
    path = Path(name)
    if path.exists():
        text = path.read_text()
    elif name in presets():
        text = files("layoutsynth").joinpath("specs", f"{name}.json").read_text()
    else:
        raise InputError(f"no spec file or preset named {name!r} (presets: {', '.join(presets())})")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{name}: not JSON ({exc})") from None


def _sidecar(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}.{tag}.json")


def _read_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not JSON ({exc})") from None


def cmd_gen_corpus(args) -> int:
    corpus = generate_synthetic_corpus(load_spec(args.spec), args.n, args.seed)
    out = Path(args.out)
    n = write_scenes(out, corpus.scenes)
    _sidecar(out, "truth").write_text(json.dumps(corpus.truth, sort_keys=True) + "\n")
    print(f"wrote {n} scenes to {out}")
    return EXIT_OK


def cmd_learn(args) -> int:
    try:
        scenes, skipped = read_scenes(args.corpus, skip_corrupt=True)
    except FileNotFoundError:
        raise InputError(f"{args.corpus}: no such file") from None
    if not scenes:
        raise InputError(f"{args.corpus}: corpus has no usable scenes")
    dpc = DpcParams(eta=args.eta)
    store, report = learn_priors(scenes, ratio=args.ratio, epsilon=args.epsilon, seed=args.seed, dpc=dpc)
    report.skipped_scenes += skipped
    store.save(args.out)
    print(report.summary())
    print(f"wrote priors to {args.out}")
    return EXIT_OK


def load_room(path) -> tuple[Polygon, tuple[ObjectInstance, ...]]:
    doc = _read_json(path)
    if isinstance(doc, list):
        doc = {"room": doc}
    try:
        room = Polygon.from_points(doc["room"])
        fixtures = tuple(ObjectInstance.from_dict(f) for f in doc.get("fixtures", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad room document ({exc})") from None
    return room, fixtures


def load_objects(path) -> list[ObjectSpec]:
    doc = _read_json(path)
    rows = doc.get("objects") if isinstance(doc, dict) else doc
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{path}: expected a non-empty object list")
    out = []
    for k, r in enumerate(rows):
        try:
            he = (float(r["hx"]), float(r["hz"])) if "hx" in r else tuple(map(float, r["half_extents"]))
            if min(he) <= 0:
                raise ValueError("half extents must be positive")
            out.append(ObjectSpec(str(r["cat"]), he))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: objects[{k}] is invalid ({exc})") from None
    return out


def cmd_synth(args) -> int:
    store = PriorStore.load(args.priors)
    room, fixtures = load_room(args.room)
    objects = load_objects(args.objects)
    params = SolverParams(seed=args.seed, max_iterations=args.max_iters, epsilon=store.params.get("epsilon", DEFAULT_EPSILON))
    results = synthesize(room, objects, store, args.variants, args.seed, fixtures, params)
    out = Path(args.out)
    write_scenes(out, [r.scene for r in results])
    meta = {"seed": args.seed, "variants": [r.meta() for r in results]}
    _sidecar(out, "meta").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    bad = [r.variant for r in results if not r.feasible]
    for r in results:
        state = "feasible" if r.feasible else "INFEASIBLE"
        print(f"variant {r.variant}: loss={r.loss:.4f} iterations={r.iterations} {state}")
    print(f"wrote {len(results)} scenes to {out}")
    if bad:
        print(f"infeasible variants: {bad}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _load_render_input(path, args):
    """Returns ('scene', Scene) or ('template', (Template, title))."""
    text = Path(path).read_text() if Path(path).exists() else None
    if text is None:
        raise InputError(f"{path}: no such file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "templates" in doc and "version" in doc:
        store = PriorStore.from_dict(doc)
        if not store.templates:
            raise InputError(f"{path}: priors hold no templates")
        if args.pair:
            parts = tuple(args.pair.split("|"))
            if parts not in store.templates:
                raise InputError(f"{path}: no template for pair {args.pair!r}")
        else:
            parts = next(iter(store.templates))
        return "template", (store.templates[parts], "|".join(parts))
    if isinstance(doc, dict) and "room" in doc:
        return "scene", Scene.from_dict(doc)
    if doc is None and text.strip():
        scenes, _ = read_scenes(path)
        if not 0 <= args.index < len(scenes):
            raise InputError(f"{path}: scene index {args.index} out of range (0..{len(scenes) - 1})")
        return "scene", scenes[args.index]
    raise InputError(f"{path}: not a scene, corpus or priors file")


def cmd_render(args) -> int:
    opts = RenderOptions(scale=args.scale, draw_labels=not args.no_labels, hsv_orientation=not args.no_hsv)
    kind, payload = _load_render_input(args.input, args)
    if kind == "scene":
        svg = render_scene(payload, opts)
    else:
        template, title = payload
        svg = render_template(template, opts, title)
    Path(args.out).write_text(svg)
    print(f"wrote {kind} drawing to {args.out}")
    return EXIT_OK


def cmd_ssg_report(args) -> int:
    store = PriorStore.load(args.priors)
    n = write_ssg_csv(store.ssg, args.out, store.params.get("epsilon", DEFAULT_EPSILON))
    print(f"wrote {n} pairs to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="layoutsynth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-corpus", help="generate a synthetic corpus from a pattern spec")
    g.add_argument("spec", help="spec JSON file or preset name")
    g.add_argument("out", help="output JSON-lines corpus")
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen_corpus)

    lr = sub.add_parser("learn", help="learn priors from a corpus")
    lr.add_argument("corpus")
    lr.add_argument("out")
    lr.add_argument("--ratio", type=float, default=DEFAULT_RATIO)
    lr.add_argument("--eta", type=float, default=DpcParams().eta)
    lr.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    lr.add_argument("--seed", type=int, default=0)
    lr.set_defaults(func=cmd_learn)

    s = sub.add_parser("synth", help="synthesize layouts for a room and object list")
    s.add_argument("priors")
    s.add_argument("room")
    s.add_argument("objects")
    s.add_argument("--variants", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=SolverParams().max_iterations)
    s.add_argument("--out", default="layouts.jsonl")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("render", help="draw a scene or a template as SVG")
    r.add_argument("input", help="scene JSON, JSON-lines scenes, or priors file")
    r.add_argument("out")
    r.add_argument("--scale", type=float, default=RenderOptions().scale)
    r.add_argument("--no-labels", action="store_true")
    r.add_argument("--no-hsv", action="store_true")
    r.add_argument("--index", type=int, default=0, help="scene index in a JSON-lines file")
    r.add_argument("--pair", help="template key 'anchor|member' in a priors file")
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("ssg-report", help="spatial strength table as CSV")
    c.add_argument("priors")
    c.add_argument("out")
    c.set_defaults(func=cmd_ssg_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
    except (InputError, CorruptRecordError, PriorsFormatError, NoPriorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
