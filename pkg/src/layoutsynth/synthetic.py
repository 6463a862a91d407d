"""Synthetic corpora with planted layout patterns.

The generator stands in for a real scene dataset and doubles as a test
oracle: every object it places is recorded together with the rule that put
it there, so learned statistics can be checked against known truth.

A pattern description is a JSON-compatible dict::

    {
      "room": {"width": [3.6, 4.6], "depth": [3.6, 4.6]},
      "categories": {"bed": {"half_extents": [1.05, 0.8]}, ...},
      "objects": [
        {"cat": "bed", "placement": "wall", "gap": [0.0, 0.05], "theta_wall": 0.0},
        {"cat": "plant", "placement": "free", "prob": 0.5}
      ],
      "relations": [
        {"anchor": "bed", "member": "nightstand", "select": "each",
         "modes": [{"offset": [-0.8, 1.1, 0.0], "spread": [0.0, 0.05], "sigma": 0.0}],
         "noise": 0.1, "noise_radius": 2.5}
      ],
      "fixtures": [{"cat": "door", "half_extents": [0.45, 0.45], "count": 1}]
    }

``objects`` are placed independently, either against a wall or uniformly.
Each ``relation`` spawns members around every placed anchor: one per mode
(``select: each``) or one with a randomly chosen mode (``select: one``).
A mode offset is ``(p_x, p_z, p_theta)`` in the anchor frame, jittered by a
uniform ``spread`` along the anchor's own axes plus isotropic Gaussian
``sigma``.  With probability ``noise`` a member is instead a distractor placed
uniformly in a disc of radius ``noise_radius`` around its anchor.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .corpus import ObjectInstance, Scene, box_inside, compose_pose, inward_normal
from .geometry import Polygon, wrap_angle

MAX_PLACEMENT_TRIES = 50
MAX_GROUP_TRIES = 100


class SpecError(ValueError):
    """Malformed or infeasible pattern description.  ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SyntheticCorpus(NamedTuple):
    scenes: list[Scene]
    truth: dict


@dataclass(frozen=True)
class Mode:
    offset: tuple[float, float, float]
    spread: tuple[float, float] = (0.0, 0.0)
    sigma: float = 0.0
    sigma_theta: float = 0.0

    def sample(self, rng: np.random.Generator) -> tuple[float, float, float, float]:
        px, pz, pt = self.offset
        sx, sz = self.spread
        if sx:
            px += rng.uniform(-sx, sx)
        if sz:
            pz += rng.uniform(-sz, sz)
        if self.sigma:
            dx, dz = rng.normal(0.0, self.sigma, 2)
            px, pz = px + dx, pz + dz
        if self.sigma_theta:
            pt += rng.normal(0.0, self.sigma_theta)
        return (px, 0.0, pz, wrap_angle(pt))


def sample_disc(rng: np.random.Generator, radius: float) -> tuple[float, float, float, float]:
    r = radius * math.sqrt(rng.uniform())
    a = rng.uniform(0.0, 2 * math.pi)
    return (r * math.cos(a), 0.0, r * math.sin(a), rng.uniform(0.0, 2 * math.pi))


def sample_mode_relations(
    modes: list[Mode],
    n: int,
    noise: float = 0.0,
    noise_radius: float = 3.0,
    seed: int = 0,
    weights=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` relation samples straight from a mode mixture.

    Returns ``(samples, labels)`` where ``labels[k]`` is the mode index of
    sample ``k`` or -1 for a noise sample.  This skips rooms entirely and is
    the oracle used by the clustering and CSR tests.
    """
    rng = np.random.default_rng(seed)
    out = np.empty((n, 4))
    labels = np.empty(n, dtype=int)
    for k in range(n):
        if rng.uniform() < noise:
            out[k] = sample_disc(rng, noise_radius)
            labels[k] = -1
        else:
            m = int(rng.choice(len(modes), p=weights))
            out[k] = modes[m].sample(rng)
            labels[k] = m
    return out, labels


# --- spec parsing ---------------------------------------------------------


def _num_range(value, field: str) -> tuple[float, float]:
    if isinstance(value, (int, float)):
        return (float(value), float(value))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = float(value[0]), float(value[1])
        if lo > hi or lo < 0:
            raise SpecError(field, f"bad range {value!r}")
        return lo, hi
    raise SpecError(field, f"expected a number or [lo, hi], got {value!r}")


def _require(d: dict, key: str, field: str):
    if not isinstance(d, dict) or key not in d:
        raise SpecError(f"{field}.{key}", "missing required field")
    return d[key]


def _parse_mode(d: dict, field: str) -> Mode:
    off = _require(d, "offset", field)
    if not isinstance(off, (list, tuple)) or len(off) != 3:
        raise SpecError(f"{field}.offset", "expected [p_x, p_z, p_theta]")
    spread = d.get("spread", [0.0, 0.0])
    if not isinstance(spread, (list, tuple)) or len(spread) != 2 or min(spread) < 0:
        raise SpecError(f"{field}.spread", "expected two non-negative half-widths")
    sigma = float(d.get("sigma", 0.0))
    if sigma < 0:
        raise SpecError(f"{field}.sigma", "must be non-negative")
    return Mode(
        tuple(float(v) for v in off),
        (float(spread[0]), float(spread[1])),
        sigma,
        float(d.get("sigma_theta", 0.0)),
    )


def validate_spec(spec: Any) -> dict:
    """Check a pattern description and return a normalized deep copy.

    Raises :class:`SpecError` naming the first offending field.
    """
    if not isinstance(spec, dict):
        raise SpecError("spec", "top level must be an object")
    spec = copy.deepcopy(spec)
    room = _require(spec, "room", "spec")
    room["width"] = _num_range(_require(room, "width", "room"), "room.width")
    room["depth"] = _num_range(_require(room, "depth", "room"), "room.depth")
    if room["width"][0] <= 0 or room["depth"][0] <= 0:
        raise SpecError("room", "dimensions must be positive")
    diag = math.hypot(room["width"][1], room["depth"][1])

    cats = _require(spec, "categories", "spec")
    if not isinstance(cats, dict) or not cats:
        raise SpecError("categories", "expected a non-empty object")
    for name, c in cats.items():
        he = _require(c, "half_extents", f"categories.{name}")
        if not isinstance(he, (list, tuple)) or len(he) != 2 or min(he) <= 0:
            raise SpecError(f"categories.{name}.half_extents", "expected two positive numbers")
        c["half_extents"] = (float(he[0]), float(he[1]))
        c["y"] = float(c.get("y", 0.0))

    def check_cat(name, field):
        if name not in cats:
            raise SpecError(field, f"unknown category {name!r}")

    objects = spec.setdefault("objects", [])
    for k, o in enumerate(objects):
        f = f"objects[{k}]"
        check_cat(_require(o, "cat", f), f"{f}.cat")
        kind = o.setdefault("placement", "wall")
        if kind not in ("wall", "free"):
            raise SpecError(f"{f}.placement", f"expected 'wall' or 'free', got {kind!r}")
        o["gap"] = _num_range(o.get("gap", 0.0), f"{f}.gap")
        tw = o.get("theta_wall", 0.0)
        o["theta_wall"] = [float(v) for v in (tw if isinstance(tw, list) else [tw])]
        o["prob"] = float(o.get("prob", 1.0))
        if not 0.0 <= o["prob"] <= 1.0:
            raise SpecError(f"{f}.prob", "must lie in [0, 1]")

    relations = spec.setdefault("relations", [])
    for k, r in enumerate(relations):
        f = f"relations[{k}]"
        check_cat(_require(r, "anchor", f), f"{f}.anchor")
        check_cat(_require(r, "member", f), f"{f}.member")
        modes = _require(r, "modes", f)
        if not isinstance(modes, list) or not modes:
            raise SpecError(f"{f}.modes", "expected a non-empty list")
        parsed = [_parse_mode(m, f"{f}.modes[{i}]") for i, m in enumerate(modes)]
        for i, m in enumerate(parsed):
            reach = math.hypot(m.offset[0], m.offset[1]) + math.hypot(*m.spread) + 3 * m.sigma
            if reach >= diag:
                raise SpecError(f"{f}.modes[{i}].offset", "mode lies outside any room of this size")
        r["modes"] = parsed
        r["select"] = r.get("select", "each")
        if r["select"] not in ("each", "one"):
            raise SpecError(f"{f}.select", "expected 'each' or 'one'")
        w = r.get("weights")
        if w is not None:
            if len(w) != len(parsed) or min(w) < 0 or sum(w) <= 0:
                raise SpecError(f"{f}.weights", "one non-negative weight per mode")
            r["weights"] = [float(v) / sum(w) for v in w]
        r["noise"] = float(r.get("noise", 0.0))
        if not 0.0 <= r["noise"] <= 1.0:
            raise SpecError(f"{f}.noise", "must lie in [0, 1]")
        r["noise_radius"] = float(r.get("noise_radius", 2.0))
        r["prob"] = float(r.get("prob", 1.0))

    # relation chains must be acyclic or spawning never terminates
    children: dict[str, set] = {}
    for r in relations:
        children.setdefault(r["anchor"], set()).add(r["member"])

    def visit(c, stack):
        if c in stack:
            raise SpecError("relations", f"cyclic relation chain through {c!r}")
        for m in children.get(c, ()):
            visit(m, stack | {c})

    for c in children:
        visit(c, frozenset())

    fixtures = spec.setdefault("fixtures", [])
    for k, fx in enumerate(fixtures):
        f = f"fixtures[{k}]"
        _require(fx, "cat", f)
        he = _require(fx, "half_extents", f)
        if not isinstance(he, (list, tuple)) or len(he) != 2 or min(he) <= 0:
            raise SpecError(f"{f}.half_extents", "expected two positive numbers")
        fx["count"] = int(fx.get("count", 1))
    return spec


def spec_to_json(spec: dict) -> dict:
    """Normalized spec in plain JSON types (for the ground-truth sidecar)."""
    out = copy.deepcopy(spec)
    for r in out.get("relations", []):
        r["modes"] = [
            {
                "offset": list(m.offset),
                "spread": list(m.spread),
                "sigma": m.sigma,
                "sigma_theta": m.sigma_theta,
            }
            for m in r["modes"]
        ]
    for c in out.get("categories", {}).values():
        c["half_extents"] = list(c["half_extents"])
    for o in out.get("objects", []):
        o["gap"] = list(o["gap"])
    out["room"]["width"] = list(out["room"]["width"])
    out["room"]["depth"] = list(out["room"]["depth"])
    return out


# --- generation -----------------------------------------------------------


class _Placer:
    def __init__(self, spec: dict, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.cats = spec["categories"]

    def make(self, cat: str, pose) -> ObjectInstance:
        hx, hz = self.cats[cat]["half_extents"]
        x, _, z, t = pose
        return ObjectInstance(cat, x, self.cats[cat]["y"], z, wrap_angle(t), hx, hz)

    def wall_pose(self, room: Polygon, gap, theta_walls, hx: float):
        rng = self.rng
        e = int(rng.integers(len(room)))
        a = room.vertices[e]
        b = room.vertices[(e + 1) % len(room)]
        n = inward_normal(room, e)
        p = a + rng.uniform() * (b - a) + n * (hx + rng.uniform(*gap))
        tw = theta_walls[int(rng.integers(len(theta_walls)))]
        return (float(p[0]), 0.0, float(p[1]), math.atan2(n[1], n[0]) + tw)

    def free_pose(self, room: Polygon):
        lo, hi = room.vertices.min(axis=0), room.vertices.max(axis=0)
        p = self.rng.uniform(lo, hi)
        return (float(p[0]), 0.0, float(p[1]), self.rng.uniform(0.0, 2 * math.pi))

    def standalone(self, room: Polygon, rule: dict) -> ObjectInstance:
        cat = rule["cat"]
        hx = self.cats[cat]["half_extents"][0]
        for _ in range(MAX_PLACEMENT_TRIES):
            if rule["placement"] == "wall":
                pose = self.wall_pose(room, rule["gap"], rule["theta_wall"], hx)
            else:
                pose = self.free_pose(room)
            obj = self.make(cat, pose)
            if box_inside(obj, room):
                return obj
        raise SpecError(f"categories.{cat}", "object does not fit in the room")

    def members(self, room: Polygon, anchor: ObjectInstance, depth: int = 0):
        """Relation subtree under ``anchor`` as nested (obj, info, subtree) triples, or None if it cannot fit."""
        out = []
        for k, rel in enumerate(self.spec["relations"]):
            if rel["anchor"] != anchor.category:
                continue
            if rel["select"] == "each":
                chosen = range(len(rel["modes"]))
            else:
                chosen = [int(self.rng.choice(len(rel["modes"]), p=rel.get("weights")))]
            for m in chosen:
                if self.rng.uniform() >= rel["prob"]:
                    continue
                obj = label = None
                for _ in range(MAX_PLACEMENT_TRIES):
                    if self.rng.uniform() < rel["noise"]:
                        offset, label = sample_disc(self.rng, rel["noise_radius"]), -1
                    else:
                        offset, label = rel["modes"][m].sample(self.rng), m
                    cand = self.make(rel["member"], compose_pose(anchor.pose, offset))
                    if box_inside(cand, room):
                        obj = cand
                        break
                if obj is None:
                    return None
                sub = self.members(room, obj, depth + 1)
                if sub is None:
                    return None
                out.append((obj, {"role": "member", "relation": k, "mode": label}, sub))
        return out


def _room(spec: dict, rng: np.random.Generator) -> Polygon:
    w = rng.uniform(*spec["room"]["width"])
    d = rng.uniform(*spec["room"]["depth"])
    return Polygon.from_points([[0.0, 0.0], [w, 0.0], [w, d], [0.0, d]])


def _fixtures(spec: dict, room: Polygon, placer: _Placer) -> list[ObjectInstance]:
    out = []
    for fx in spec["fixtures"]:
        hx, hz = fx["half_extents"]
        for _ in range(fx["count"]):
            x, _, z, t = placer.wall_pose(room, (0.0, 0.0), [0.0], hx)
            out.append(ObjectInstance(fx["cat"], x, 0.0, z, wrap_angle(t), hx, hz))
    return out


def _flatten(tree, anchor_index: int, objects: list, truth: list):
    for obj, info, sub in tree:
        objects.append(obj)
        truth.append(dict(info, anchor=anchor_index))
        _flatten(sub, len(objects) - 1, objects, truth)


def generate_synthetic_corpus(spec: dict, n_scenes: int, seed: int = 0) -> SyntheticCorpus:
    """Generate ``n_scenes`` rooms following ``spec``.

    Deterministic for a fixed ``(spec, seed)``.  The returned ``truth`` dict
    records, per scene and per object, the rule that placed it: role
    ``standalone`` with its ``objects`` index, or role ``member`` with the
    relation index, mode index (-1 for a noise distractor) and anchor index.
    """
    spec = validate_spec(spec)
    if n_scenes < 0:
        raise SpecError("n_scenes", "must be non-negative")
    rng = np.random.default_rng(seed)
    placer = _Placer(spec, rng)
    scenes, truth = [], []
    for _ in range(n_scenes):
        room = _room(spec, rng)
        objects: list[ObjectInstance] = []
        info: list[dict] = []
        for k, rule in enumerate(spec["objects"]):
            if rng.uniform() >= rule["prob"]:
                continue
            for _ in range(MAX_GROUP_TRIES):
                anchor = placer.standalone(room, rule)
                tree = placer.members(room, anchor)
                if tree is not None:
                    break
            else:
                raise SpecError(f"objects[{k}]", "relation members cannot fit in the room")
            objects.append(anchor)
            info.append({"role": "standalone", "rule": k, "anchor": None})
            _flatten(tree, len(objects) - 1, objects, info)
        fixtures = _fixtures(spec, room, placer)
        scenes.append(Scene(room, tuple(objects), tuple(fixtures)))
        truth.append({"objects": info})
    return SyntheticCorpus(scenes, {"seed": seed, "spec": spec_to_json(spec), "scenes": truth})
