"""Scene data model, JSON-lines corpus I/O and the relation multigraph.

A corpus is a sequence of rooms (:class:`Scene`).  Learning never looks at
a room as a whole; it reduces the corpus to a :class:`RelationGraph`, which
holds, for every ordered category pair ``(i, j)``, every observed pose of a
``j`` object expressed in the frame of an ``i`` object, plus each category's
pose relative to its nearest wall.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .geometry import (
    OrientedBox,
    Polygon,
    closest_boundary_point,
    corners_array,
    point_in_polygon,
    points_in_polygon,
    rotation,
    wrap_angle,
)

log = logging.getLogger(__name__)


class CorruptRecordError(ValueError):
    """A scene record that cannot enter the relation graph."""


@dataclass(frozen=True)
class ObjectInstance:
    category: str
    x: float
    y: float
    z: float
    theta: float
    hx: float
    hz: float

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.theta, self.hx, self.hz)
        if not all(math.isfinite(v) for v in vals):
            raise CorruptRecordError(f"non-finite pose or size for {self.category!r}")
        if self.hx <= 0 or self.hz <= 0:
            raise CorruptRecordError(f"non-positive half extents for {self.category!r}")
        if not 0.0 <= self.theta < 2 * math.pi:
            object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.z])

    @property
    def half_extents(self) -> tuple[float, float]:
        return (self.hx, self.hz)

    @property
    def pose(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.z, self.theta)

    def box(self) -> OrientedBox:
        return OrientedBox((self.x, self.z), (self.hx, self.hz), self.theta)

    def with_pose(self, x: float, y: float, z: float, theta: float) -> "ObjectInstance":
        return ObjectInstance(self.category, x, y, z, theta, self.hx, self.hz)

    def to_dict(self) -> dict:
        return {
            "cat": self.category,
            "x": self.x,
            "y": self.y,
            "z": self.z,
            "theta": self.theta,
            "hx": self.hx,
            "hz": self.hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectInstance":
        try:
            return cls(
                str(d["cat"]),
                float(d["x"]),
                float(d.get("y", 0.0)),
                float(d["z"]),
                float(d.get("theta", 0.0)),
                float(d["hx"]),
                float(d["hz"]),
            )
        except KeyError as exc:
            raise CorruptRecordError(f"object record missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Scene:
    room: Polygon
    objects: tuple[ObjectInstance, ...] = ()
    fixtures: tuple[ObjectInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "fixtures", tuple(self.fixtures))

    def to_dict(self) -> dict:
        return {
            "room": self.room.to_list(),
            "objects": [o.to_dict() for o in self.objects],
            "fixtures": [o.to_dict() for o in self.fixtures],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        if "room" not in d:
            raise CorruptRecordError("scene record has no 'room'")
        try:
            room = Polygon.from_points(d["room"])
        except (ValueError, TypeError) as exc:
            raise CorruptRecordError(f"bad room polygon: {exc}") from None
        objects = [ObjectInstance.from_dict(o) for o in d.get("objects", [])]
        fixtures = [ObjectInstance.from_dict(o) for o in d.get("fixtures", [])]
        return cls(room, tuple(objects), tuple(fixtures))


def scene_to_json(scene: Scene) -> str:
    return json.dumps(scene.to_dict(), separators=(",", ":"))


def write_scenes(path, scenes: Iterable[Scene]) -> int:
    n = 0
    with open(path, "w") as fh:
        for s in scenes:
            fh.write(scene_to_json(s) + "\n")
            n += 1
    return n


def read_scenes(path, skip_corrupt: bool = False) -> tuple[list[Scene], int]:
    """Load a JSON-lines corpus.  Returns ``(scenes, n_skipped)``.

    With ``skip_corrupt`` unparseable lines are logged and counted instead of
    raising :class:`CorruptRecordError`.
    """
    scenes, skipped = [], 0
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            scenes.append(Scene.from_dict(json.loads(line)))
        except (json.JSONDecodeError, CorruptRecordError) as exc:
            if not skip_corrupt:
                raise CorruptRecordError(f"{path}:{lineno}: {exc}") from None
            log.warning("skipping %s:%d: %s", path, lineno, exc)
            skipped += 1
    return scenes, skipped


class RelationSample(NamedTuple):
    p_x: float
    p_y: float
    p_z: float
    p_theta: float


class WallAttributeSample(NamedTuple):
    d_wall: float
    theta_wall: float
    t_wall: float


def relative_pose(anchor: ObjectInstance, other: ObjectInstance) -> RelationSample:
    """Pose of ``other`` expressed in the frame of ``anchor``."""
    d = np.array([other.x - anchor.x, other.z - anchor.z])
    px, pz = rotation(-anchor.theta) @ d
    return RelationSample(
        float(px), other.y - anchor.y, float(pz), wrap_angle(other.theta - anchor.theta)
    )


def compose_pose(anchor_pose, rel) -> tuple[float, float, float, float]:
    """Inverse of :func:`relative_pose`: world pose of a sample placed in ``anchor_pose``'s frame."""
    ax, ay, az, at = anchor_pose
    px, py, pz, pt = rel
    dx, dz = rotation(at) @ np.array([px, pz])
    return (ax + float(dx), ay + py, az + float(dz), wrap_angle(at + pt))


def inward_normal(poly: Polygon, edge: int) -> np.ndarray:
    a = poly.vertices[edge]
    b = poly.vertices[(edge + 1) % len(poly)]
    t = b - a
    n = np.array([-t[1], t[0]])
    return n / np.hypot(*n)


def wall_attributes(obj: ObjectInstance, room: Polygon) -> WallAttributeSample:
    q = obj.center
    if not point_in_polygon(q, room):
        raise CorruptRecordError(f"{obj.category!r} center {tuple(q)} lies outside the room")
    p, k = closest_boundary_point(q, room)
    a = room.vertices[k]
    b = room.vertices[(k + 1) % len(room)]
    ab = b - a
    t = float(np.clip(np.dot(q - a, ab) / np.dot(ab, ab), 0.0, 1.0))
    n = inward_normal(room, k)
    normal_angle = math.atan2(n[1], n[0])
    return WallAttributeSample(
        float(np.hypot(*(q - p))), wrap_angle(obj.theta - normal_angle), t
    )


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Unordered pair key, lexicographically sorted."""
    return (a, b) if a <= b else (b, a)


@dataclass
class RelationGraph:
    """Relation samples per ordered category pair and wall samples per category.

    ``pairs[(i, j)]`` is an (n, 4) array of ``(p_x, p_y, p_z, p_theta)`` rows,
    each the pose of a ``j`` object in the frame of an ``i`` object.
    ``walls[c]`` is an (n, 3) array of ``(d_wall, theta_wall, t_wall)`` rows.
    ``cooccurrence[(a, b)]`` (sorted key) counts rooms containing both.
    """

    pairs: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    walls: dict[str, np.ndarray] = field(default_factory=dict)
    cooccurrence: dict[tuple[str, str], int] = field(default_factory=dict)
    n_scenes: int = 0
    skipped: int = 0

    def categories(self) -> list[str]:
        cats = set(self.walls)
        for i, j in self.pairs:
            cats.update((i, j))
        return sorted(cats)

    def samples(self, i: str, j: str) -> np.ndarray:
        return self.pairs.get((i, j), np.empty((0, 4)))


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    t = np.mod(theta, 2 * math.pi)
    t[t >= 2 * math.pi] = 0.0
    return t


def relative_poses(objs) -> np.ndarray:
    """All-pairs :func:`relative_pose`; entry ``[a, b]`` is ``b`` in ``a``'s frame."""
    p = np.array([o.pose for o in objs], dtype=float).reshape(-1, 4)
    dx = p[None, :, 0] - p[:, None, 0]
    dz = p[None, :, 2] - p[:, None, 2]
    c, s = np.cos(p[:, 3])[:, None], np.sin(p[:, 3])[:, None]
    out = np.empty((len(p), len(p), 4))
    out[..., 0] = c * dx + s * dz
    out[..., 1] = p[None, :, 1] - p[:, None, 1]
    out[..., 2] = -s * dx + c * dz
    out[..., 3] = wrap_angles(p[None, :, 3] - p[:, None, 3])
    return out


def _scene_samples(scene: Scene):
    objs = scene.objects
    walls = [(o.category, wall_attributes(o, scene.room)) for o in objs]
    rel = relative_poses(objs)
    rels = [
        ((objs[a].category, objs[b].category), rel[a, b])
        for a in range(len(objs))
        for b in range(len(objs))
        if a != b
    ]
    return walls, rels


def build_relation_graph(corpus: Iterable[Scene]) -> RelationGraph:
    """Scan every ordered pair of distinct movable objects in every room.

    Fixtures never enter the graph.  A scene with any object centered outside
    its room is skipped whole and counted in ``RelationGraph.skipped``.
    """
    pair_lists: dict[tuple[str, str], list] = defaultdict(list)
    wall_lists: dict[str, list] = defaultdict(list)
    cooc: dict[tuple[str, str], int] = defaultdict(int)
    n_scenes = skipped = 0
    for scene in corpus:
        try:
            walls, rels = _scene_samples(scene)
        except CorruptRecordError as exc:
            log.warning("skipping scene %d: %s", n_scenes + skipped, exc)
            skipped += 1
            continue
        n_scenes += 1
        for cat, w in walls:
            wall_lists[cat].append(w)
        for key, r in rels:
            pair_lists[key].append(r)
        cats = sorted({o.category for o in scene.objects})
        for c in cats:
            if sum(o.category == c for o in scene.objects) > 1:
                cooc[(c, c)] += 1
        for a, b in combinations(cats, 2):
            cooc[(a, b)] += 1
    if skipped:
        log.info("relation graph: %d scenes used, %d skipped", n_scenes, skipped)
    return RelationGraph(
        pairs={k: np.array(v, dtype=float) for k, v in sorted(pair_lists.items())},
        walls={k: np.array(v, dtype=float) for k, v in sorted(wall_lists.items())},
        cooccurrence=dict(sorted(cooc.items())),
        n_scenes=n_scenes,
        skipped=skipped,
    )


def box_inside(obj: ObjectInstance, room: Polygon) -> bool:
    """True when all four footprint corners lie in the room (boundary included)."""
    c = corners_array((obj.x, obj.z), (obj.hx, obj.hz), obj.theta)
    return bool(points_in_polygon(c, room).all())
