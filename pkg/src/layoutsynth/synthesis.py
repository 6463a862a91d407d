"""Online stage: group the requested objects, sample an arrangement, then refine it.

Objects whose categories form a strong pair are linked; each connected
component is a group.  One dominant member per group is placed against a
wall from its wall prior, the rest follow their anchors by sampling pair
templates.  A projection solver then pulls pairs toward their nearest
template point while pushing boxes apart and back inside the room.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .corpus import ObjectInstance, Scene, compose_pose, inward_normal
from .csr import DEFAULT_EPSILON, SpatialStrengthGraph
from .geometry import (
    TWO_PI,
    OrientedBox,
    Polygon,
    box_overlap_mtv,
    separation_vectors,
    boundary_violations,
    corners_array,
    points_in_polygon,
    signed_ang_diff,
    wrap_angle,
)
from .priors import NoPriorError, PriorStore, Template, WallPrior

log = logging.getLogger(__name__)

# extra push past an exact contact so rounding cannot leave a sliver of overlap
SLOP = 1e-6


@dataclass(frozen=True)
class SolverParams:
    epsilon: float = DEFAULT_EPSILON
    stiffness: float = 0.2
    max_iterations: int = 100
    loss_tolerance: float = 1e-3
    collision_weight: float = 1.0
    seed: int = 0
    # heuristic placement
    wall_tries: int = 50
    member_candidates: int = 8
    group_tries: int = 10
    consistency_tol: float = 0.3
    # collision / wall passes per solver iteration
    inner_passes: int = 3
    # fresh heuristic draws tried when a variant ends infeasible
    restarts: int = 2

    def __post_init__(self):
        if not 0.0 < self.stiffness <= 1.0:
            raise ValueError("stiffness must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if min(self.wall_tries, self.member_candidates, self.group_tries, self.inner_passes) < 1:
            raise ValueError("try counts must be at least 1")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")


# --- grouping ---------------------------------------------------------------


def pair_strengths(categories: Sequence[str], ssg: SpatialStrengthGraph) -> np.ndarray:
    """Symmetric d-value matrix over object indices; NaN where unmeasured, 0 on the diagonal."""
    n = len(categories)
    out = np.full((n, n), np.nan)
    for u in range(n):
        for v in range(u + 1, n):
            d = ssg.d(categories[u], categories[v])
            if d is not None:
                out[u, v] = out[v, u] = d
    np.fill_diagonal(out, 0.0)
    return out


def build_adjacency(
    categories: Sequence[str], ssg: SpatialStrengthGraph, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    d = pair_strengths(categories, ssg)
    adj = np.nan_to_num(d, nan=-np.inf) >= epsilon
    np.fill_diagonal(adj, False)
    return adj


@dataclass
class Group:
    members: tuple[int, ...]
    dominant: Optional[int] = None
    # member -> the member it is placed relative to
    anchors: dict[int, int] = field(default_factory=dict)
    # non-dominant members, anchors first
    order: tuple[int, ...] = ()


def form_groups(adj: np.ndarray) -> list[Group]:
    """Connected components, each sorted, ordered by smallest member."""
    n = len(adj)
    seen = np.zeros(n, dtype=bool)
    groups = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [s], deque([s])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(adj[u]):
                if not seen[v]:
                    seen[v] = True
                    comp.append(int(v))
                    queue.append(int(v))
        groups.append(Group(tuple(sorted(comp))))
    return groups


def choose_dominant(group: Group, adj: np.ndarray, rng: np.random.Generator) -> int:
    """Uniform draw among the members of maximal in-group degree."""
    members = np.array(group.members)
    if len(members) == 1:
        return int(members[0])
    deg = adj[np.ix_(members, members)].sum(axis=1)
    best = members[deg == deg.max()]
    return int(best[rng.integers(len(best))]) if len(best) > 1 else int(best[0])


def attach(group: Group, dominant: int, adj: np.ndarray, strengths: np.ndarray) -> Group:
    """Fill in anchors and placement order for a group with a chosen dominant.

    A maximum-weight spanning tree (by d-value, over adjacency edges) is
    grown from the dominant.  Members adjacent to the dominant anchor on it;
    the others anchor on their tree parent.
    """
    members = set(group.members)
    parent: dict[int, int] = {}
    in_tree = {dominant}
    while len(in_tree) < len(members):
        best = None
        for u in sorted(in_tree):
            for v in sorted(members - in_tree):
                if adj[u, v]:
                    key = (strengths[u, v], -u, -v)
                    if best is None or key > best[0]:
                        best = (key, u, v)
        if best is None:
            raise ValueError("group members are not connected")
        _, u, v = best
        parent[v] = u
        in_tree.add(v)
    anchors = {m: (dominant if adj[m, dominant] else p) for m, p in parent.items()}

    def depth(m: int) -> int:
        return 0 if m == dominant else 1 + depth(anchors[m])

    order = tuple(sorted(anchors, key=lambda m: (depth(m), m)))
    return Group(group.members, dominant, anchors, order)


# --- layout state -----------------------------------------------------------


@dataclass
class LayoutState:
    room: Polygon
    categories: list[str]
    half_extents: np.ndarray
    poses: np.ndarray
    fixtures: tuple[ObjectInstance, ...] = ()
    # ordered index pair -> template of that category pair
    active: dict[tuple[int, int], Template] = field(default_factory=dict)

    def __post_init__(self):
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(-1, 2)
        self.poses = np.asarray(self.poses, dtype=float).reshape(-1, 4)
        self.fixtures = tuple(self.fixtures)

    def __len__(self) -> int:
        return len(self.categories)

    def copy(self) -> "LayoutState":
        return LayoutState(
            self.room, list(self.categories), self.half_extents.copy(), self.poses.copy(), self.fixtures, dict(self.active)
        )

    def box(self, i: int) -> OrientedBox:
        x, _, z, t = self.poses[i]
        return OrientedBox((x, z), tuple(self.half_extents[i]), t)

    def objects(self) -> list[ObjectInstance]:
        return [
            ObjectInstance(c, *map(float, p), float(h[0]), float(h[1]))
            for c, p, h in zip(self.categories, self.poses, self.half_extents)
        ]

    def to_scene(self) -> Scene:
        return Scene(self.room, tuple(self.objects()), self.fixtures)

    def all_corners(self) -> np.ndarray:
        """(n_objects + n_fixtures, 4, 2) footprint corners, objects first."""
        fx = np.array([[f.x, f.y, f.z, f.theta] for f in self.fixtures]).reshape(-1, 4)
        fh = np.array([[f.hx, f.hz] for f in self.fixtures]).reshape(-1, 2)
        return _corners(np.vstack([self.poses, fx]), np.vstack([self.half_extents, fh]))


def _corners(poses: np.ndarray, half_extents: np.ndarray) -> np.ndarray:
    """Batched :func:`corners_array`: (n, 4) poses, (n, 2) half extents -> (n, 4, 2)."""
    sign = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    local = sign[None] * half_extents[:, None, :]
    c, s = np.cos(poses[:, 3])[:, None], np.sin(poses[:, 3])[:, None]
    x = c * local[..., 0] - s * local[..., 1] + poses[:, 0:1]
    z = s * local[..., 0] + c * local[..., 1] + poses[:, 2:3]
    return np.stack([x, z], axis=-1)


def active_templates(categories: Sequence[str], adj: np.ndarray, priors: PriorStore) -> dict:
    out = {}
    for i, j in zip(*np.nonzero(adj)):
        t = priors.template(categories[i], categories[j])
        if t is not None:
            out[(int(i), int(j))] = t
    return out


# --- loss -------------------------------------------------------------------


def _relative(anchor_pose: np.ndarray, other_pose: np.ndarray) -> np.ndarray:
    c, s = math.cos(anchor_pose[3]), math.sin(anchor_pose[3])
    dx, dz = other_pose[0] - anchor_pose[0], other_pose[2] - anchor_pose[2]
    return np.array(
        [c * dx + s * dz, other_pose[1] - anchor_pose[1], -s * dx + c * dz, wrap_angle(other_pose[3] - anchor_pose[3])]
    )


def _template_match(rel: np.ndarray, template: Template) -> tuple[float, int]:
    p = template.points
    d = np.abs(np.mod(p[:, 3], TWO_PI) - rel[3])
    d = np.minimum(d, TWO_PI - d)
    cost = np.hypot(p[:, 0] - rel[0], p[:, 2] - rel[2]) + np.exp(d)
    k = int(np.argmin(cost))
    return float(cost[k]), k


class TemplateMatcher:
    """Exact nearest-template-point search, pruned with a planar k-d tree.

    Every point costs at least its planar distance plus 1, so once some
    point costs ``c`` only points within ``c - 1`` can beat it.
    """

    def __init__(self, template: Template):
        self.template = template
        p = template.points
        self.xz = np.ascontiguousarray(p[:, [0, 2]])
        self.theta = np.mod(p[:, 3], TWO_PI)
        self.tree = cKDTree(self.xz)

    def _costs(self, rel: np.ndarray, idx) -> np.ndarray:
        d = np.abs(self.theta[idx] - rel[3])
        d = np.minimum(d, TWO_PI - d)
        return np.hypot(self.xz[idx, 0] - rel[0], self.xz[idx, 1] - rel[2]) + np.exp(d)

    def match(self, rel: np.ndarray) -> tuple[float, int]:
        n = len(self.xz)
        if n <= 64:
            cost = self._costs(rel, slice(None))
            k = int(np.argmin(cost))
            return float(cost[k]), k
        _, near = self.tree.query([rel[0], rel[2]], k=8)
        bound = float(self._costs(rel, near).min()) - 1.0
        idx = np.asarray(
            self.tree.query_ball_point([rel[0], rel[2]], bound * (1 + 1e-9) + 1e-12, return_sorted=True), dtype=int
        )
        if len(idx) == 0:
            idx = np.sort(near)
        cost = self._costs(rel, idx)
        k = int(np.argmin(cost))
        return float(cost[k]), int(idx[k])


def hausdorff_term(state: LayoutState, i: int, j: int, template: Template) -> tuple[float, np.ndarray]:
    """Distance from j's pose in i's frame to the nearest template point, and that point.

    Each point scores planar offset plus ``exp`` of the circular heading
    difference, so an exact match costs 1.
    """
    if len(template) == 0:
        raise ValueError("empty template")
    cost, k = _template_match(_relative(state.poses[i], state.poses[j]), template)
    return cost, template.points[k]


def _to_left_grid(corners: np.ndarray) -> np.ndarray:
    """Entry [i, j, k, l]: to-left value of corner k of box i against edge l of box j."""
    a = corners[None, :, :, None, :]
    b = np.roll(corners, -1, axis=1)[None, :, :, None, :]
    q = corners[:, None, None, :, :]
    # axes after broadcasting: i, j, edge l, corner k
    val = (b[..., 0] - a[..., 0]) * (q[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (q[..., 0] - a[..., 0])
    return np.swapaxes(val, 2, 3)


def object_collision(state: LayoutState) -> float:
    """Sum over ordered box pairs and corners of the product of clipped to-left values.

    A corner contributes only when it lies strictly inside the other box.
    Fixtures count as obstacles; fixture-fixture pairs are ignored.
    """
    corners = state.all_corners()
    n_all, n = len(corners), len(state)
    if n_all < 2 or n == 0:
        return 0.0
    prod = np.clip(_to_left_grid(corners), 0.0, None).prod(axis=3).sum(axis=2)
    mask = ~np.eye(n_all, dtype=bool)
    mask[n:, n:] = False
    return float(prod[mask].sum())


def wall_collision(state: LayoutState) -> float:
    if len(state) == 0:
        return 0.0
    corners = state.all_corners()[: len(state)].reshape(-1, 2)
    return float(np.hypot(*boundary_violations(corners, state.room).T).sum())


def collision_cost(state: LayoutState) -> float:
    return object_collision(state) + wall_collision(state)


def total_loss(state: LayoutState, params: SolverParams = SolverParams()) -> float:
    """Template terms over the active ordered pairs plus weighted collision cost."""
    fit = sum(hausdorff_term(state, i, j, t)[0] for (i, j), t in state.active.items())
    return fit + params.collision_weight * collision_cost(state)


def _candidate_pairs(state: LayoutState) -> list[tuple[int, int]]:
    """Box pairs (object first) whose bounding circles meet."""
    n = len(state)
    centers = [p[[0, 2]] for p in state.poses] + [np.array([f.x, f.z]) for f in state.fixtures]
    radii = [math.hypot(*h) for h in state.half_extents] + [math.hypot(f.hx, f.hz) for f in state.fixtures]
    if not centers:
        return []
    c, r = np.array(centers), np.array(radii)
    dist = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
    near = dist < r[:, None] + r[None, :]
    return [(i, int(j)) for i in range(n) for j in np.flatnonzero(near[i]) if j > i]


def _boxes(state: LayoutState) -> list[OrientedBox]:
    return [state.box(i) for i in range(len(state))] + [f.box() for f in state.fixtures]


def overlapping_pairs(state: LayoutState) -> list[tuple[int, int]]:
    """Pairs whose footprints overlap by the separating-axis test."""
    boxes = _boxes(state)
    return [(i, j) for i, j in _candidate_pairs(state) if box_overlap_mtv(boxes[i], boxes[j]) is not None]


def is_feasible(state: LayoutState) -> bool:
    return collision_cost(state) == 0.0 and not overlapping_pairs(state)


# --- heuristic arrangement ----------------------------------------------------


def _inside(room: Polygon, pose, he) -> bool:
    return bool(points_in_polygon(corners_array((pose[0], pose[2]), he, pose[3]), room).all())


def _overlaps_any(pose, he, obstacles: Sequence[OrientedBox]) -> int:
    b = OrientedBox((pose[0], pose[2]), tuple(he), pose[3])
    return sum(box_overlap_mtv(b, o) is not None for o in obstacles)


def wall_pose(room: Polygon, wall: int, t: float, d_wall: float, theta_wall: float) -> tuple:
    a = room.vertices[wall]
    b = room.vertices[(wall + 1) % len(room)]
    n = inward_normal(room, wall)
    c = a + t * (b - a) + d_wall * n
    return (float(c[0]), 0.0, float(c[1]), wrap_angle(math.atan2(n[1], n[0]) + theta_wall))


def sample_wall_placement(
    prior: WallPrior,
    room: Polygon,
    half_extents,
    rng: np.random.Generator,
    obstacles: Sequence[OrientedBox] = (),
    tries: int = 50,
) -> tuple:
    """Pose against a uniformly chosen wall, resampled until it fits.

    After ``tries`` failures the longest wall is used at its midpoint.
    """
    for _ in range(tries):
        wall = int(rng.integers(len(room)))
        pose = wall_pose(room, wall, rng.uniform(), prior.dist_modes.sample(rng), prior.orient_modes.sample(rng))
        if _inside(room, pose, half_extents) and not _overlaps_any(pose, half_extents, obstacles):
            return pose
    a, b = room.edges()
    longest = int(np.argmax(np.hypot(*(b - a).T)))
    return wall_pose(room, longest, 0.5, prior.dist_modes.sample(rng), prior.orient_modes.sample(rng))


def _consistency(state: LayoutState, k: int, pose, placed: set, anchor: int) -> float:
    """Template residual of a candidate pose against placed non-anchor partners."""
    trial = state.poses.copy()
    trial[k] = pose
    total = 0.0
    for (i, j), t in state.active.items():
        if k not in (i, j):
            continue
        other = j if i == k else i
        if other == anchor or other not in placed:
            continue
        cost, _ = _template_match(_relative(trial[i], trial[j]), t)
        total += cost - 1.0
    return total


def heuristic_arrange(
    state: LayoutState,
    group: Group,
    priors: PriorStore,
    rng: np.random.Generator,
    params: SolverParams = SolverParams(),
    placed: Optional[set] = None,
) -> dict[int, tuple]:
    """Sample initial poses for one group (dominant and attachments already set).

    Writes into ``state.poses`` and returns the new poses.  ``placed`` holds
    indices of objects already positioned by earlier groups; they and the
    fixtures are avoided where possible.
    """
    placed = set() if placed is None else placed
    dom = group.dominant
    if dom is None:
        raise ValueError("group has no dominant member")
    cats, he = state.categories, state.half_extents
    fixtures = [f.box() for f in state.fixtures]

    def obstacles():
        return fixtures + [state.box(i) for i in sorted(placed)]

    prior = priors.wall_priors.get(cats[dom])
    if prior is None:
        raise NoPriorError(f"no wall prior for dominant category {cats[dom]!r}")
    base = set(placed)
    best = None
    # a dominant pose that leaves some member no clean spot is redrawn
    for _ in range(params.group_tries):
        placed.clear()
        placed.update(base)
        out, bad = _place_group(state, group, priors, rng, params, placed, prior, obstacles)
        if best is None or bad < best[0]:
            best = (bad, out)
        if bad == 0:
            break
    placed.clear()
    placed.update(base | set(best[1]))
    for k, pose in best[1].items():
        state.poses[k] = pose
    return best[1]


def _place_group(state, group, priors, rng, params, placed, prior, obstacles):
    """One draw for a whole group; returns the poses and how many members missed a clean spot."""
    cats, he, dom = state.categories, state.half_extents, group.dominant
    out = {}
    state.poses[dom] = sample_wall_placement(prior, state.room, he[dom], rng, obstacles(), params.wall_tries)
    placed.add(dom)
    out[dom] = tuple(state.poses[dom])
    bad = 0
    for k in group.order:
        a = group.anchors[k]
        template = priors.template(cats[a], cats[k])
        if template is None:
            fallback = priors.wall_priors.get(cats[k])
            if fallback is None:
                raise NoPriorError(f"no template {cats[a]}|{cats[k]} and no wall prior for {cats[k]!r}")
            log.warning("no template %s|%s; placing %s from its wall prior", cats[a], cats[k], cats[k])
            pose = sample_wall_placement(fallback, state.room, he[k], rng, obstacles(), params.wall_tries)
        else:
            best = None
            obs = obstacles()
            for _ in range(params.member_candidates):
                rel = template.points[rng.choice(len(template), p=template.weights)]
                pose = compose_pose(tuple(state.poses[a]), tuple(rel))
                penalty = (not _inside(state.room, pose, he[k])) + _overlaps_any(pose, he[k], obs)
                resid = _consistency(state, k, pose, placed, a)
                key = (penalty, resid)
                if best is None or key < best[0]:
                    best = (key, pose)
                if penalty == 0 and resid <= params.consistency_tol:
                    break
            (penalty, resid), pose = best
            bad += penalty > 0 or resid > params.consistency_tol
        state.poses[k] = pose
        placed.add(k)
        out[k] = tuple(state.poses[k])
    return out, bad


# --- solver -----------------------------------------------------------------


def _project_templates(state: LayoutState, targets: dict, stiffness: float) -> None:
    for (i, j), rel in targets.items():
        target = compose_pose(tuple(state.poses[i]), tuple(rel))
        p = state.poses[j]
        p[0] += stiffness * (target[0] - p[0])
        p[1] += stiffness * (target[1] - p[1])
        p[2] += stiffness * (target[2] - p[2])
        p[3] = wrap_angle(p[3] + stiffness * signed_ang_diff(target[3], p[3]))


def _project_collisions(state: LayoutState) -> int:
    """One sweep of pairwise separations; returns the number of overlaps resolved.

    Each pair is pushed apart along the shallowest box-axis direction that
    keeps the moved boxes inside the room, falling back to the minimum
    translation vector when none does.  Shares follow inverse footprint area;
    fixtures do not move.
    """
    n = len(state)
    inv_mass = [1.0 / (4.0 * h[0] * h[1]) for h in state.half_extents] + [0.0] * len(state.fixtures)
    boxes = _boxes(state)
    hits = 0

    def fits(k: int, delta: np.ndarray) -> bool:
        p = state.poses[k]
        return _inside(state.room, (p[0] + delta[0], 0.0, p[2] + delta[1], p[3]), state.half_extents[k])

    for i, j in _candidate_pairs(state):
        vecs = separation_vectors(boxes[i], boxes[j])
        if not vecs:
            continue
        hits += 1
        wi, wj = inv_mass[i], inv_mass[j]
        share_i = wi / (wi + wj)
        moves = []
        for mtv in vecs:
            depth = float(np.hypot(*mtv))
            push = mtv * (depth + SLOP) / depth
            moves.append(push)
            if fits(i, share_i * push) and (j >= n or fits(j, -(1.0 - share_i) * push)):
                break
        else:
            moves = moves[:1]
        push = moves[-1]
        state.poses[i, [0, 2]] += share_i * push
        boxes[i] = state.box(i)
        if j < n:
            state.poses[j, [0, 2]] -= (1.0 - share_i) * push
            boxes[j] = state.box(j)
    return hits


def _project_walls(state: LayoutState, rounds: int = 8) -> int:
    """Shift objects with corners outside the room inward; returns how many moved."""
    n = len(state)
    if n == 0:
        return 0
    inside = points_in_polygon(_corners(state.poses, state.half_extents).reshape(-1, 2), state.room)
    out = np.flatnonzero(~inside.reshape(n, 4).all(axis=1))
    for i in out:
        for _ in range(rounds):
            p, h = state.poses[i], state.half_extents[i]
            v = boundary_violations(corners_array((p[0], p[2]), h, p[3]), state.room)
            size = np.hypot(v[:, 0], v[:, 1])
            k = int(np.argmax(size))
            if size[k] == 0.0:
                break
            state.poses[i, [0, 2]] += v[k] * (size[k] + SLOP) / size[k]
    return len(out)


def _resolve(state: LayoutState, passes: int) -> None:
    for _ in range(passes):
        hits = _project_collisions(state)
        moved = _project_walls(state)
        if hits == 0 and moved == 0:
            break


@dataclass
class SolveResult:
    state: LayoutState
    loss: float
    iterations: int
    feasible: bool


def _evaluate(state: LayoutState, matchers: dict, params: SolverParams):
    """Loss, feasibility, raw collision cost and per-pair target template points."""
    fit, targets = 0.0, {}
    for (i, j), m in matchers.items():
        cost, k = m.match(_relative(state.poses[i], state.poses[j]))
        fit += cost
        targets[(i, j)] = m.template.points[k]
    col = collision_cost(state)
    feasible = col == 0.0 and not overlapping_pairs(state)
    return fit + params.collision_weight * col, feasible, col, targets


def optimize(state: LayoutState, params: SolverParams = SolverParams()) -> SolveResult:
    """Iterative projection toward template targets, collision-free and inside the room.

    Returns the best state seen, ranking feasible states first and then by
    loss; the input itself is a candidate, so an optimal input comes back
    unchanged.  If no feasible state turns up, a final run of collision and
    wall passes without template pull is tried.
    """
    shared: dict[int, TemplateMatcher] = {}
    matchers = {}
    for key, t in state.active.items():
        if id(t) not in shared:
            shared[id(t)] = TemplateMatcher(t)
        matchers[key] = shared[id(t)]

    cur = state.copy()
    loss, feasible, col, targets = _evaluate(cur, matchers, params)
    best = (not feasible, loss, cur.copy())

    def consider(st, loss, feasible):
        nonlocal best
        infeasible = not feasible
        if infeasible < best[0] or (
            infeasible == best[0] and loss < best[1] - 1e-12 * max(1.0, abs(best[1]))
        ):
            best = (infeasible, loss, st.copy())

    iterations = 0
    for it in range(1, params.max_iterations + 1):
        iterations = it
        _project_templates(cur, targets, params.stiffness)
        _resolve(cur, params.inner_passes)
        new_loss, feasible, col, targets = _evaluate(cur, matchers, params)
        consider(cur, new_loss, feasible)
        converged = col == 0.0 and abs(loss - new_loss) < params.loss_tolerance
        loss = new_loss
        if converged:
            break
    if best[0]:
        _resolve(cur, params.max_iterations)
        new_loss, feasible, _, _ = _evaluate(cur, matchers, params)
        consider(cur, new_loss, feasible)
    return SolveResult(best[2], best[1], iterations, not best[0])


# --- end to end -------------------------------------------------------------


@dataclass(frozen=True)
class ObjectSpec:
    category: str
    half_extents: tuple[float, float]


@dataclass
class SynthResult:
    scene: Scene
    loss: float
    iterations: int
    feasible: bool
    seed: int
    variant: int
    attempts: int = 1

    def meta(self) -> dict:
        return {
            "variant": self.variant,
            "seed": self.seed,
            "loss": self.loss,
            "iterations": self.iterations,
            "feasible": self.feasible,
            "attempts": self.attempts,
        }


def check_priors(objects: Sequence[ObjectSpec], priors: PriorStore, adj: np.ndarray) -> None:
    """Every object needs a wall prior or at least one strong partner."""
    for k, o in enumerate(objects):
        if o.category not in priors.wall_priors and not adj[k].any():
            raise NoPriorError(f"category {o.category!r} has no wall prior and no strong partner")


def synthesize(
    room: Polygon,
    objects: Sequence[ObjectSpec],
    priors: PriorStore,
    n_variants: int = 1,
    seed: int = 0,
    fixtures: Sequence[ObjectInstance] = (),
    params: Optional[SolverParams] = None,
) -> list[SynthResult]:
    params = params or SolverParams(seed=seed)
    cats = [o.category for o in objects]
    strengths = pair_strengths(cats, priors.ssg)
    adj = build_adjacency(cats, priors.ssg, params.epsilon)
    check_priors(objects, priors, adj)
    groups = form_groups(adj)
    active = active_templates(cats, adj, priors)
    he = np.array([o.half_extents for o in objects], dtype=float).reshape(-1, 2)
    results = []
    for v in range(n_variants):
        best = None
        for attempt in range(params.restarts + 1):
            rng = np.random.default_rng([seed, v] if attempt == 0 else [seed, v, attempt])
            state = LayoutState(room, list(cats), he, np.zeros((len(cats), 4)), tuple(fixtures), active)
            placed: set = set()
            # larger groups first; they are hardest to fit
            for g in sorted(groups, key=lambda g: (-len(g.members), g.members[0])):
                dom = choose_dominant(g, adj, rng)
                heuristic_arrange(state, attach(g, dom, adj, strengths), priors, rng, params, placed)
            res = optimize(state, params)
            if best is None or (not res.feasible, res.loss) < (not best.feasible, best.loss):
                best = res
            if res.feasible:
                break
        res = best
        results.append(SynthResult(res.state.to_scene(), res.loss, res.iterations, res.feasible, seed, v, attempt + 1))
    return results
