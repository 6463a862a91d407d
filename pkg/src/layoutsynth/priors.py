"""Layout priors: density-peak denoising of relation samples into discrete templates.

A template is the set of relation samples that survive denoising, each
weighted by its local density.  Synthesis treats it as a multinomial over
relative poses, so arbitrary (non-elliptical, multi-modal) patterns are kept
exactly as observed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import RelationGraph, Scene, build_relation_graph, pair_key
from .csr import DEFAULT_EPSILON, DEFAULT_RATIO, MIN_SAMPLES, SpatialStrengthGraph, build_ssg, pair_seed
from .geometry import TWO_PI

log = logging.getLogger(__name__)

PRIORS_VERSION = 1


class EmptyTemplateError(ValueError):
    pass


class NoPriorError(LookupError):
    pass


class PriorsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DpcParams:
    eta: float = 0.015
    rho_keep: float = 0.015
    center_score_keep: float = 0.2
    # larger sample sets are thinned (seeded) before the O(K^2) pass
    max_points: int = 3000

    def __post_init__(self):
        for name in ("eta", "rho_keep", "center_score_keep"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


# --- density peaks ----------------------------------------------------------


def translation_distances(samples: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances over the (p_x, p_y, p_z) columns."""
    s = np.asarray(samples, dtype=float)
    dx = s[:, None, 0] - s[None, :, 0]
    dy = s[:, None, 1] - s[None, :, 1]
    dz = s[:, None, 2] - s[None, :, 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def scalar_distances(values: np.ndarray, circular: bool = False) -> np.ndarray:
    v = np.asarray(values, dtype=float).ravel()
    d = np.abs(v[:, None] - v[None, :])
    if circular:
        d = np.minimum(d, TWO_PI - d)
    return d


def cutoff_distance(dist: np.ndarray, eta: float) -> float:
    """The floor(eta*K^2)-th smallest of the K(K-1) ordered off-diagonal distances."""
    k = len(dist)
    rank = min(max(int(math.floor(eta * k * k)), 1), k * (k - 1))
    # each unordered distance appears twice in the ordered list
    upper = dist[np.triu_indices(k, 1)]
    j = (rank + 1) // 2 - 1
    return float(np.partition(upper, j)[j])


def density_order(rho: np.ndarray) -> np.ndarray:
    """Indices sorted by decreasing density; ties go to the lower index."""
    return np.lexsort((np.arange(len(rho)), -rho))


def dpc_from_distances(dist: np.ndarray, eta: float = 0.015, d_c: Optional[float] = None):
    """Local density and separation from a full (K, K) distance matrix.

    Returns ``(rho, delta, d_c)``.  ``rho[k]`` counts the other points within
    ``d_c``; ``delta[k]`` is the distance to the nearest point of higher
    density (higher rho, or equal rho and lower index).  The densest point
    gets its largest distance to any point instead.
    """
    dist = np.asarray(dist, dtype=float)
    k = len(dist)
    if k < 2:
        raise ValueError(f"density peaks need at least 2 samples, got {k}")
    if d_c is None:
        d_c = cutoff_distance(dist, eta)
    rho = (dist <= d_c).sum(axis=1) - 1
    order = density_order(rho)
    ranked = dist[np.ix_(order, order)]
    # row r may only look at columns ranked strictly before it
    ranked[np.triu_indices(k)] = np.inf
    delta = np.empty(k)
    delta[order] = ranked.min(axis=1)
    delta[order[0]] = dist[order[0]].max()
    return rho, delta, float(d_c)


def dpc_densities(samples, eta: float = 0.015, d_c: Optional[float] = None):
    """:func:`dpc_from_distances` over relation-sample translations."""
    s = np.asarray(samples, dtype=float).reshape(-1, 4)
    if len(s) < 2:
        raise ValueError(f"density peaks need at least 2 samples, got {len(s)}")
    return dpc_from_distances(translation_distances(s), eta, d_c)


def _select(rho: np.ndarray, delta: np.ndarray, params: DpcParams):
    keep = (rho >= params.rho_keep * rho.max()) & (rho > 0)
    if not keep.any():
        raise EmptyTemplateError("every sample was classified as noise")
    score = rho * delta
    top = density_order(rho)[0]
    best = score[keep].max()
    centers = keep & (score > 0) & (score >= params.center_score_keep * best)
    centers[top] = True
    return keep, centers


def _thin(samples: np.ndarray, limit: int, seed: int) -> np.ndarray:
    if len(samples) <= limit:
        return samples
    rng = np.random.default_rng(seed)
    return samples[np.sort(rng.choice(len(samples), size=limit, replace=False))]


# --- templates --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Template:
    """Discrete relative-pose prior for one ordered category pair.

    ``points`` is (n, 4) ``(p_x, p_y, p_z, p_theta)``; ``weights`` sums to 1;
    ``centers`` indexes the points flagged as pattern centers.
    """

    points: np.ndarray
    weights: np.ndarray
    centers: tuple[int, ...]

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 4)
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(p) == 0:
            raise EmptyTemplateError("template has no points")
        if len(w) != len(p):
            raise ValueError("one weight per template point")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("template weights must be non-negative and sum to 1")
        if any(c < 0 or c >= len(p) for c in self.centers):
            raise ValueError("template center index out of range")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", tuple(int(c) for c in self.centers))

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Template)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
            and self.centers == other.centers
        )

    def to_dict(self) -> dict:
        return {
            "points": [[*map(float, p), float(w)] for p, w in zip(self.points, self.weights)],
            "centers": list(self.centers),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Template":
        rows = np.asarray(d["points"], dtype=float).reshape(-1, 5)
        return cls(rows[:, :4], rows[:, 4], tuple(d.get("centers", ())))


def extract_template(samples, params: DpcParams = DpcParams(), seed: int = 0) -> Template:
    """Denoise relation samples into a :class:`Template`.

    Samples whose density falls below ``rho_keep`` of the peak density are
    dropped as noise; the rest are weighted by density.  Orientation is
    carried along but plays no part in the clustering.
    """
    s = _thin(np.asarray(samples, dtype=float).reshape(-1, 4), params.max_points, seed)
    rho, delta, _ = dpc_densities(s, params.eta)
    keep, centers = _select(rho, delta, params)
    idx = np.flatnonzero(keep)
    w = rho[idx].astype(float)
    new_index = {int(k): n for n, k in enumerate(idx)}
    return Template(s[idx], w / w.sum(), tuple(new_index[int(c)] for c in np.flatnonzero(centers)))


def merge_templates(
    neighbors: Sequence[tuple[Template, float]], beta: float = 0.1, k_max: int = 5
) -> Template:
    """Union of the templates of similar objects.

    ``neighbors`` holds ``(template, similarity)`` pairs sorted by decreasing
    similarity.  Up to ``k_max`` entries scoring at least ``beta`` are merged;
    each contributes total weight proportional to its score.
    """
    used = [(t, s) for t, s in neighbors if s >= beta][:k_max]
    if not used:
        raise NoPriorError(f"no neighbour reaches similarity {beta}")
    total = sum(s for _, s in used)
    points, weights, centers = [], [], []
    offset = 0
    for t, s in used:
        points.append(t.points)
        weights.append(t.weights * (s / total))
        centers.extend(c + offset for c in t.centers)
        offset += len(t)
    w = np.concatenate(weights)
    return Template(np.vstack(points), w / w.sum(), tuple(centers))


# --- wall priors ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Multinomial:
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        if len(v) == 0 or len(v) != len(p):
            raise ValueError("multinomial needs one probability per value")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("multinomial probabilities must sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Multinomial)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.probs, other.probs)
        )

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.values[rng.choice(len(self.values), p=self.probs)])

    def to_list(self) -> list[list[float]]:
        return [[float(v), float(p)] for v, p in zip(self.values, self.probs)]

    @classmethod
    def from_list(cls, rows) -> "Multinomial":
        a = np.asarray(rows, dtype=float).reshape(-1, 2)
        return cls(a[:, 0], a[:, 1])


@dataclass(frozen=True)
class WallPrior:
    dist_modes: Multinomial
    orient_modes: Multinomial

    def to_dict(self) -> dict:
        return {"dist_modes": self.dist_modes.to_list(), "orient_modes": self.orient_modes.to_list()}

    @classmethod
    def from_dict(cls, d: dict) -> "WallPrior":
        return cls(Multinomial.from_list(d["dist_modes"]), Multinomial.from_list(d["orient_modes"]))


def scalar_modes(values, params: DpcParams = DpcParams(), circular: bool = False, seed: int = 0) -> Multinomial:
    """1D density peaks; the pattern centers become the support, weighted by density."""
    v = _thin(np.asarray(values, dtype=float).ravel(), params.max_points, seed)
    rho, delta, _ = dpc_from_distances(scalar_distances(v, circular), params.eta)
    _, centers = _select(rho, delta, params)
    idx = np.flatnonzero(centers)
    w = rho[idx].astype(float)
    if w.sum() == 0:
        w = np.ones(len(idx))
    return Multinomial(v[idx], w / w.sum())


def extract_wall_prior(samples, params: DpcParams = DpcParams(), seed: int = 0) -> WallPrior:
    """Multinomial wall-distance and wall-orientation priors from (d_wall, theta_wall, t_wall) rows."""
    s = np.asarray(samples, dtype=float).reshape(-1, 3)
    if len(s) < 2:
        raise ValueError(f"wall prior needs at least 2 samples, got {len(s)}")
    return WallPrior(
        scalar_modes(s[:, 0], params, circular=False, seed=seed),
        scalar_modes(s[:, 1], params, circular=True, seed=seed),
    )


# --- prior store ------------------------------------------------------------


def _pair_str(key: tuple[str, str]) -> str:
    return f"{key[0]}|{key[1]}"


@dataclass
class PriorStore:
    templates: dict[tuple[str, str], Template] = field(default_factory=dict)
    wall_priors: dict[str, WallPrior] = field(default_factory=dict)
    ssg: SpatialStrengthGraph = field(default_factory=SpatialStrengthGraph)
    params: dict = field(default_factory=dict)

    def template(self, i: str, j: str) -> Optional[Template]:
        return self.templates.get((i, j))

    def validate(self) -> None:
        for i, j in self.templates:
            if pair_key(i, j) not in self.ssg.weights:
                raise PriorsFormatError(f"template {i}|{j} has no spatial-strength entry")

    def to_dict(self) -> dict:
        return {
            "version": PRIORS_VERSION,
            "params": dict(sorted(self.params.items())),
            "ssg": self.ssg.to_list(),
            "templates": {_pair_str(k): t.to_dict() for k, t in sorted(self.templates.items())},
            "wall_priors": {c: w.to_dict() for c, w in sorted(self.wall_priors.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PriorStore":
        if not isinstance(d, dict) or d.get("version") != PRIORS_VERSION:
            raise PriorsFormatError(f"unsupported priors version {d.get('version') if isinstance(d, dict) else d!r}")
        try:
            ssg = SpatialStrengthGraph.from_list(d.get("ssg", []))
            templates = {}
            for key, t in d.get("templates", {}).items():
                parts = key.split("|")
                if len(parts) != 2:
                    raise PriorsFormatError(f"bad template key {key!r}")
                templates[(parts[0], parts[1])] = Template.from_dict(t)
            walls = {c: WallPrior.from_dict(w) for c, w in d.get("wall_priors", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PriorsFormatError):
                raise
            raise PriorsFormatError(f"invalid priors document: {exc}") from None
        store = cls(templates, walls, ssg, dict(d.get("params", {})))
        store.validate()
        return store

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "PriorStore":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise PriorsFormatError(f"{path}: not JSON ({exc})") from None
        return cls.from_dict(doc)


@dataclass
class LearnReport:
    n_scenes: int = 0
    skipped_scenes: int = 0
    measured_pairs: int = 0
    unmeasured_pairs: list = field(default_factory=list)
    strong_pairs: list = field(default_factory=list)
    empty_templates: list = field(default_factory=list)
    wall_categories: list = field(default_factory=list)
    missing_wall_priors: list = field(default_factory=list)

    def summary(self) -> str:
        lines = [
            f"scenes: {self.n_scenes} used, {self.skipped_scenes} skipped",
            f"pairs: {self.measured_pairs} measured, {len(self.unmeasured_pairs)} with too few samples",
            f"pairs at or above threshold: {len(self.strong_pairs)}",
        ]
        lines += [f"  {a}|{b}  d={d:.3f}" for a, b, d in self.strong_pairs]
        if self.empty_templates:
            lines.append("templates dropped (all noise): " + ", ".join(self.empty_templates))
        lines.append(f"wall priors: {len(self.wall_categories)} categories")
        if self.missing_wall_priors:
            lines.append("no wall prior (too few samples): " + ", ".join(self.missing_wall_priors))
        return "\n".join(lines)


def learn_from_graph(
    graph: RelationGraph,
    ratio: float = DEFAULT_RATIO,
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
    dpc: DpcParams = DpcParams(),
    min_samples: int = MIN_SAMPLES,
) -> tuple[PriorStore, LearnReport]:
    """Offline stage: spatial strengths, then templates for strong pairs and wall priors."""
    for c in graph.categories():
        if "|" in c:
            raise ValueError(f"category name {c!r} may not contain '|'")
    report = LearnReport(n_scenes=graph.n_scenes, skipped_scenes=graph.skipped)
    ssg = build_ssg(graph, ratio, seed, min_samples)
    report.measured_pairs = len(ssg.weights)
    report.unmeasured_pairs = sorted(ssg.excluded)
    templates = {}
    for (a, b), w in sorted(ssg.weights.items()):
        if w.d_value < epsilon:
            continue
        report.strong_pairs.append((a, b, w.d_value))
        for i, j in {(a, b), (b, a)}:
            samples = graph.samples(i, j)
            if len(samples) < 2:
                continue
            try:
                templates[(i, j)] = extract_template(samples, dpc, pair_seed(seed, i, j))
            except EmptyTemplateError:
                report.empty_templates.append(f"{i}|{j}")
    walls = {}
    for c, rows in sorted(graph.walls.items()):
        if len(rows) < 2:
            report.missing_wall_priors.append(c)
            continue
        walls[c] = extract_wall_prior(rows, dpc, pair_seed(seed, c, ""))
        report.wall_categories.append(c)
    params = {
        "ratio": ratio,
        "epsilon": epsilon,
        "seed": seed,
        "eta": dpc.eta,
        "rho_keep": dpc.rho_keep,
        "center_score_keep": dpc.center_score_keep,
        "max_points": dpc.max_points,
        "min_samples": min_samples,
    }
    store = PriorStore(dict(sorted(templates.items())), walls, ssg, params)
    store.validate()
    return store, report


def learn_priors(scenes: Sequence[Scene], **kwargs) -> tuple[PriorStore, LearnReport]:
    return learn_from_graph(build_relation_graph(scenes), **kwargs)
