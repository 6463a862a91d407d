"""Spatial relation strength via an angle-based test for complete spatial randomness.

For a planar point set, each point contributes the counter-clockwise angle
from the direction of its nearest neighbour to the direction of its second
nearest neighbour.  Under a homogeneous Poisson process both directions are
independent and isotropic, so this angle is Uniform[0, 2*pi).  The d-value is
the sqrt(m)-scaled one-sample Kolmogorov-Smirnov distance of the m observed
angles from that uniform law.  Values above ~1.628 (the asymptotic 1%
critical value) reject randomness.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .corpus import RelationGraph, pair_key

DEFAULT_EPSILON = 1.628
DEFAULT_RATIO = 0.10
MIN_SAMPLES = 30
DUPLICATE_JITTER = 1e-9
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_BRUTE_FORCE_MAX = 2048


class InsufficientDataError(ValueError):
    pass


def _separate_duplicates(points: np.ndarray) -> np.ndarray:
    _, inverse, counts = np.unique(points, axis=0, return_inverse=True, return_counts=True)
    if counts.max() == 1:
        return points
    inverse = inverse.ravel()
    out = points.copy()
    seen = np.zeros(len(counts), dtype=int)
    for k, g in enumerate(inverse):
        r = seen[g]
        seen[g] += 1
        if r:
            a = r * _GOLDEN_ANGLE
            out[k] += DUPLICATE_JITTER * np.array([math.cos(a), math.sin(a)])
    return out


def _two_nearest(p: np.ndarray) -> np.ndarray:
    """Indices (m, 2) of first and second nearest neighbours; distance ties go to the lower index."""
    if len(p) <= _BRUTE_FORCE_MAX:
        d = np.hypot(p[:, None, 0] - p[None, :, 0], p[:, None, 1] - p[None, :, 1])
        np.fill_diagonal(d, np.inf)
        return np.argsort(d, axis=1, kind="stable")[:, :2]
    dist, idx = cKDTree(p).query(p, k=3)
    nb, nd = idx[:, 1:], dist[:, 1:]
    swap = (nd[:, 0] == nd[:, 1]) & (nb[:, 0] > nb[:, 1])
    nb[swap] = nb[swap][:, ::-1]
    return nb


def nn_angles(points) -> np.ndarray:
    """Counter-clockwise angle, in [0, 2*pi), from each point's 1st to its 2nd nearest neighbour."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(p) < 3:
        raise InsufficientDataError(f"need at least 3 points, got {len(p)}")
    p = _separate_duplicates(p)
    nb = _two_nearest(p)
    v1 = p[nb[:, 0]] - p
    v2 = p[nb[:, 1]] - p
    a = np.arctan2(v2[:, 1], v2[:, 0]) - np.arctan2(v1[:, 1], v1[:, 0])
    a = np.mod(a, 2 * math.pi)
    a[a >= 2 * math.pi] = 0.0
    return a


def ks_uniform_d_batch(angles: np.ndarray) -> np.ndarray:
    """Row-wise d-values for a (trials, m) array of angles."""
    u = np.sort(np.asarray(angles, dtype=float), axis=-1) / (2 * math.pi)
    m = u.shape[-1]
    i = np.arange(1, m + 1)
    d_plus = (i / m - u).max(axis=-1)
    d_minus = (u - (i - 1) / m).max(axis=-1)
    return math.sqrt(m) * np.maximum(d_plus, d_minus)


def ks_uniform_d(angles) -> float:
    """sqrt(m) * sup |EDF - CDF| against Uniform[0, 2*pi)."""
    a = np.asarray(angles, dtype=float).ravel()
    if a.size == 0:
        raise InsufficientDataError("no angles")
    return float(ks_uniform_d_batch(a[None, :])[0])


@dataclass
class CsrResult:
    d_value: float
    m: int
    angles_used: np.ndarray = field(repr=False)
    n_samples: int = 0


def pair_d_value(
    samples,
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
    min_samples: int = MIN_SAMPLES,
) -> CsrResult:
    """d-value of one category pair from its relation samples.

    ``samples`` is an (n, 4) array of ``(p_x, p_y, p_z, p_theta)``.  A seeded
    subsample of ``ceil(ratio * n)`` rows (thinning weakens the dependence
    between neighbouring angles) is projected to ``(p_x, p_z)`` and tested.
    """
    s = np.asarray(samples, dtype=float).reshape(-1, 4)
    n = len(s)
    m = math.ceil(ratio * n)
    if m < max(min_samples, 3):
        raise InsufficientDataError(f"{n} samples give m={m} < {max(min_samples, 3)}")
    rng = np.random.default_rng(seed)
    pick = rng.choice(n, size=m, replace=False)
    angles = nn_angles(s[pick][:, [0, 2]])
    return CsrResult(ks_uniform_d(angles), m, angles, n)


@dataclass(frozen=True)
class PairStrength:
    d_value: float
    n_samples: int
    m_used: int
    cooccurrence: int = 0


@dataclass
class SpatialStrengthGraph:
    """Unordered category pair -> d-value.

    Keys are lexicographically sorted pairs.  A missing pair means it was
    never measured (too few samples), not that its strength is zero;
    ``excluded`` records the sample counts of such pairs.
    """

    weights: dict[tuple[str, str], PairStrength] = field(default_factory=dict)
    excluded: dict[tuple[str, str], int] = field(default_factory=dict)

    def d(self, a: str, b: str):
        w = self.weights.get(pair_key(a, b))
        return None if w is None else w.d_value

    def adjacent(self, a: str, b: str, epsilon: float = DEFAULT_EPSILON) -> bool:
        d = self.d(a, b)
        return d is not None and d >= epsilon

    def to_list(self) -> list[dict]:
        return [
            {
                "pair": list(k),
                "d_value": w.d_value,
                "n_samples": w.n_samples,
                "m_used": w.m_used,
                "cooccurrence": w.cooccurrence,
            }
            for k, w in sorted(self.weights.items())
        ]

    @classmethod
    def from_list(cls, rows: list[dict]) -> "SpatialStrengthGraph":
        weights = {}
        for r in rows:
            a, b = r["pair"]
            w = PairStrength(
                float(r["d_value"]), int(r["n_samples"]), int(r["m_used"]), int(r.get("cooccurrence", 0))
            )
            if w.d_value < 0:
                raise ValueError(f"negative d-value for pair {a}|{b}")
            weights[pair_key(a, b)] = w
        return cls(weights)


def pair_seed(seed: int, a: str, b: str) -> int:
    """Per-pair seed, independent of which other pairs exist."""
    return int(np.random.SeedSequence([seed, zlib.crc32(f"{a}|{b}".encode())]).generate_state(1)[0])


def build_ssg(
    graph: RelationGraph,
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
    min_samples: int = MIN_SAMPLES,
) -> SpatialStrengthGraph:
    """d-value for every unordered pair with enough samples.

    The pair ``{a, b}`` (``a <= b``) is measured on the samples of ``b`` in
    ``a``'s frame; for ``a == b`` that list already holds both orderings.
    """
    ssg = SpatialStrengthGraph()
    keys = sorted({pair_key(i, j) for i, j in graph.pairs})
    for a, b in keys:
        samples = graph.samples(a, b)
        try:
            res = pair_d_value(samples, ratio, pair_seed(seed, a, b), min_samples)
        except InsufficientDataError:
            ssg.excluded[(a, b)] = len(samples)
            continue
        ssg.weights[(a, b)] = PairStrength(
            res.d_value, res.n_samples, res.m, graph.cooccurrence.get((a, b), 0)
        )
    return ssg


SSG_CSV_COLUMNS = ["pair", "n_samples", "m_used", "cooccurrence", "d_value", "above_threshold"]


def ssg_report_rows(ssg: SpatialStrengthGraph, epsilon: float = DEFAULT_EPSILON) -> list[dict]:
    rows = [
        {
            "pair": f"{a}|{b}",
            "n_samples": w.n_samples,
            "m_used": w.m_used,
            "cooccurrence": w.cooccurrence,
            "d_value": f"{w.d_value:.6f}",
            "above_threshold": str(w.d_value >= epsilon).lower(),
        }
        for (a, b), w in ssg.weights.items()
    ]
    rows.sort(key=lambda r: (-float(r["d_value"]), r["pair"]))
    return rows


def write_ssg_csv(ssg: SpatialStrengthGraph, path, epsilon: float = DEFAULT_EPSILON) -> int:
    rows = ssg_report_rows(ssg, epsilon)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SSG_CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    return len(rows)
