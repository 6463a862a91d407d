import json
from importlib.resources import files

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from layoutsynth.geometry import Polygon
from layoutsynth.priors import learn_priors
from layoutsynth.synthetic import generate_synthetic_corpus

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def preset(name: str) -> dict:
    return json.loads(files("layoutsynth").joinpath("specs", f"{name}.json").read_text())


@pytest.fixture
def unit_square() -> Polygon:
    return Polygon.from_points([[0, 0], [1, 0], [1, 1], [0, 1]])


@pytest.fixture(scope="session")
def bedroom_corpus():
    return generate_synthetic_corpus(preset("bedroom"), 1000, seed=0)


@pytest.fixture(scope="session")
def bedroom_priors(bedroom_corpus):
    store, _ = learn_priors(bedroom_corpus.scenes, seed=0)
    return store


@pytest.fixture(scope="session")
def living_room_priors():
    corpus = generate_synthetic_corpus(preset("living_room"), 1000, seed=0)
    store, _ = learn_priors(corpus.scenes, seed=0)
    return store


def rect_room(w: float, d: float) -> Polygon:
    return Polygon.from_points([[0, 0], [w, 0], [w, d], [0, d]])


def random_convex_polygon(rng: np.random.Generator, n: int = 8) -> Polygon:
    from scipy.spatial import ConvexHull

    pts = rng.uniform(-1, 1, size=(n, 2))
    hull = ConvexHull(pts)
    return Polygon.from_points(pts[hull.vertices])


def single_mode_wall(d_wall: float = 0.0, theta_wall: float = 0.0):
    from layoutsynth.priors import Multinomial, WallPrior

    return WallPrior(Multinomial([d_wall], [1.0]), Multinomial([theta_wall], [1.0]))


def make_store(templates: dict, walls: dict, strengths: dict):
    """Hand-built priors: ``strengths`` maps (a, b) to a d-value."""
    from layoutsynth.corpus import pair_key
    from layoutsynth.csr import PairStrength, SpatialStrengthGraph
    from layoutsynth.priors import PriorStore

    ssg = SpatialStrengthGraph({pair_key(*k): PairStrength(d, 1000, 100) for k, d in strengths.items()})
    return PriorStore(dict(templates), dict(walls), ssg, {"epsilon": 1.628})


def two_point_template(p1, p2, w1: float):
    from layoutsynth.priors import Template

    return Template(np.array([p1, p2], dtype=float), [w1, 1.0 - w1], (0, 1))


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Call with (number, ok, detail); records one summary line per criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
