import os
import sys
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
import pytest

# tests import modules the same way main.py does (from utils import cli)
SRC_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
if SRC_DIR not in sys.path:
    sys.path.insert(0, SRC_DIR)

from models.model_generator import generate  # noqa: E402
from models.params import GenParams  # noqa: E402
from utils.san_graph import SanGraph  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical runs (deselect with -m 'not slow')")


def build_san(n_social: int, social_links: Iterable[Tuple[int, int]],
              attributes: Iterable[Tuple[str, str]] = (),
              attribute_links: Iterable[Tuple[int, int]] = ()) -> SanGraph:
    """Frozen SanGraph from integer social ids and attribute ids in insertion order."""
    g = SanGraph()
    for u in range(n_social):
        g.add_social_node(f"u{u}")
    for attr_type, value in attributes:
        g.add_attribute_node(attr_type, value)
    for u, v in social_links:
        g.add_social_link(u, v)
    for u, a in attribute_links:
        g.add_attribute_link(u, a)
    return g.freeze()


def random_san(n_social: int, link_prob: float, n_attribute: int = 0, attr_prob: float = 0.0,
               seed: int = 0) -> SanGraph:
    rng = np.random.default_rng(seed)
    links = [(u, v) for u in range(n_social) for v in range(n_social) if u != v and rng.random() < link_prob]
    attrs = [("Employer" if a % 2 else "School", f"a{a}") for a in range(n_attribute)]
    alinks = [(u, a) for u in range(n_social) for a in range(n_attribute) if rng.random() < attr_prob]
    return build_san(n_social, links, attrs, alinks)


@pytest.fixture()
def six_user_san() -> SanGraph:
    """
    Six users and four attributes:

        u0 -> u1, u1 -> u0, u1 -> u2, u2 -> u3, u3 -> u1, u4 -> u3, u5 -> u4
        School:A {u0, u1}, School:B {u2}, Employer:C {u1, u2, u3}, City:D {u4, u5}
    """
    return build_san(
        6,
        [(0, 1), (1, 0), (1, 2), (2, 3), (3, 1), (4, 3), (5, 4)],
        [("School", "A"), ("School", "B"), ("Employer", "C"), ("City", "D")],
        [(0, 0), (1, 0), (2, 1), (1, 2), (2, 2), (3, 2), (4, 3), (5, 3)],
    )


@pytest.fixture()
def make_random_san() -> Callable[..., SanGraph]:
    return random_san


@pytest.fixture()
def make_generated() -> Callable[..., Tuple[SanGraph, object]]:
    def _generate(seed: int = 0, T: int = 200, **overrides):
        return generate(GenParams(T=T, seed=seed, **overrides))
    return _generate


@pytest.fixture()
def init_san() -> SanGraph:
    """The generator's initial complete SAN: five users, five attributes."""
    g, _ = generate(GenParams(T=0))
    return g


@pytest.fixture()
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path


# Ensure an event loop fixture is available for pytest-asyncio
@pytest.fixture
def event_loop():
    import asyncio

    loop = asyncio.new_event_loop()
    yield loop
    loop.close()


def brute_force_clustering(g: SanGraph, u: int, side: str = "social") -> Optional[float]:
    """Exhaustive pair check of the local clustering coefficient."""
    nbrs = sorted(g.neighbor_list(u)) if side == "social" else sorted(g.members(u))
    k = len(nbrs)
    if k < 2:
        return 0.0
    linked = sum(1 for v in nbrs for w in nbrs if v != w and g.has_social_link(v, w))
    return linked / (k * (k - 1))
