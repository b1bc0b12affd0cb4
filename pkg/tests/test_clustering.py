import numpy as np
import pytest
from pydantic import ValidationError

from metrics.clustering import (
    ApproxConfig,
    clustering_approx,
    clustering_by_degree,
    clustering_exact,
    clustering_values,
    per_attribute_type_clustering,
)
from metrics.structure import EmptyNodeSet, Side
from tests.conftest import brute_force_clustering, build_san, random_san


def test_social_values(six_user_san):
    values = clustering_values(six_user_san, Side.SOCIAL)
    assert values == pytest.approx([0.0, 1 / 6, 0.5, 1 / 6, 0.0, 0.0])
    assert clustering_exact(six_user_san) == pytest.approx(5 / 36)


def test_attribute_values(six_user_san):
    # A: u0 <-> u1, B: single member, C: u1 -> u2 -> u3 -> u1, D: u5 -> u4
    values = clustering_values(six_user_san, Side.ATTRIBUTE)
    assert values == pytest.approx([1.0, 0.0, 0.5, 0.5])
    assert per_attribute_type_clustering(six_user_san) == pytest.approx(
        {"School": 0.5, "Employer": 0.5, "City": 0.5})


def test_complete_san_clusters_fully(init_san):
    assert clustering_exact(init_san) == 1.0
    assert clustering_exact(init_san, side=Side.ATTRIBUTE) == 1.0


@pytest.mark.parametrize("side", ["social", "attribute"])
def test_matches_brute_force(side):
    g = random_san(50, 0.1, 8, 0.3, seed=12)
    values = clustering_values(g, Side(side))
    size = g.n_social if side == "social" else g.n_attribute
    for x in range(size):
        assert values[x] == pytest.approx(brute_force_clustering(g, x, side))


def test_node_set_restriction(six_user_san):
    assert clustering_exact(six_user_san, [1, 2]) == pytest.approx((1 / 6 + 0.5) / 2)
    with pytest.raises(EmptyNodeSet):
        clustering_exact(six_user_san, [])
    with pytest.raises(EmptyNodeSet):
        clustering_exact(six_user_san, [9])


def test_low_degree_nodes_count_as_zero():
    g = build_san(3, [(0, 1)])
    assert clustering_exact(g) == 0.0


def test_approx_sample_count():
    assert ApproxConfig().samples == int(np.ceil(np.log(200) / (2 * 0.002 ** 2)))
    assert ApproxConfig(epsilon=0.1, nu=2).samples == int(np.ceil(np.log(4) / 0.02))
    with pytest.raises(ValidationError):
        ApproxConfig(nu=1.0)


def test_approx_within_epsilon():
    g = random_san(80, 0.1, 10, 0.3, seed=8)
    config = ApproxConfig(epsilon=0.02, nu=100, seed=1)
    for side in Side:
        exact = clustering_exact(g, side=side)
        assert abs(clustering_approx(g, config=config, side=side) - exact) <= 2 * config.epsilon


def test_approx_is_deterministic_per_seed(six_user_san):
    config = ApproxConfig(epsilon=0.05, seed=3)
    assert clustering_approx(six_user_san, config=config) == clustering_approx(six_user_san, config=config)


def test_approx_of_complete_san_is_exact(init_san):
    assert clustering_approx(init_san, config=ApproxConfig(epsilon=0.1)) == 1.0


def test_by_degree(six_user_san):
    # neighbor degrees: u0 1, u1 3, u2 2, u3 3, u4 2, u5 1
    curve = clustering_by_degree(six_user_san)
    assert curve == pytest.approx({1: 0.0, 2: 0.25, 3: 1 / 6})
    attribute_curve = clustering_by_degree(six_user_san, Side.ATTRIBUTE)
    assert attribute_curve == pytest.approx({1: 0.0, 2: 0.75, 3: 0.5})


def test_by_degree_approx_keeps_degree_classes(six_user_san):
    approx = clustering_by_degree(six_user_san, Side.SOCIAL, ApproxConfig(epsilon=0.05))
    assert set(approx) == {1, 2, 3}
    assert approx[1] == 0.0


@pytest.mark.slow
def test_approx_error_bound_holds_over_repeated_runs(make_generated):
    g, _ = make_generated(T=5000, seed=9)
    exact = clustering_exact(g)
    runs = 200
    failures = sum(
        abs(clustering_approx(g, config=ApproxConfig(epsilon=0.01, nu=100.0, seed=seed)) - exact) > 0.01
        for seed in range(runs)
    )
    assert failures / runs <= 0.01 + 3 * np.sqrt(0.01 * 0.99 / runs)
