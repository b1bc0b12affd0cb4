import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import spearmanr

from apps.anonymity import AnonConfig, anonymity_compromise_probability, simulate_circuits
from apps.bounded import degree_bounded_view, symmetrized
from apps.fidelity import App, FidelityRow, fidelity_compare, sweep, write_sweep_csv
from apps.sybil import SybilConfig, SybilMode, attack_edge_count, sybil_admission
from apps.trials import AppResult, run_trials, sample_compromised
from tests.conftest import build_san, random_san


def _walk_oracle(view, compromised, walk_length):
    """P(first and last relay compromised) from powers of the random-walk transition matrix."""
    n = view.number_of_nodes()
    adjacency = np.zeros((n, n))
    for u, v in view.edges():
        adjacency[u, v] = adjacency[v, u] = 1.0
    degrees = adjacency.sum(axis=1)
    transition = np.divide(adjacency, degrees[:, None], out=np.zeros_like(adjacency), where=degrees[:, None] > 0)
    bad = np.zeros(n, dtype=bool)
    bad[compromised] = True
    start = (~bad & (degrees > 0)).astype(np.float64)
    start /= start.sum()
    first = (start @ transition) * bad
    last = first @ np.linalg.matrix_power(transition, walk_length - 1)
    return float(last[bad].sum())


def test_symmetrized_merges_reciprocal_pairs(six_user_san):
    view = symmetrized(six_user_san)
    assert view.number_of_nodes() == 6
    assert view.number_of_edges() == 6


def test_degree_bound_is_respected():
    g = random_san(60, 0.2, seed=1)
    view = degree_bounded_view(g, 5, seed=2)
    assert max(d for _, d in view.degree()) <= 5
    assert set(view.edges()) <= set(symmetrized(g).edges())
    assert sorted(view.edges()) == sorted(degree_bounded_view(g, 5, seed=2).edges())


def test_loose_bound_keeps_every_edge(six_user_san):
    view = degree_bounded_view(six_user_san, 100)
    assert sorted(view.edges()) == sorted(symmetrized(six_user_san).edges())
    with pytest.raises(ValueError):
        degree_bounded_view(six_user_san, 0)


def test_app_result_interval():
    single = AppResult.from_values([3.0])
    assert single.ci_low == single.ci_high == 3.0
    result = AppResult.from_values([1.0, 3.0])
    assert result.mean == 2.0
    assert result.ci_low < 2.0 < result.ci_high


def test_run_trials_ignores_worker_count():
    def trial(rng):
        return float(rng.random())

    assert run_trials(trial, 8, seed=4, workers=1) == run_trials(trial, 8, seed=4, workers=4)


def test_sample_compromised():
    rng = np.random.default_rng(0)
    picked = sample_compromised(10, 4, rng)
    assert len(set(picked.tolist())) == 4
    assert len(sample_compromised(10, 0, rng)) == 0
    with pytest.raises(ValueError):
        sample_compromised(3, 4, rng)


def test_sybil_admission_with_no_compromised_nodes(six_user_san):
    assert sybil_admission(six_user_san, SybilConfig(compromised_count=0)).mean == 0.0
    routes = SybilConfig(compromised_count=0, mode=SybilMode.ROUTES, trials=2)
    assert sybil_admission(six_user_san, routes).mean == 0.0


def test_sybil_bound_counts_attack_edges(six_user_san):
    view = symmetrized(six_user_san)
    assert attack_edge_count(view, np.array([1])) == 3
    everyone = SybilConfig(compromised_count=6, w=4, trials=3)
    assert sybil_admission(six_user_san, everyone).mean == 6 * 4


def test_sybil_routes_mode_is_bounded_by_instances():
    g = random_san(40, 0.1, seed=7)
    cfg = SybilConfig(compromised_count=5, mode=SybilMode.ROUTES, w=3, route_instances=4, trials=3, seed=1)
    result = sybil_admission(g, cfg)
    assert 0.0 <= result.mean <= cfg.w * cfg.route_instances
    assert result == sybil_admission(g, cfg)


def test_too_many_compromised_nodes(six_user_san):
    with pytest.raises(ValueError):
        sybil_admission(six_user_san, SybilConfig(compromised_count=7))
    with pytest.raises(ValueError):
        anonymity_compromise_probability(six_user_san, AnonConfig(compromised_count=7))
    with pytest.raises(ValidationError):
        AnonConfig(walk_length=1)


def test_anonymity_with_no_compromised_nodes(six_user_san):
    result = anonymity_compromise_probability(six_user_san, AnonConfig(compromised_count=0, circuits=50, trials=2))
    assert result.mean == 0.0


def test_circuits_match_matrix_oracle():
    g = random_san(20, 0.2, seed=3)
    view = degree_bounded_view(g, 100)
    compromised = np.array([1, 4, 9, 15])
    rate, isolated = simulate_circuits(view, compromised, 4, 40000, np.random.default_rng(5))
    expected = _walk_oracle(view, compromised, 4)
    assert rate == pytest.approx(expected, abs=0.01)
    assert isolated == 0


def test_isolated_initiators_are_skipped():
    g = build_san(4, [(0, 1)])
    view = degree_bounded_view(g, 10)
    # only u1 has an edge; its circuits alternate u1, u0, u1, u0
    rate, isolated = simulate_circuits(view, np.array([0]), 3, 100, np.random.default_rng(0))
    assert rate == 1.0
    assert 0 < isolated < 100


def test_sweep_and_fidelity_against_itself(six_user_san):
    cfg = SybilConfig(trials=3, seed=2)
    results = sweep(six_user_san, App.SYBIL, cfg, [0, 2, 4])
    assert results[0].mean == 0.0
    assert results[2].mean >= results[0].mean
    rows = fidelity_compare(six_user_san, six_user_san, App.ANONYMITY, [0, 3],
                            AnonConfig(circuits=100, trials=2))
    assert [row.relative_error for row in rows] == [0.0, 0.0]


def test_relative_error_with_zero_reference():
    zero, one = AppResult.from_values([0.0]), AppResult.from_values([1.0])
    assert FidelityRow(1, zero, one).relative_error is None
    assert FidelityRow(1, one, AppResult.from_values([1.5])).relative_error == pytest.approx(0.5)


def test_write_sweep_csv(tmp_path):
    results = {"real": [AppResult.from_values([0.0]), AppResult.from_values([2.0])]}
    path = write_sweep_csv(tmp_path / "sweep.csv", results, [0, 5], {"seed": "1"})
    assert path.read_text().splitlines() == [
        "# seed=1",
        "compromised,metric_mean,metric_ci_low,metric_ci_high,graph_id",
        "0,0.0,0.0,0.0,real",
        "5,2.0,2.0,2.0,real",
    ]


@pytest.mark.slow
@pytest.mark.parametrize("app, cfg", [
    (App.SYBIL, SybilConfig(trials=10)),
    (App.ANONYMITY, AnonConfig(circuits=1000, trials=10)),
])
def test_sweep_grows_with_compromised_nodes(app, cfg):
    g = random_san(300, 0.02, seed=8)
    points = list(range(0, 100, 10))
    means = np.mean([
        [result.mean for result in sweep(g, app, cfg.model_copy(update={"seed": seed}), points)]
        for seed in range(10)
    ], axis=0)
    correlation, _ = spearmanr(points, means)
    assert correlation > 0.95
