import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import truncnorm

from inference.fitting import compare_fits, fit_discrete_lognormal, fit_powerlaw, fit_yule_simon
from metrics.clustering import clustering_exact
from metrics.structure import Side
from models.attachment import (
    AttachmentSampler,
    NoCandidate,
    attachment_select,
    attachment_weights,
    effective_exponents,
)
from models.baseline import ZhelParams, generate_baseline_zhel
from models.closure import closure_distribution, closure_select, eligible_distribution, two_hop_neighborhood
from models.model_generator import (
    InvalidDegree,
    SanGenerator,
    attribute_link_step,
    generate,
    sample_attribute_degree,
    sample_lifetime,
    sample_sleep,
)
from models.params import (
    PRESETS,
    Attachment,
    Closure,
    GenParams,
    TruncatedNormal,
    attribute_powerlaw_target,
    outdegree_lognormal_target,
    sample_outdegree_law,
)
from models.sampling import FenwickSampler
from tests.conftest import build_san
from utils.san_graph import EventKind, LinkOrigin, SanGraph, replay


# ------------------------------------------------------------------ params
def test_truncated_normal_moments_match_scipy():
    law = TruncatedNormal(1.0, 2.0)
    mean, var = truncnorm.stats(law.gamma, np.inf, loc=1.0, scale=2.0, moments="mv")
    assert law.mean == pytest.approx(float(mean), rel=1e-9)
    assert law.variance == pytest.approx(float(var), rel=1e-9)


def test_truncated_normal_far_from_zero_is_plain_normal():
    law = TruncatedNormal(10.0, 2.0)
    assert law.mean == pytest.approx(10.0, abs=1e-5)
    assert law.variance == pytest.approx(4.0, rel=1e-4)


def test_truncated_normal_samples_are_non_negative():
    samples = TruncatedNormal(0.0, 1.0).sample(np.random.default_rng(0), size=2000)
    assert samples.min() >= 0


def test_targets():
    assert attribute_powerlaw_target(0.2) == pytest.approx(2.25)
    assert attribute_powerlaw_target(0.5) == pytest.approx(3.0)
    assert attribute_powerlaw_target(0.8) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        attribute_powerlaw_target(1.0)
    mean, var = outdegree_lognormal_target(GenParams(mu_l=10, sigma_l=2, m_s=2))
    assert mean == pytest.approx(5.0, abs=1e-4)
    assert var == pytest.approx(1.0, rel=1e-3)


def test_params_validation():
    with pytest.raises(ValidationError):
        GenParams(p=1.5)
    with pytest.raises(ValidationError):
        GenParams(attribute_types=("City", "City"))
    with pytest.raises(ValidationError):
        GenParams(type_weights={"City": -1.0})
    with pytest.raises(ValidationError):
        GenParams(unknown=1)
    assert GenParams(**PRESETS["pa_only"]).attachment == Attachment.PA
    assert GenParams(**PRESETS["rr_only"]).closure == Closure.RR


# ---------------------------------------------------------------- sampling
def test_fenwick_totals_and_updates():
    sampler = FenwickSampler()
    for w in [1.0, 0.0, 3.0, 2.0, 4.0]:
        sampler.append(w)
    assert sampler.total == pytest.approx(10.0)
    sampler.update(1, 5.0)
    assert sampler.total == pytest.approx(15.0)
    assert sampler.find(0.5) == 0
    assert sampler.find(1.0) == 1
    assert sampler.find(14.99) == 4
    with pytest.raises(ValueError):
        sampler.append(-1.0)


def test_fenwick_sampling_frequencies():
    sampler = FenwickSampler()
    weights = np.array([1.0, 2.0, 0.0, 7.0])
    for w in weights:
        sampler.append(float(w))
    rng = np.random.default_rng(1)
    draws = np.bincount([sampler.sample(rng) for _ in range(20000)], minlength=4)
    assert draws[2] == 0
    assert np.allclose(draws / draws.sum(), weights / weights.sum(), atol=0.015)


# -------------------------------------------------------------- attachment
def test_effective_exponents():
    assert effective_exponents(Attachment.PA, 3.0, 9.0) == (1.0, 0.0)
    assert effective_exponents(Attachment.UNIFORM, 3.0, 9.0) == (0.0, 0.0)
    assert effective_exponents(Attachment.LAPA, 3.0, 9.0) == (3.0, 9.0)


def test_pa_weights_are_indegree_plus_one(six_user_san):
    candidates, weights = attachment_weights(six_user_san, 5, Attachment.PA, 1.0, 0.0)
    assert list(candidates) == [0, 1, 2, 3]
    assert list(weights) == [2.0, 3.0, 2.0, 3.0]


def test_lapa_and_papa_weights(six_user_san):
    # u1 shares School:A with u0 and Employer:C with u2 and u3
    candidates, lapa = attachment_weights(six_user_san, 1, Attachment.LAPA, 1.0, 10.0)
    assert list(candidates) == [3, 4, 5]
    assert list(lapa) == [3.0 * 11.0, 2.0, 1.0]
    _, papa = attachment_weights(six_user_san, 1, Attachment.PAPA, 1.0, 2.0)
    assert list(papa) == [3.0 * 2.0, 2.0, 1.0]


def test_type_weights_scale_shared_count(six_user_san):
    _, weights = attachment_weights(six_user_san, 1, Attachment.LAPA, 1.0, 10.0, {"Employer": 0.5})
    assert weights[0] == pytest.approx(3.0 * 6.0)


def test_attachment_select_without_candidates():
    g = build_san(3, [(0, 1), (0, 2)])
    with pytest.raises(NoCandidate):
        attachment_select(g, 0, GenParams(), np.random.default_rng(0))


@pytest.mark.parametrize("attachment,beta", [(Attachment.LAPA, 10.0), (Attachment.PAPA, 2.0), (Attachment.PA, 0.0)])
def test_sampler_matches_exact_weights(six_user_san, attachment, beta):
    params = GenParams(attachment=attachment, alpha=1.0, beta=beta)
    sampler = AttachmentSampler(six_user_san, params)
    rng = np.random.default_rng(7)
    draws = np.bincount([sampler.select(0, rng) for _ in range(20000)], minlength=6)
    candidates, weights = attachment_weights(six_user_san, 0, attachment, 1.0, beta)
    expected = np.zeros(6)
    expected[candidates] = weights / weights.sum()
    assert draws[0] == 0 and draws[1] == 0
    assert np.allclose(draws / draws.sum(), expected, atol=0.015)


# ----------------------------------------------------------------- closure
def test_closure_distributions_sum_to_one(six_user_san):
    for closure in Closure:
        probs = closure_distribution(six_user_san, 1, closure)
        assert sum(probs.values()) == pytest.approx(1.0)


def test_rr_first_hop_is_social_only(six_user_san):
    # u4: social neighbors u3, u5
    probs = closure_distribution(six_user_san, 4, Closure.RR)
    assert probs[1] == pytest.approx(0.5 * 1 / 3)
    assert probs[4] == pytest.approx(0.5 * 1 / 3 + 0.5 * 1.0)
    rrsan_without_focal = closure_distribution(six_user_san, 4, Closure.RRSAN, fc=0.0)
    assert rrsan_without_focal == pytest.approx(probs)


def test_rrsan_adds_attribute_hop(six_user_san):
    # u4: social neighbors u3, u5 and City:D {u4, u5}; each first hop has mass 1/3
    probs = closure_distribution(six_user_san, 4, Closure.RRSAN, fc=1.0)
    assert probs[5] == pytest.approx(1 / 6)
    assert probs[4] == pytest.approx(1 / 9 + 1 / 3 + 1 / 6)


def test_baseline_is_uniform_over_two_hops(six_user_san):
    reach = two_hop_neighborhood(six_user_san, 5)
    assert reach == {3, 4}
    assert closure_distribution(six_user_san, 5, Closure.BASELINE) == {3: 0.5, 4: 0.5}


def test_eligible_distribution_excludes_targets(six_user_san):
    probs = eligible_distribution(six_user_san, 4, Closure.RRSAN)
    assert 3 not in probs and 4 not in probs
    assert sum(probs.values()) == pytest.approx(1.0)


def test_closure_select_on_isolated_node():
    g = build_san(3, [(1, 2)])
    with pytest.raises(NoCandidate):
        closure_select(g, 0, GenParams(closure=Closure.RR), np.random.default_rng(0))


def test_closure_select_never_repeats_a_link(six_user_san):
    rng = np.random.default_rng(3)
    drawn = set()
    for _ in range(200):
        try:
            drawn.add(closure_select(six_user_san, 4, GenParams(), rng))
        except NoCandidate:
            continue
    assert drawn and drawn <= {1, 2, 5}


# ------------------------------------------------------------- node clocks
def test_sleep_and_attribute_degree():
    params = GenParams(m_s=2.0)
    rng = np.random.default_rng(0)
    sleeps = [sample_sleep(params, 4, rng) for _ in range(20000)]
    assert np.mean(sleeps) == pytest.approx(0.5, rel=0.05)
    with pytest.raises(InvalidDegree):
        sample_sleep(params, 0, rng)
    assert min(sample_attribute_degree(GenParams(mu_a=-3.0), rng) for _ in range(100)) == 1


def test_lifetimes_are_truncated_at_zero():
    params = GenParams(mu_l=0.5, sigma_l=1.0)
    rng = np.random.default_rng(3)
    lifetimes = np.array([sample_lifetime(params, rng) for _ in range(5000)])
    assert lifetimes.min() >= 0.0
    assert lifetimes.mean() == pytest.approx(params.lifetime().mean, rel=0.05)


def test_attribute_link_step_creates_or_reuses():
    g = SanGraph()
    u = g.add_social_node()
    rng = np.random.default_rng(0)
    first = attribute_link_step(g, u, rng, p=0.0)
    assert g.n_attribute == 1 and first in g.attribute_set(u)

    v = g.add_social_node()
    reused = attribute_link_step(g, v, rng, p=0.0)
    assert reused == first
    # v holds every populated attribute, so the next step must create one
    fresh = attribute_link_step(g, v, rng, p=0.0)
    assert fresh != first and g.n_attribute == 2

    w = g.add_social_node()
    created = attribute_link_step(g, w, rng, p=1.0, attribute_types=("City",))
    assert g.attribute_type(created) == "City" and g.n_attribute == 3


# --------------------------------------------------------------- generator
def test_zero_steps_give_the_initial_complete_san(init_san):
    assert init_san.n_social == 5 and init_san.n_social_links == 20
    assert init_san.n_attribute == 5 and init_san.n_attribute_links == 25
    init_san.validate()


def test_generation_is_deterministic(make_generated):
    g1, log1 = make_generated(seed=42, T=80)
    g2, log2 = make_generated(seed=42, T=80)
    g3, _ = make_generated(seed=43, T=80)
    assert log1 == log2
    assert g1.structure_key() == g2.structure_key()
    assert g1.structure_key() != g3.structure_key()


def test_event_log_replays_to_the_graph(make_generated):
    g, log = make_generated(seed=5, T=150)
    times = [event.t for event in log]
    assert times == sorted(times)
    assert replay(log).structure_key() == g.structure_key()
    g.validate()


def test_every_arrival_gets_one_first_link(make_generated):
    g, log = make_generated(seed=6, T=100)
    firsts = [e for e in log if e.kind == EventKind.SLINK and e.origin == LinkOrigin.FIRST]
    assert len(firsts) == 100
    assert len({e.args[0] for e in firsts}) == 100
    assert all(g.attribute_degrees()[5:] >= 1)


def test_initial_nodes_never_wake(make_generated):
    _, log = make_generated(seed=7, T=100)
    init_labels = {str(i) for i in range(5)}
    closures = [e for e in log if e.origin == LinkOrigin.CLOSURE]
    assert closures
    assert not any(e.args[0] in init_labels for e in closures)


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_presets_generate_valid_graphs(preset):
    g, _ = generate(GenParams(T=60, seed=1, **PRESETS[preset]))
    g.validate()
    assert g.n_social == 65


def test_lapa_heuristic_generates(make_generated):
    g, _ = make_generated(seed=2, T=60, lapa_heuristic=True)
    g.validate()


# ---------------------------------------------------------------- baseline
def test_baseline_is_deterministic_and_valid():
    params = ZhelParams(T=120)
    g1, log1 = generate_baseline_zhel(params, seed=3)
    g2, log2 = generate_baseline_zhel(params, seed=3)
    assert log1 == log2
    g1.validate()
    assert g1.n_social == 125
    assert replay(log1).structure_key() == g1.structure_key()
    assert params.powerlaw_outdegree_exponent() == pytest.approx(3.0)


# ------------------------------------------------------- analytic targets
def _completed_outdegrees(generator: SanGenerator, horizon: float) -> np.ndarray:
    return np.array([
        generator.graph.out_degree(u) for u, state in generator.states.items() if state.death < horizon
    ])


@pytest.mark.slow
def test_log_outdegree_follows_the_yule_clock():
    params = GenParams(T=3000, mu_l=3.5, sigma_l=1.0, m_s=1.0, beta=10.0, seed=11)
    generator = SanGenerator(params)
    generator.run()
    fitted = fit_discrete_lognormal(_completed_outdegrees(generator, 2990.0)).params
    reference = fit_discrete_lognormal(sample_outdegree_law(params, 20000, np.random.default_rng(5))).params
    target_mean, target_variance = outdegree_lognormal_target(params)

    assert fitted["mu"] == pytest.approx(target_mean - np.euler_gamma, abs=0.25)
    assert fitted["mu"] == pytest.approx(reference["mu"], abs=0.15)
    assert fitted["sigma"] ** 2 == pytest.approx(reference["sigma"] ** 2, rel=0.15)
    assert reference["sigma"] ** 2 > target_variance


@pytest.mark.slow
def test_lifetime_location_shifts_log_outdegree():
    fitted = {}
    for mu_l in (1.5, 3.5):
        generator = SanGenerator(GenParams(T=2000, mu_l=mu_l, sigma_l=1.0, m_s=1.0, beta=10.0, seed=11))
        generator.run()
        fitted[mu_l] = fit_discrete_lognormal(_completed_outdegrees(generator, 1990.0)).params["mu"]
    assert 1.4 <= fitted[3.5] - fitted[1.5] <= 2.5


@pytest.mark.slow
def test_attribute_degree_power_law():
    tail_fits = []
    for p in (0.2, 0.5, 0.8):
        g, _ = generate(GenParams(T=20000, p=p, mu_l=0.5, sigma_l=0.5, seed=13))
        sizes = g.member_counts()
        sizes = sizes[sizes >= 1]
        assert fit_yule_simon(sizes).params["alpha"] == pytest.approx(attribute_powerlaw_target(p), abs=0.2)
        tail_fits.append(fit_powerlaw(sizes).params["alpha"])
    # a pure power law underestimates steep tails but keeps their order
    assert tail_fits == sorted(tail_fits)


@pytest.mark.slow
def test_attribute_weight_pushes_indegree_toward_lognormal():
    ratios = {}
    for attachment in (Attachment.PA, Attachment.LAPA):
        ratios[attachment] = np.mean([
            compare_fits(generate(GenParams(T=4000, attachment=attachment, beta=200.0, seed=seed))[0].in_degrees())
            .normalized_ratio
            for seed in (3, 4)
        ])
    assert ratios[Attachment.LAPA] > ratios[Attachment.PA]


@pytest.mark.slow
def test_focal_closure_raises_attribute_clustering():
    mean_clustering = {}
    for fc in (0.0, 1.0):
        mean_clustering[fc] = np.mean([
            clustering_exact(generate(GenParams(T=800, fc=fc, seed=seed))[0], side=Side.ATTRIBUTE)
            for seed in range(4)
        ])
    assert mean_clustering[1.0] > mean_clustering[0.0]
