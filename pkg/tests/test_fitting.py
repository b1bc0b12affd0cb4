import numpy as np
import pytest
from scipy.stats import yulesimon

from inference.fitting import (
    DegenerateSample,
    Family,
    Preference,
    compare_fits,
    fit_discrete_lognormal,
    MIN_POWERLAW_TAIL,
    fit_powerlaw,
    fit_yule_simon,
    lognormal_log_pmf,
    powerlaw_log_pmf,
)


def _draw(log_pmf, support, n, seed):
    probs = np.exp(log_pmf(support))
    probs /= probs.sum()
    return np.random.default_rng(seed).choice(support, size=n, p=probs)


@pytest.fixture(scope="module")
def lognormal_sample():
    support = np.arange(1, 5000)
    return _draw(lambda k: lognormal_log_pmf(k, 2.0, 0.5), support, 5000, seed=1)


@pytest.fixture(scope="module")
def powerlaw_sample():
    support = np.arange(1, 100000)
    return _draw(lambda k: powerlaw_log_pmf(k, 2.5), support, 5000, seed=2)


def test_lognormal_pmf_is_normalized():
    k = np.arange(1, 2000)
    assert np.exp(lognormal_log_pmf(k, 1.0, 0.5)).sum() == pytest.approx(1.0, abs=1e-6)
    shifted = np.arange(3, 2000)
    assert np.exp(lognormal_log_pmf(shifted, 1.0, 0.5, xmin=3)).sum() == pytest.approx(1.0, abs=1e-6)


def test_lognormal_recovers_parameters(lognormal_sample):
    fit = fit_discrete_lognormal(lognormal_sample)
    assert fit.family == Family.LOGNORMAL
    assert fit.params["mu"] == pytest.approx(2.0, abs=0.05)
    assert fit.params["sigma"] == pytest.approx(0.5, abs=0.05)
    assert fit.n == len(lognormal_sample)
    assert 0.0 <= fit.gof < 0.05


def test_powerlaw_recovers_exponent(powerlaw_sample):
    fit = fit_powerlaw(powerlaw_sample, xmin=1)
    assert fit.params["alpha"] == pytest.approx(2.5, abs=0.06)
    assert fit.xmin == 1


def test_powerlaw_chooses_xmin(powerlaw_sample):
    fit = fit_powerlaw(powerlaw_sample)
    assert fit.n >= MIN_POWERLAW_TAIL
    assert fit.params["alpha"] == pytest.approx(2.5, abs=0.2)


def test_xmin_search_reaches_past_a_heavy_body():
    # 95% of the mass sits at 1, so the power-law tail starts above the 90th percentile
    tail = _draw(lambda k: powerlaw_log_pmf(k, 2.5, xmin=2), np.arange(2, 100000), 500, seed=4)
    sample = np.concatenate([np.ones(9500, dtype=np.int64), tail])
    assert np.percentile(sample, 90) == 1
    fit = fit_powerlaw(sample)
    assert fit.xmin >= 2
    assert fit.params["alpha"] == pytest.approx(2.5, abs=0.25)


@pytest.mark.parametrize("rho", [1.25, 2.0, 5.0])
def test_yule_simon_recovers_shape(rho):
    sample = yulesimon.rvs(rho, size=20000, random_state=np.random.default_rng(5))
    fit = fit_yule_simon(sample)
    assert fit.family == Family.YULE_SIMON
    assert fit.params["rho"] == pytest.approx(rho, rel=0.05)
    assert fit.params["alpha"] == pytest.approx(rho + 1.0, rel=0.05)
    assert fit.xmin == 1 and fit.gof < 0.02


def test_comparison_prefers_generating_family(lognormal_sample, powerlaw_sample):
    assert compare_fits(lognormal_sample, xmin=1).preferred == Preference.LOGNORMAL
    comparison = compare_fits(powerlaw_sample)
    assert comparison.preferred in (Preference.POWERLAW, Preference.INCONCLUSIVE)
    assert comparison.to_dict()["powerlaw"]["family"] == "powerlaw"


def test_small_samples_are_inconclusive():
    comparison = compare_fits([1, 2, 3, 5, 8])
    assert comparison.preferred == Preference.INCONCLUSIVE
    assert comparison.notes


@pytest.mark.parametrize("sample", [[4], [3, 3, 3], [0, 1, 2], []])
def test_degenerate_samples(sample):
    with pytest.raises(DegenerateSample):
        fit_discrete_lognormal(sample)
    with pytest.raises(DegenerateSample):
        fit_powerlaw(sample)


def test_xmin_filters_the_sample():
    with pytest.raises(DegenerateSample):
        fit_discrete_lognormal([1, 1, 2, 9], xmin=5)
