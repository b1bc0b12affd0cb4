"""
Maximum-likelihood fits of discrete lognormal and discrete power-law
distributions, and their likelihood-ratio comparison.

    lognormal: p(k) ~ (1/k) exp(-(ln k - mu)^2 / (2 sigma^2)),  k >= xmin
    power-law: p(k) = k^(-alpha) / zeta(alpha, xmin),           k >= xmin
    Yule-Simon: p(k) = rho * B(k, rho + 1) ~ k^(-(rho + 1)),     k >= 1
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.special import logsumexp, zeta
from scipy.stats import norm, yulesimon

logger = logging.getLogger(__name__)

LOGNORMAL_SUPPORT_FLOOR = 10 ** 6
MIN_POWERLAW_TAIL = 10
MIN_COMPARISON_SAMPLE = 10
SIGNIFICANCE = 0.1


class DegenerateSample(ValueError):
    pass


class Family(str, Enum):
    LOGNORMAL = "lognormal"
    POWERLAW = "powerlaw"
    YULE_SIMON = "yule_simon"


class Preference(str, Enum):
    LOGNORMAL = "lognormal"
    POWERLAW = "powerlaw"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DistFit:
    family: Family
    params: Dict[str, float]
    loglik: float
    n: int
    gof: float
    xmin: int = 1

    def to_dict(self) -> Dict[str, object]:
        return {"family": self.family.value, "params": dict(self.params), "loglik": self.loglik,
                "n": self.n, "gof": self.gof, "xmin": self.xmin}


@dataclass(frozen=True)
class FitComparison:
    preferred: Preference
    loglik_ratio: float
    normalized_ratio: float
    p_value: float
    n: int
    lognormal: Optional[DistFit] = None
    powerlaw: Optional[DistFit] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, object]:
        return {
            "preferred": self.preferred.value,
            "loglik_ratio": self.loglik_ratio,
            "normalized_ratio": self.normalized_ratio,
            "p_value": self.p_value,
            "n": self.n,
            "lognormal": self.lognormal.to_dict() if self.lognormal else None,
            "powerlaw": self.powerlaw.to_dict() if self.powerlaw else None,
            "notes": list(self.notes),
        }


def _as_sample(sample: Iterable[int]) -> np.ndarray:
    values = np.asarray(list(sample) if not isinstance(sample, np.ndarray) else sample, dtype=np.int64)
    if values.size < 2:
        raise DegenerateSample(f"need at least 2 observations, got {values.size}")
    if values.min() < 1:
        raise DegenerateSample("observations must be positive integers")
    if np.unique(values).size < 2:
        raise DegenerateSample("sample has a single distinct value")
    return values


def _ks_statistic(values: np.ndarray, model_cdf: np.ndarray, xmin: int) -> float:
    """Max |F_emp - F_model| over the observed values; model_cdf[i] = F(xmin + i)."""
    unique, counts = np.unique(values, return_counts=True)
    empirical = np.cumsum(counts) / values.size
    model = model_cdf[unique - xmin]
    return float(np.max(np.abs(empirical - model)))


# --------------------------------------------------------------- lognormal
class _LognormalSupport:
    """log f(k) over k in [xmin, K] plus the continuous tail bound beyond K."""

    def __init__(self, xmin: int, sample_max: int):
        self.xmin = xmin
        self.upper = max(LOGNORMAL_SUPPORT_FLOOR, 10 * sample_max)
        self.log_k = np.log(np.arange(xmin, self.upper + 1, dtype=np.float64))

    def log_normalizer(self, mu: float, sigma: float) -> float:
        terms = -self.log_k - (self.log_k - mu) ** 2 / (2 * sigma ** 2)
        log_tail = (math.log(sigma * math.sqrt(2 * math.pi))
                    + norm.logsf((math.log(self.upper + 0.5) - mu) / sigma))
        return float(logsumexp(np.append(terms, log_tail)))

    def log_pmf(self, k: np.ndarray, mu: float, sigma: float) -> np.ndarray:
        lk = np.log(k.astype(np.float64))
        return -lk - (lk - mu) ** 2 / (2 * sigma ** 2) - self.log_normalizer(mu, sigma)


def lognormal_log_pmf(k: np.ndarray, mu: float, sigma: float, xmin: int = 1) -> np.ndarray:
    """Normalized discrete lognormal log-pmf at k (support k >= xmin)."""
    k = np.asarray(k, dtype=np.int64)
    return _LognormalSupport(xmin, int(k.max()) if k.size else xmin).log_pmf(k, mu, sigma)


def fit_discrete_lognormal(sample: Iterable[int], xmin: int = 1) -> DistFit:
    """
    MLE of (mu, sigma) for the discrete lognormal restricted to k >= xmin.
    :raises DegenerateSample: fewer than 2 usable values or a single distinct value.
    """
    values = _as_sample(sample)
    values = values[values >= xmin]
    values = _as_sample(values)
    n = values.size
    log_values = np.log(values.astype(np.float64))
    s1, s2 = log_values.sum(), np.dot(log_values, log_values)
    support = _LognormalSupport(xmin, int(values.max()))

    def negative_loglik(theta: np.ndarray) -> float:
        mu, sigma = theta[0], math.exp(theta[1])
        kernel = -s1 - (s2 - 2 * mu * s1 + n * mu * mu) / (2 * sigma * sigma)
        return -(kernel - n * support.log_normalizer(mu, sigma))

    start = np.array([log_values.mean(), math.log(max(log_values.std(), 0.1))])
    result = optimize.minimize(negative_loglik, start, method="L-BFGS-B",
                               bounds=[(-100.0, 100.0), (math.log(1e-3), math.log(100.0))])
    mu, sigma = float(result.x[0]), float(math.exp(result.x[1]))
    loglik = -float(result.fun)
    if not math.isfinite(loglik):
        raise DegenerateSample("lognormal likelihood is not finite at the optimum")

    grid = np.arange(xmin, int(values.max()) + 1)
    cdf = np.cumsum(np.exp(support.log_pmf(grid, mu, sigma)))
    gof = _ks_statistic(values, cdf, xmin)
    logger.debug(f"Lognormal fit: mu={mu:.4f}, sigma={sigma:.4f}, loglik={loglik:.2f}, n={n}")
    return DistFit(Family.LOGNORMAL, {"mu": mu, "sigma": sigma}, loglik, n, gof, xmin)


# --------------------------------------------------------------- power law
def powerlaw_log_pmf(k: np.ndarray, alpha: float, xmin: int = 1) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    return -alpha * np.log(k) - math.log(zeta(alpha, xmin))


def _powerlaw_mle(values: np.ndarray, xmin: int) -> Tuple[float, float]:
    n = values.size
    sum_log = float(np.log(values.astype(np.float64)).sum())

    def negative_loglik(alpha: float) -> float:
        return n * math.log(zeta(alpha, xmin)) + alpha * sum_log

    result = optimize.minimize_scalar(negative_loglik, bounds=(1.0 + 1e-6, 50.0), method="bounded",
                                      options={"xatol": 1e-8})
    return float(result.x), -float(result.fun)


def _powerlaw_ks(values: np.ndarray, alpha: float, xmin: int) -> float:
    # model CDF at the observed values only; the tail can reach far past the bulk
    unique, counts = np.unique(values, return_counts=True)
    empirical = np.cumsum(counts) / values.size
    model = 1.0 - zeta(alpha, unique.astype(np.float64) + 1) / zeta(alpha, xmin)
    return float(np.max(np.abs(empirical - model)))


def fit_powerlaw(sample: Iterable[int], xmin: Optional[int] = None) -> DistFit:
    """
    Discrete power-law MLE. When xmin is None every observed value that leaves a
    tail of at least MIN_POWERLAW_TAIL observations (2 for smaller samples) is
    tried and the one minimizing the KS statistic of the tail fit wins.
    """
    values = _as_sample(sample)
    if xmin is not None:
        tail = _as_sample(values[values >= xmin])
        alpha, loglik = _powerlaw_mle(tail, xmin)
        return DistFit(Family.POWERLAW, {"alpha": alpha}, loglik, tail.size, _powerlaw_ks(tail, alpha, xmin), xmin)

    min_tail = MIN_POWERLAW_TAIL if values.size >= MIN_POWERLAW_TAIL else 2
    best: Optional[DistFit] = None
    for candidate in np.unique(values):
        tail = values[values >= candidate]
        if tail.size < min_tail or np.unique(tail).size < 2:
            break
        alpha, loglik = _powerlaw_mle(tail, int(candidate))
        gof = _powerlaw_ks(tail, alpha, int(candidate))
        if best is None or gof < best.gof:
            best = DistFit(Family.POWERLAW, {"alpha": alpha}, loglik, tail.size, gof, int(candidate))
    if best is None:
        raise DegenerateSample("no xmin candidate leaves a usable tail")
    logger.debug(f"Power-law fit: alpha={best.params['alpha']:.4f}, xmin={best.xmin}, KS={best.gof:.4f}")
    return best


def fit_yule_simon(sample: Iterable[int]) -> DistFit:
    """
    MLE of the Yule-Simon shape rho over the whole sample (k >= 1).

    Degree-proportional growth with a new node per event with probability p
    yields this law with rho = 1 / (1 - p). Its tail exponent rho + 1 is
    reported as "alpha" so it reads like the power-law fit, without the bias a
    pure power law picks up from the curvature at small k.
    """
    values = _as_sample(sample)

    def negative_loglik(rho: float) -> float:
        return -float(yulesimon.logpmf(values, rho).sum())

    result = optimize.minimize_scalar(negative_loglik, bounds=(1e-3, 100.0), method="bounded",
                                      options={"xatol": 1e-8})
    rho = float(result.x)
    unique, counts = np.unique(values, return_counts=True)
    gof = float(np.max(np.abs(np.cumsum(counts) / values.size - yulesimon.cdf(unique, rho))))
    logger.debug(f"Yule-Simon fit: rho={rho:.4f}, n={values.size}, KS={gof:.4f}")
    return DistFit(Family.YULE_SIMON, {"rho": rho, "alpha": rho + 1.0}, -float(result.fun), int(values.size), gof)


# -------------------------------------------------------------- comparison
def compare_fits(sample: Iterable[int], xmin: Optional[int] = None) -> FitComparison:
    """
    Likelihood-ratio comparison on the power-law tail (k >= xmin of the power-law fit).

    R = sum of per-observation log p_LN - log p_PL; R > 0 favors the lognormal.
    Significance from the normal approximation of R / (sd * sqrt(n)); samples
    smaller than 10 or with p > 0.1 are Inconclusive.
    """
    values = _as_sample(sample)
    if values.size < MIN_COMPARISON_SAMPLE:
        return FitComparison(Preference.INCONCLUSIVE, 0.0, 0.0, 1.0, int(values.size),
                             notes=(f"fewer than {MIN_COMPARISON_SAMPLE} observations",))
    powerlaw = fit_powerlaw(values, xmin)
    tail = values[values >= powerlaw.xmin]
    lognormal = fit_discrete_lognormal(tail, powerlaw.xmin)
    n = tail.size

    support = _LognormalSupport(powerlaw.xmin, int(tail.max()))
    differences = (support.log_pmf(tail, lognormal.params["mu"], lognormal.params["sigma"])
                   - powerlaw_log_pmf(tail, powerlaw.params["alpha"], powerlaw.xmin))
    ratio = float(differences.sum())
    spread = float(differences.std())
    if n < MIN_COMPARISON_SAMPLE or spread == 0:
        return FitComparison(Preference.INCONCLUSIVE, ratio, 0.0, 1.0, n, lognormal, powerlaw,
                             notes=("tail too small or identical fits",))
    normalized = ratio / (spread * math.sqrt(n))
    p_value = float(2 * norm.sf(abs(normalized)))
    if p_value > SIGNIFICANCE:
        preferred = Preference.INCONCLUSIVE
    else:
        preferred = Preference.LOGNORMAL if ratio > 0 else Preference.POWERLAW
    logger.info(f"Fit comparison: R={ratio:.3f}, z={normalized:.3f}, p={p_value:.4f} -> {preferred.value}")
    return FitComparison(preferred, ratio, normalized, p_value, n, lognormal, powerlaw)
