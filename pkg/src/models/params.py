"""Parameters of the SAN evolution model and the truncated-normal lifetime law."""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import norm, truncnorm

from utils.san_graph import DEFAULT_ATTRIBUTE_TYPES


class Attachment(str, Enum):
    UNIFORM = "uniform"
    PA = "pa"
    PAPA = "papa"
    LAPA = "lapa"


class Closure(str, Enum):
    BASELINE = "baseline"
    RR = "rr"
    RRSAN = "rrsan"


class GenParams(BaseModel):
    """Every knob of the generative process plus the variant selectors."""

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    T: int = Field(1000, ge=0, description="simulated time steps (one arrival per step)")
    mu_a: float = Field(1.0, description="location of the lognormal attribute degree")
    sigma_a: float = Field(0.5, gt=0, description="scale of the lognormal attribute degree")
    p: float = Field(0.5, ge=0, le=1, description="probability that an attribute link creates a new attribute node")
    alpha: float = Field(1.0, description="indegree exponent of the attachment weight")
    beta: float = Field(200.0, description="attribute weight of the attachment weight")
    mu_l: float = Field(2.0, description="location of the truncated-normal lifetime")
    sigma_l: float = Field(1.0, gt=0, description="scale of the truncated-normal lifetime")
    m_s: float = Field(1.0, gt=0, description="mean sleep time of a node with outdegree 1")
    fc: float = Field(1.0, ge=0, description="first-hop weight of attribute neighbors in RR-SAN")
    attachment: Attachment = Attachment.LAPA
    closure: Closure = Closure.RRSAN
    seed: int = Field(0, ge=0, lt=2 ** 64)
    init_social: int = Field(5, ge=2)
    init_attr: int = Field(5, ge=0)
    lapa_heuristic: bool = Field(False, description="PA restricted to the members of one random attribute")
    type_weights: Optional[Dict[str, float]] = None
    attribute_types: Tuple[str, ...] = DEFAULT_ATTRIBUTE_TYPES

    @field_validator("alpha", "beta", "mu_a", "mu_l")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("type_weights")
    @classmethod
    def _non_negative_weights(cls, value: Optional[Dict[str, float]]) -> Optional[Dict[str, float]]:
        if value is not None and any((not math.isfinite(w)) or w < 0 for w in value.values()):
            raise ValueError("type weights must be finite and non-negative")
        return value

    @model_validator(mode="after")
    def _types_non_empty(self) -> "GenParams":
        if not self.attribute_types or len(set(self.attribute_types)) != len(self.attribute_types):
            raise ValueError("attribute_types must be a non-empty list of unique names")
        return self

    def lifetime(self) -> "TruncatedNormal":
        return TruncatedNormal(self.mu_l, self.sigma_l)

    def type_weight(self, attr_type: str) -> float:
        if self.type_weights is None:
            return 1.0
        return self.type_weights.get(attr_type, 1.0)


# Named ablations of the full model.
PRESETS: Dict[str, Dict[str, object]] = {
    "full": {"attachment": Attachment.LAPA, "closure": Closure.RRSAN},
    "pa_only": {"attachment": Attachment.PA, "closure": Closure.RRSAN},
    "rr_only": {"attachment": Attachment.LAPA, "closure": Closure.RR},
}


@dataclass(frozen=True)
class TruncatedNormal:
    """Normal(mu, sigma) restricted to l >= 0."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def gamma(self) -> float:
        return -self.mu / self.sigma

    @property
    def g(self) -> float:
        # hazard of the standard normal at gamma; sf keeps precision for large gamma
        return float(norm.pdf(self.gamma) / norm.sf(self.gamma))

    @property
    def delta(self) -> float:
        g = self.g
        return g * (g - self.gamma)

    @property
    def mean(self) -> float:
        return self.mu + self.sigma * self.g

    @property
    def variance(self) -> float:
        return self.sigma ** 2 * (1.0 - self.delta)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        return truncnorm.rvs(self.gamma, np.inf, loc=self.mu, scale=self.sigma, size=size, random_state=rng)


def outdegree_lognormal_target(params: GenParams) -> Tuple[float, float]:
    """
    Leading-order mean and variance of ln(outdegree) from the lifetime and sleep laws.

    Outdegree grows as a Yule process, so ln(outdegree) is L / m_s plus the log of
    a unit exponential: at finite lifetimes the mean sits about 0.577 lower and the
    variance up to pi^2 / 6 higher. sample_outdegree_law draws the exact law.
    """
    law = params.lifetime()
    return law.mean / params.m_s, law.variance / params.m_s ** 2


def sample_outdegree_law(params: GenParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Final outdegrees of nodes that live out their lifetime: Geometric(exp(-L / m_s)) with L truncated normal."""
    lifetimes = np.asarray(params.lifetime().sample(rng, size=size), dtype=np.float64)
    return rng.geometric(np.exp(-lifetimes / params.m_s))


def attribute_powerlaw_target(p: float) -> float:
    """Power-law exponent of the social degree of attribute nodes."""
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    return (2.0 - p) / (1.0 - p)
