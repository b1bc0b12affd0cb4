"""Monte Carlo trial plumbing shared by the application harnesses."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

Z_95 = 1.96


@dataclass(frozen=True)
class AppResult:
    """Mean of per-trial values with a normal 95% confidence interval."""

    mean: float
    ci_low: float
    ci_high: float
    values: List[float]
    extra: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_values(cls, values: Sequence[float], extra: Optional[Dict[str, float]] = None) -> "AppResult":
        data = np.asarray(values, dtype=np.float64)
        mean = float(data.mean()) if data.size else 0.0
        half = Z_95 * float(data.std(ddof=1)) / math.sqrt(data.size) if data.size > 1 else 0.0
        return cls(mean, mean - half, mean + half, data.tolist(), dict(extra or {}))

    def to_dict(self) -> Dict[str, object]:
        return {"mean": self.mean, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "values": list(self.values), **self.extra}


def run_trials(trial: Callable[[np.random.Generator], float], trials: int, seed: int, workers: int = 1) -> List:
    """
    Run trial once per derived RNG stream. Streams come from SeedSequence(seed).spawn,
    and results keep trial order, so the outcome does not depend on workers.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]
    if workers <= 1:
        return [trial(rng) for rng in streams]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(trial, streams))


def sample_compromised(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """count distinct social nodes, uniformly without replacement."""
    if count > n:
        raise ValueError(f"cannot compromise {count} of {n} nodes")
    return np.sort(rng.choice(n, size=count, replace=False)) if count else np.zeros(0, dtype=np.int64)
