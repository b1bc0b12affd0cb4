"""Run an application harness on a reference and a model graph over a sweep of compromised counts."""
import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from apps.anonymity import AnonConfig, anonymity_compromise_probability
from apps.sybil import SybilConfig, sybil_admission
from apps.trials import AppResult
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["compromised", "metric_mean", "metric_ci_low", "metric_ci_high", "graph_id"]


class App(str, Enum):
    SYBIL = "sybil"
    ANONYMITY = "anonymity"


@dataclass(frozen=True)
class FidelityRow:
    compromised: int
    real: AppResult
    model: AppResult

    @property
    def relative_error(self) -> Optional[float]:
        """|model - real| / real; 0 when both are 0 and None when only real is 0."""
        if self.real.mean == 0:
            return 0.0 if self.model.mean == 0 else None
        return abs(self.model.mean - self.real.mean) / abs(self.real.mean)

    def to_dict(self) -> Dict[str, object]:
        return {"compromised": self.compromised, "real": self.real.to_dict(),
                "model": self.model.to_dict(), "relative_error": self.relative_error}


def run_app(g: SanGraph, app: App, cfg: Union[SybilConfig, AnonConfig], compromised: int) -> AppResult:
    point = cfg.model_copy(update={"compromised_count": compromised})
    if App(app) == App.SYBIL:
        return sybil_admission(g, point)
    return anonymity_compromise_probability(g, point)


def sweep(g: SanGraph, app: App, cfg: Union[SybilConfig, AnonConfig], points: Sequence[int]) -> List[AppResult]:
    return [run_app(g, app, cfg, c) for c in points]


def fidelity_compare(real_g: SanGraph, model_g: SanGraph, app: App, points: Sequence[int],
                     cfg: Optional[Union[SybilConfig, AnonConfig]] = None) -> List[FidelityRow]:
    """
    Relative error of the model graph against the reference graph at every sweep point.
    Both graphs see the same configuration and seed at each point.
    """
    app = App(app)
    if cfg is None:
        cfg = SybilConfig() if app == App.SYBIL else AnonConfig()
    rows = []
    for compromised in points:
        row = FidelityRow(int(compromised), run_app(real_g, app, cfg, compromised),
                          run_app(model_g, app, cfg, compromised))
        logger.info(f"{app.value} at {compromised} compromised: relative error {row.relative_error}")
        rows.append(row)
    return rows


def write_sweep_csv(path: Path, results: Dict[str, Sequence[AppResult]], points: Sequence[int],
                    header: Optional[Dict[str, str]] = None) -> Path:
    """One row per (graph, sweep point): compromised,metric_mean,metric_ci_low,metric_ci_high,graph_id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in (header or {}).items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for graph_id in sorted(results):
            for compromised, result in zip(points, results[graph_id]):
                writer.writerow([compromised, repr(result.mean), repr(result.ci_low), repr(result.ci_high), graph_id])
    logger.info(f"Wrote {path}")
    return path
