"""MetricReport assembly and its JSON/CSV serialization."""
import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from metrics.attribute_metrics import degree_percentiles_by_attribute_value
from metrics.clustering import (
    ApproxConfig,
    clustering_approx,
    clustering_by_degree,
    clustering_exact,
    per_attribute_type_clustering,
)
from metrics.distance import (
    DiameterConfig,
    DiameterMode,
    approximate_distance_distribution,
    attribute_distance_distribution,
    distance_distribution,
    effective_diameter_from_histogram,
)
from metrics.structure import (
    DegreeKind,
    Side,
    assortativity,
    attribute_density,
    degree_histogram,
    knn_curve,
    log_binned,
    reciprocity,
    social_density,
)
from utils.config import provenance_header
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)

SCALAR_METRICS = (
    "reciprocity",
    "social_density",
    "attribute_density",
    "effective_diameter_social",
    "effective_diameter_attribute",
    "avg_clustering_social",
    "avg_clustering_attribute",
    "assortativity_social",
    "assortativity_attribute",
)
CURVE_METRICS = (
    "distance_histogram",
    "attribute_distance_histogram",
    "knn_social",
    "knn_attribute",
    "clustering_by_degree_social",
    "clustering_by_degree_attribute",
    "degree_social_out",
    "degree_social_in",
    "degree_attr_of_social",
    "degree_social_of_attr",
)
TABLE_METRICS = ("per_type_clustering", "degree_percentiles", "knn_social_binned", "knn_attribute_binned")
ALL_METRICS = SCALAR_METRICS + CURVE_METRICS + TABLE_METRICS


class ClusteringMode(str, Enum):
    EXACT = "exact"
    APPROX = "approx"


class MeasureConfig(BaseModel):
    """Which metrics to compute and with which estimators."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    metrics: Optional[List[str]] = None
    clustering: ClusteringMode = ClusteringMode.EXACT
    diameter: DiameterMode = DiameterMode.EXACT
    source_sample: Optional[int] = Field(None, ge=1)
    attribute_sources: Optional[int] = Field(200, ge=1)
    epsilon: float = Field(0.002, gt=0)
    nu: float = Field(100.0, gt=1)
    top_k: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)

    def selected(self) -> List[str]:
        if self.metrics is None:
            return list(ALL_METRICS)
        unknown = [m for m in self.metrics if m not in ALL_METRICS]
        if unknown:
            raise ValueError(f"unknown metrics: {', '.join(unknown)}")
        return list(self.metrics)

    def approx(self) -> ApproxConfig:
        return ApproxConfig(epsilon=self.epsilon, nu=self.nu, seed=self.seed)

    def diameter_config(self) -> DiameterConfig:
        return DiameterConfig(source_sample=self.source_sample, seed=self.seed, workers=self.workers)


@dataclass
class MetricReport:
    """Scalar, curve and table metrics of one graph; failed metrics keep their error text."""

    graph_id: str
    scalars: Dict[str, Optional[float]] = field(default_factory=dict)
    curves: Dict[str, Dict[int, float]] = field(default_factory=dict)
    tables: Dict[str, Any] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> Dict[str, Any]:
        scalars: Dict[str, Any] = dict(self.scalars)
        curves: Dict[str, Any] = {name: {str(k): v for k, v in curve.items()} for name, curve in self.curves.items()}
        tables: Dict[str, Any] = dict(self.tables)
        for name, message in self.errors.items():
            failure = {"error": message}
            if name in SCALAR_METRICS:
                scalars[name] = failure
            elif name in CURVE_METRICS:
                curves[name] = failure
            else:
                tables[name] = failure
        return {
            "graph_id": self.graph_id,
            "scalars": scalars,
            "curves": curves,
            "tables": tables,
            "provenance": self.provenance,
        }

    def write_curves_csv(self, path: Path) -> Path:
        """One `metric,degree,value` row per curve point, provenance in '#' header lines."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            for key, value in provenance_header(self.provenance).items():
                f.write(f"# {key}={value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["metric", "degree", "value"])
            for name in sorted(self.curves):
                for degree, value in sorted(self.curves[name].items()):
                    writer.writerow([name, degree, repr(float(value))])
        logger.info(f"Wrote {path}")
        return path


def _format_error(e: Exception) -> str:
    return f"{type(e).__name__}: {e}"


def build_report(g: SanGraph, config: Optional[MeasureConfig] = None, graph_id: str = "graph",
                 prov: Optional[Dict[str, Any]] = None) -> MetricReport:
    """
    Compute the selected metrics independently; a failing metric is recorded and the rest still run.
    """
    config = config or MeasureConfig()
    report = MetricReport(graph_id=graph_id, provenance=dict(prov or {}))
    wanted = config.selected()
    cache: Dict[str, Any] = {}

    def social_hist() -> Dict[int, float]:
        if "social_hist" not in cache:
            if config.diameter == DiameterMode.EXACT:
                cache["social_hist"] = distance_distribution(g, config.source_sample, config.seed, config.workers)
            else:
                cache["social_hist"] = approximate_distance_distribution(g, config.diameter_config())
        return cache["social_hist"]

    def attr_hist() -> Dict[int, int]:
        if "attr_hist" not in cache:
            cache["attr_hist"] = attribute_distance_distribution(g, config.attribute_sources, config.seed)
        return cache["attr_hist"]

    def avg_clustering(side: Side) -> float:
        if config.clustering == ClusteringMode.APPROX:
            return clustering_approx(g, None, config.approx(), side)
        return clustering_exact(g, None, side)

    def by_degree(side: Side) -> Dict[int, float]:
        return clustering_by_degree(g, side, config.approx() if config.clustering == ClusteringMode.APPROX else None)

    scalar_fns: Dict[str, Callable[[], float]] = {
        "reciprocity": lambda: reciprocity(g),
        "social_density": lambda: social_density(g),
        "attribute_density": lambda: attribute_density(g),
        "effective_diameter_social": lambda: effective_diameter_from_histogram(social_hist()),
        "effective_diameter_attribute": lambda: effective_diameter_from_histogram(attr_hist()),
        "avg_clustering_social": lambda: avg_clustering(Side.SOCIAL),
        "avg_clustering_attribute": lambda: avg_clustering(Side.ATTRIBUTE),
        "assortativity_social": lambda: assortativity(g, Side.SOCIAL),
        "assortativity_attribute": lambda: assortativity(g, Side.ATTRIBUTE),
    }
    curve_fns: Dict[str, Callable[[], Dict[int, float]]] = {
        "distance_histogram": social_hist,
        "attribute_distance_histogram": attr_hist,
        "knn_social": lambda: knn_curve(g, Side.SOCIAL),
        "knn_attribute": lambda: knn_curve(g, Side.ATTRIBUTE),
        "clustering_by_degree_social": lambda: by_degree(Side.SOCIAL),
        "clustering_by_degree_attribute": lambda: by_degree(Side.ATTRIBUTE),
        "degree_social_out": lambda: degree_histogram(g, DegreeKind.SOCIAL_OUT),
        "degree_social_in": lambda: degree_histogram(g, DegreeKind.SOCIAL_IN),
        "degree_attr_of_social": lambda: degree_histogram(g, DegreeKind.ATTR_OF_SOCIAL),
        "degree_social_of_attr": lambda: degree_histogram(g, DegreeKind.SOCIAL_OF_ATTR),
    }
    table_fns: Dict[str, Callable[[], Any]] = {
        "per_type_clustering": lambda: per_attribute_type_clustering(g),
        "degree_percentiles": lambda: {
            t: [list(row) for row in degree_percentiles_by_attribute_value(g, t, config.top_k)]
            for t in g.attribute_types
        },
        "knn_social_binned": lambda: [list(p) for p in log_binned(knn_curve(g, Side.SOCIAL))],
        "knn_attribute_binned": lambda: [list(p) for p in log_binned(knn_curve(g, Side.ATTRIBUTE))],
    }

    for name in wanted:
        try:
            if name in scalar_fns:
                report.scalars[name] = float(scalar_fns[name]())
            elif name in curve_fns:
                report.curves[name] = dict(curve_fns[name]())
            else:
                report.tables[name] = table_fns[name]()
        except (ValueError, LookupError, ArithmeticError) as e:
            logger.warning(f"Metric {name} failed on {graph_id}: {e}")
            report.errors[name] = _format_error(e)
    logger.info(f"Measured {len(wanted) - len(report.errors)}/{len(wanted)} metrics on {graph_id}")
    return report
