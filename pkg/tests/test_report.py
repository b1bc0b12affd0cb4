import json

import pytest

from metrics.report import (
    ALL_METRICS,
    CURVE_METRICS,
    ClusteringMode,
    MeasureConfig,
    build_report,
)
from tests.conftest import build_san
from utils.config import provenance


def test_empty_selection_gives_empty_report(six_user_san):
    report = build_report(six_user_san, MeasureConfig(metrics=[]))
    assert report.ok
    assert report.scalars == {} and report.curves == {} and report.tables == {}


def test_selected_metrics_only(six_user_san):
    report = build_report(six_user_san, MeasureConfig(metrics=["reciprocity", "knn_social"]), graph_id="six")
    assert report.scalars == {"reciprocity": pytest.approx(2 / 7)}
    assert report.curves["knn_social"] == pytest.approx({1: 1.8, 2: 1.0})
    assert report.to_dict()["graph_id"] == "six"


def test_unknown_metric_is_rejected():
    with pytest.raises(ValueError, match="unknown metrics"):
        MeasureConfig(metrics=["reciprocity", "girth"]).selected()


def test_failures_are_recorded_and_others_still_run():
    g = build_san(3, [])
    report = build_report(g, MeasureConfig(metrics=["reciprocity", "social_density", "distance_histogram",
                                                    "effective_diameter_social", "per_type_clustering"]))
    assert not report.ok
    assert report.scalars["social_density"] == 0.0
    assert report.curves["distance_histogram"] == {}
    assert report.errors["reciprocity"].startswith("EmptyEdgeSet")
    assert report.errors["effective_diameter_social"].startswith("NoFiniteDistances")
    as_dict = report.to_dict()
    assert as_dict["scalars"]["reciprocity"] == {"error": report.errors["reciprocity"]}
    assert as_dict["tables"]["per_type_clustering"] == {}


def test_full_report_on_complete_san(init_san):
    report = build_report(init_san)
    assert set(report.scalars) | set(report.curves) | set(report.tables) | set(report.errors) == set(ALL_METRICS)
    assert report.scalars["reciprocity"] == 1.0
    assert report.scalars["avg_clustering_social"] == 1.0
    assert report.scalars["effective_diameter_social"] == 1.0
    # every user holds every attribute, so all degree pairs are constant
    assert "assortativity_social" in report.errors


def test_approx_clustering_mode(init_san):
    config = MeasureConfig(metrics=["avg_clustering_social"], clustering=ClusteringMode.APPROX, epsilon=0.1)
    assert build_report(init_san, config).scalars["avg_clustering_social"] == 1.0


def test_report_serialization(six_user_san, tmp_path):
    prov = provenance({"metrics": None}, seed=3)
    report = build_report(six_user_san, MeasureConfig(metrics=list(CURVE_METRICS[2:4])), prov=prov)
    json.dumps(report.to_dict())
    path = report.write_curves_csv(tmp_path / "curves.csv")
    lines = path.read_text().splitlines()
    header = [line for line in lines if line.startswith("# ")]
    assert "# seed=3" in header
    assert lines[len(header)] == "metric,degree,value"
    assert lines[len(header) + 1] == "knn_attribute,1,2.0"
