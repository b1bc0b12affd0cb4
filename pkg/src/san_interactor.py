"""
One function per subcommand: read inputs, call the library, write outputs.

Every writer embeds the same provenance block (tool, version, schema version,
resolved config, seed). Worker counts and output locations are left out of it
so reruns with the same config are byte-identical.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from apps.anonymity import AnonConfig
from apps.fidelity import App, fidelity_compare, sweep, write_sweep_csv
from apps.sybil import SybilConfig
from inference.fitting import compare_fits, fit_discrete_lognormal, fit_powerlaw, fit_yule_simon
from inference.likelihood import classify_closures, compare_closures, likelihood_grid
from metrics.attribute_metrics import reciprocity_grid
from metrics.report import CURVE_METRICS, SCALAR_METRICS, MeasureConfig, MetricReport, build_report
from metrics.structure import DegreeKind, degree_sequence
from models.baseline import ZhelParams, generate_baseline_zhel
from models.model_generator import generate
from models.params import Attachment, Closure, GenParams
from utils.config import RunConfig, provenance, provenance_header, write_json
from utils.graph_loader import EVENTS_FILE, read_event_log, read_san_dir, write_event_log, write_san
from utils.san_graph import SanGraph, subsample_attributes
from utils.snapshot_processer import load_snapshot_series_sync, snapshots_from_log, write_snapshot_series

logger = logging.getLogger(__name__)

LOGNORMAL_TRAJECTORIES = (DegreeKind.SOCIAL_IN, DegreeKind.SOCIAL_OUT, DegreeKind.ATTR_OF_SOCIAL)
POWERLAW_TRAJECTORIES = (DegreeKind.SOCIAL_OF_ATTR,)
TRAJECTORY_COLUMNS = [
    "timestamp",
    "social_in_mu", "social_in_sigma",
    "social_out_mu", "social_out_sigma",
    "attr_of_social_mu", "attr_of_social_sigma",
    "social_of_attr_alpha",
]
UNRESOLVED_KEYS = ("workers", "out_dir")


@dataclass
class TaskOutcome:
    """Files written by one subcommand plus the failures recorded in them."""

    written: List[Path] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def _provenance(run: RunConfig, **blocks: Any) -> Dict[str, Any]:
    config: Dict[str, Any] = {"action": run.action}
    for name, block in blocks.items():
        if hasattr(block, "model_dump"):
            block = block.model_dump(mode="json")
        if isinstance(block, dict):
            block = {k: v for k, v in block.items() if k not in UNRESOLVED_KEYS}
        config[name] = block
    return provenance(config, run.seed)


def _graph_summary(g: SanGraph) -> Dict[str, int]:
    return {
        "social_nodes": g.n_social,
        "social_links": g.n_social_links,
        "attribute_nodes": g.n_attribute,
        "attribute_links": g.n_attribute_links,
    }


# ---------------------------------------------------------------- generate
def cmd_generate(run: RunConfig, params: Union[GenParams, ZhelParams], checkpoints: int = 0) -> TaskOutcome:
    """
    Run the generator and write graph/, events.tsv, params.json and optionally series/.
    :param params: GenParams for the SAN model, ZhelParams for the baseline.
    :param checkpoints: number of evenly spaced snapshots to write (0 for none).
    """
    if isinstance(params, ZhelParams):
        model = "zhel"
        g, log = generate_baseline_zhel(params, run.seed)
        attribute_types = params.attribute_types
    else:
        model = "san"
        g, log = generate(params)
        attribute_types = params.attribute_types
    prov = _provenance(run, model=model, params=params, checkpoints=checkpoints)
    header = provenance_header(prov)

    outcome = TaskOutcome(summary={"model": model, **_graph_summary(g), "events": len(log)})
    outcome.written.extend(write_san(g, run.out_dir / "graph", header))
    outcome.written.append(write_event_log(log, run.out_dir / EVENTS_FILE, header))
    if checkpoints > 0:
        snapshots = snapshots_from_log(log, checkpoints, attribute_types)
        outcome.written.extend(write_snapshot_series(snapshots, run.out_dir / "series", header))
    outcome.written.append(write_json({"summary": outcome.summary, "provenance": prov},
                                      run.out_dir / "params.json"))
    logger.info(f"Generated {model} graph: {outcome.summary}")
    return outcome


# ----------------------------------------------------------------- measure
def cmd_measure(run: RunConfig, graph_dir: Path, config: MeasureConfig, graph_id: Optional[str] = None) -> TaskOutcome:
    """Write report.json and curves.csv for the graph stored in graph_dir."""
    g = read_san_dir(graph_dir)
    graph_id = graph_id or Path(graph_dir).name
    prov = _provenance(run, measure=config, graph=str(graph_dir))
    report = build_report(g, config, graph_id, prov)

    outcome = TaskOutcome(summary={"graph_id": graph_id, "metrics": len(config.selected()),
                                   "failed": sorted(report.errors)})
    outcome.failures.extend(f"{name}: {message}" for name, message in sorted(report.errors.items()))
    outcome.written.append(write_json(report.to_dict(), run.out_dir / "report.json"))
    outcome.written.append(report.write_curves_csv(run.out_dir / "curves.csv"))
    return outcome


# ------------------------------------------------------------------ evolve
def _trajectory_point(g: SanGraph) -> Dict[str, Optional[float]]:
    point: Dict[str, Optional[float]] = {}
    for kind in LOGNORMAL_TRAJECTORIES:
        sample = degree_sequence(g, kind)
        try:
            fit = fit_discrete_lognormal(sample[sample >= 1])
            point[f"{kind.value}_mu"], point[f"{kind.value}_sigma"] = fit.params["mu"], fit.params["sigma"]
        except ValueError as e:
            logger.debug(f"No lognormal fit for {kind.value}: {e}")
            point[f"{kind.value}_mu"], point[f"{kind.value}_sigma"] = None, None
    for kind in POWERLAW_TRAJECTORIES:
        sample = degree_sequence(g, kind)
        try:
            point[f"{kind.value}_alpha"] = fit_powerlaw(sample[sample >= 1]).params["alpha"]
        except ValueError as e:
            logger.debug(f"No power-law fit for {kind.value}: {e}")
            point[f"{kind.value}_alpha"] = None
    return point


def _write_trajectories(rows: List[Dict[str, Any]], path: Path, header: Dict[str, str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in header.items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow(["" if row[c] is None else repr(row[c]) for c in TRAJECTORY_COLUMNS])
    logger.info(f"Wrote {path}")
    return path


def cmd_evolve(run: RunConfig, series_dir: Path, config: MeasureConfig) -> TaskOutcome:
    """
    Measure every snapshot of a series and fit degree-law trajectories.
    Malformed snapshots are skipped with a warning; on a nonmonotone series the
    reciprocity grid (a diff-based metric) is null.
    """
    series = load_snapshot_series_sync(str(series_dir), max_concurrent=run.workers)
    if not len(series):
        raise ValueError(f"no readable snapshots under {series_dir}")
    prov = _provenance(run, measure=config, series=str(series_dir))
    warnings = list(series.warnings)

    reports: List[MetricReport] = []
    rows: List[Dict[str, Any]] = []
    outcome = TaskOutcome()
    for timestamp, g in series.snapshots:
        report = build_report(g, config, f"snapshot-{timestamp}", prov)
        reports.append(report)
        outcome.failures.extend(f"snapshot {timestamp} {name}: {msg}" for name, msg in sorted(report.errors.items()))
        rows.append({"timestamp": timestamp, **_trajectory_point(g)})

    grid: Optional[Dict[str, float]] = None
    if not series.is_monotone():
        warnings.append({"snapshot": "*", "error": "series is not monotone; reciprocity grid is null"})
        logger.warning(f"Snapshot series under {series_dir} is not monotone")
    elif len(series) >= 2:
        half = series.snapshots[(len(series) - 1) // 2][1]
        final = series.snapshots[-1][1]
        grid = {f"{s},{a}": rate for (s, a), rate in reciprocity_grid(half, final).items()}

    payload = {
        "timestamps": series.timestamps,
        "reports": [r.to_dict() for r in reports],
        "trajectories": rows,
        "reciprocity_grid": grid,
        "warnings": warnings,
        "sources": series.sources,
        "provenance": prov,
    }
    outcome.summary = {"snapshots": len(series), "skipped": len(series.warnings), "monotone": grid is not None}
    outcome.written.append(write_json(payload, run.out_dir / "evolution.json"))
    outcome.written.append(_write_trajectories(rows, run.out_dir / "trajectories.csv", provenance_header(prov)))
    return outcome


# --------------------------------------------------------------------- fit
def cmd_fit(run: RunConfig, graph_dir: Path, kinds: Sequence[DegreeKind], xmin: Optional[int] = None) -> TaskOutcome:
    """
    Lognormal fit, power-law fit and their comparison for each requested degree
    sequence; the social degree of attribute nodes also gets a Yule-Simon fit.
    """
    g = read_san_dir(graph_dir)
    prov = _provenance(run, kinds=[DegreeKind(k).value for k in kinds], xmin=xmin, graph=str(graph_dir))
    outcome = TaskOutcome()
    fits: Dict[str, Any] = {}
    for kind in kinds:
        kind = DegreeKind(kind)
        sample = degree_sequence(g, kind)
        sample = sample[sample >= 1]
        try:
            fits[kind.value] = {
                "lognormal": fit_discrete_lognormal(sample, xmin or 1).to_dict(),
                "powerlaw": fit_powerlaw(sample, xmin).to_dict(),
                "comparison": compare_fits(sample, xmin).to_dict(),
            }
            if kind == DegreeKind.SOCIAL_OF_ATTR:
                fits[kind.value]["yule_simon"] = fit_yule_simon(sample).to_dict()
        except ValueError as e:
            logger.warning(f"Fit of {kind.value} failed: {e}")
            fits[kind.value] = {"error": f"{type(e).__name__}: {e}"}
            outcome.failures.append(f"{kind.value}: {e}")
    outcome.summary = {k: v.get("comparison", {}).get("preferred") for k, v in fits.items()}
    outcome.written.append(write_json({"fits": fits, "provenance": prov}, run.out_dir / "fits.json"))
    return outcome


# -------------------------------------------------------------- likelihood
def cmd_likelihood(run: RunConfig, events_path: Path, alphas: Sequence[float], betas: Sequence[float],
                   attachment: Attachment = Attachment.LAPA, fc: float = 1.0,
                   type_weights: Optional[Dict[str, float]] = None) -> TaskOutcome:
    """Attachment grid, closure log-likelihoods of the three variants and the closure classification."""
    events = list(read_event_log(Path(events_path)))
    prov = _provenance(run, events=str(events_path), alphas=list(alphas), betas=list(betas),
                       attachment=Attachment(attachment).value, fc=fc, type_weights=type_weights)
    grid = likelihood_grid(events, alphas, betas, attachment, type_weights)
    closures = compare_closures(events, tuple(Closure), fc)
    classification = classify_closures(events)

    outcome = TaskOutcome(summary={"best_cell": list(grid.best_cell()), "scored": grid.scored})
    payload = {
        "attachment_grid": grid.to_dict(),
        "closure": closures.to_dict(),
        "closure_ranking": [c.value for c in closures.ranking()],
        "classification": classification.to_dict(),
        "provenance": prov,
    }
    outcome.written.append(write_json(payload, run.out_dir / "likelihood.json"))
    outcome.written.append(grid.write_csv(run.out_dir / "improvement.csv", provenance_header(prov)))
    return outcome


# -------------------------------------------------------------------- apps
def cmd_apps(run: RunConfig, graph_dir: Path, app: App, points: Sequence[int],
             config: Optional[Union[SybilConfig, AnonConfig]] = None,
             compare_dir: Optional[Path] = None) -> TaskOutcome:
    """
    Sweep the compromised count for one application. With compare_dir the same
    sweep runs on a second graph and the relative errors are reported.
    """
    app = App(app)
    if config is None:
        config = SybilConfig() if app == App.SYBIL else AnonConfig()
    points = [int(c) for c in points]
    g = read_san_dir(graph_dir)
    graphs = {Path(graph_dir).name or "graph": g}
    other = None
    if compare_dir is not None:
        other = read_san_dir(compare_dir)
        graphs[f"{Path(compare_dir).name or 'compare'}:model"] = other
    too_many = [c for c in points for h in graphs.values() if c > h.n_social]
    if too_many:
        raise ValueError(f"sweep points {sorted(set(too_many))} exceed the number of social nodes")

    prov = _provenance(run, app=app.value, points=points, app_config=config, graph=str(graph_dir),
                       compare=str(compare_dir) if compare_dir else None)
    payload: Dict[str, Any] = {"app": app.value, "points": points, "provenance": prov}
    if other is None:
        results = {next(iter(graphs)): sweep(g, app, config, points)}
    else:
        rows = fidelity_compare(g, other, app, points, config)
        real_id, model_id = list(graphs)
        results = {real_id: [row.real for row in rows], model_id: [row.model for row in rows]}
        payload["fidelity"] = [row.to_dict() for row in rows]
    payload["results"] = {gid: [r.to_dict() for r in rs] for gid, rs in results.items()}

    outcome = TaskOutcome(summary={gid: [r.mean for r in rs] for gid, rs in results.items()})
    outcome.written.append(write_sweep_csv(run.out_dir / "sweep.csv", results, points, provenance_header(prov)))
    outcome.written.append(write_json(payload, run.out_dir / "apps.json"))
    return outcome


# --------------------------------------------------------------- subsample
def _comparison_rows(metric: str, original: MetricReport, subsampled: MetricReport) -> List[List[Any]]:
    if metric in SCALAR_METRICS:
        return [[metric, "", original.scalars.get(metric), subsampled.scalars.get(metric)]]
    before, after = original.curves.get(metric, {}), subsampled.curves.get(metric, {})
    return [[metric, k, before.get(k), after.get(k)] for k in sorted(set(before) | set(after))]


def cmd_subsample(run: RunConfig, graph_dir: Path, keep_prob: float, metric: str,
                  per_link: bool = False, config: Optional[MeasureConfig] = None) -> TaskOutcome:
    """
    Drop attribute information at random, write the subsampled graph and compare
    one scalar or curve metric between the original and the subsampled graph.
    """
    if metric not in SCALAR_METRICS + CURVE_METRICS:
        raise ValueError(f"subsample compares scalar or curve metrics, not {metric!r}")
    config = (config or MeasureConfig()).model_copy(update={"metrics": [metric]})
    g = read_san_dir(graph_dir)
    reduced = subsample_attributes(g, keep_prob, run.seed, per_link).freeze()
    prov = _provenance(run, keep_prob=keep_prob, per_link=per_link, metric=metric, measure=config,
                       graph=str(graph_dir))

    original = build_report(g, config, "original", prov)
    subsampled = build_report(reduced, config, "subsampled", prov)
    rows = _comparison_rows(metric, original, subsampled)

    outcome = TaskOutcome(summary={"metric": metric, "attribute_links": [g.n_attribute_links,
                                                                         reduced.n_attribute_links]})
    for label, report in (("original", original), ("subsampled", subsampled)):
        outcome.failures.extend(f"{label} {name}: {msg}" for name, msg in sorted(report.errors.items()))
    outcome.written.extend(write_san(reduced, run.out_dir / "subsampled", provenance_header(prov)))
    payload = {"metric": metric, "original": original.to_dict(), "subsampled": subsampled.to_dict(),
               "provenance": prov}
    outcome.written.append(write_json(payload, run.out_dir / "comparison.json"))

    path = run.out_dir / "comparison.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in provenance_header(prov).items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["metric", "degree", "original", "subsampled"])
        for row in rows:
            writer.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for v in row])
    outcome.written.append(path)
    logger.info(f"Wrote {path}")
    return outcome
