import argparse
import logging
from pathlib import Path
from typing import List, Optional, Tuple

ACTIONS = ("generate", "measure", "evolve", "fit", "likelihood", "apps", "subsample")
DEGREE_KINDS = ("social_out", "social_in", "attr_of_social", "social_of_attr")
DEFAULT_ALPHAS = [0.0, 0.5, 1.0, 1.5, 2.0]
DEFAULT_BETAS = [0.0, 10.0, 50.0, 200.0, 1000.0]
DEFAULT_PAPA_BETAS = [0.0, 1.0, 2.0, 5.0, 10.0]


def _add_measure_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metrics", type=str, nargs="*", help="Metric names to compute (default: all).")
    p.add_argument("--clustering", choices=["exact", "approx"], help="Clustering estimator (default: exact).")
    p.add_argument("--diameter", choices=["exact", "probabilistic"], help="Diameter estimator (default: exact).")
    p.add_argument("--source-sample", type=int, help="BFS sources for the distance distribution (default: all).")
    p.add_argument("--epsilon", type=float, help="Additive error of the sampled clustering estimator.")
    p.add_argument("--nu", type=float, help="Confidence parameter of the sampled clustering estimator.")


def create_parser() -> argparse.ArgumentParser:
    """Create and return the CLI ArgumentParser for the application.

    The parser uses subcommands to separate actions (generate, measure, evolve,
    fit, likelihood, apps, subsample) and exposes the options shared by all of them.
    """
    parser = argparse.ArgumentParser(
        description="Generate, measure and evaluate Social-Attribute Networks."
    )

    # Global options
    parser.add_argument("--seed", type=int, help="Global RNG seed; overrides any seed in the config file.")
    parser.add_argument("--workers", type=int, default=1, help="Worker threads (default: 1).")
    parser.add_argument("--out-dir", type=str, default="out", help="Output directory (default: out).")
    parser.add_argument("--config", type=str, help="Path to a key=value configuration file (optional).")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")

    subparsers = parser.add_subparsers(dest="action")

    p_gen = subparsers.add_parser("generate", help="Generate a synthetic SAN and its event log.")
    p_gen.add_argument("--param", type=str, action="append", default=[], metavar="KEY=VALUE",
                       help="Override one generator parameter (repeatable).")
    p_gen.add_argument("--preset", choices=["full", "pa_only", "rr_only"], help="Named model variant.")
    p_gen.add_argument("--model", choices=["san", "zhel"], default="san",
                       help="san: attribute-augmented model; zhel: co-evolution baseline (default: san).")
    p_gen.add_argument("--checkpoints", type=int, default=0, help="Snapshots to write under series/ (default: 0).")

    p_measure = subparsers.add_parser("measure", help="Measure one graph.")
    p_measure.add_argument("--graph-dir", type=str, help="Directory holding social.tsv (required).")
    p_measure.add_argument("--graph-id", type=str, help="Identifier written into the report.")
    _add_measure_options(p_measure)

    p_evolve = subparsers.add_parser("evolve", help="Measure every snapshot of a series.")
    p_evolve.add_argument("--series-dir", type=str, help="Directory of snapshot-<index>/ folders (required).")
    _add_measure_options(p_evolve)

    p_fit = subparsers.add_parser("fit", help="Fit and compare degree distributions.")
    p_fit.add_argument("--graph-dir", type=str, help="Directory holding social.tsv (required).")
    p_fit.add_argument("--kinds", choices=DEGREE_KINDS, nargs="+", default=list(DEGREE_KINDS),
                       help="Degree sequences to fit (default: all).")
    p_fit.add_argument("--xmin", type=int, help="Fixed lower cutoff (default: chosen by KS distance).")

    p_lik = subparsers.add_parser("likelihood", help="Score attachment and closure variants on an event log.")
    p_lik.add_argument("--events", type=str, help="Event log TSV (required).")
    p_lik.add_argument("--alphas", type=float, nargs="+", default=DEFAULT_ALPHAS, help="Alpha grid.")
    p_lik.add_argument("--betas", type=float, nargs="+",
                       help="Beta grid (default: 0..1000 for lapa, 0..10 for papa).")
    p_lik.add_argument("--attachment", choices=["pa", "papa", "lapa"], default="lapa",
                       help="Attachment variant scored over the grid (default: lapa).")
    p_lik.add_argument("--fc", type=float, default=1.0, help="Focal-closure weight for RR-SAN (default: 1.0).")

    p_apps = subparsers.add_parser("apps", help="Run a security application over a compromised-node sweep.")
    p_apps.add_argument("--graph-dir", type=str, help="Directory holding social.tsv (required).")
    p_apps.add_argument("--app", choices=["sybil", "anonymity"], help="Application to run (required).")
    p_apps.add_argument("--points", type=int, nargs="+", default=[0], help="Compromised counts to sweep.")
    p_apps.add_argument("--compare-dir", type=str, help="Model graph to compare against the reference graph.")
    p_apps.add_argument("--param", type=str, action="append", default=[], metavar="KEY=VALUE",
                        help="Override one application setting (repeatable).")

    p_sub = subparsers.add_parser("subsample", help="Drop attributes at random and compare a metric.")
    p_sub.add_argument("--graph-dir", type=str, help="Directory holding social.tsv (required).")
    p_sub.add_argument("--keep-prob", type=float, help="Probability of keeping attributes (required).")
    p_sub.add_argument("--metric", type=str, default="clustering_by_degree_attribute",
                       help="Scalar or curve metric to compare (default: clustering_by_degree_attribute).")
    p_sub.add_argument("--per-link", action="store_true", help="Decide per attribute link instead of per user.")

    return parser


def parse_args(argv: Optional[List[str]] = None) -> Tuple[argparse.Namespace, argparse.ArgumentParser]:
    """Parse CLI arguments and return the (args, parser) tuple.

    Accepts an optional argv list to facilitate testing.
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    if getattr(args, "verbose", False):
        logging.getLogger().setLevel(logging.DEBUG)

    return args, parser


def validate_args(args: argparse.Namespace, parser: Optional[argparse.ArgumentParser] = None) -> None:
    """Perform cross-argument validation and raise a parser error when invalid.

    If parser is provided, use parser.error(...) to produce standard error messaging.
    """
    def _error(msg: str):
        if parser:
            parser.error(msg)
        raise ValueError(msg)

    def _existing_dir(flag: str, value: Optional[str]):
        if not value:
            _error(f"{flag} required for '{action}' action.")
        elif not Path(value).is_dir():
            _error(f"{flag} {value} is not a directory.")

    action = getattr(args, "action", None)
    if not action:
        _error(f"No action specified. Choose one of: {', '.join(ACTIONS)}")

    if args.seed is not None and args.seed < 0:
        _error("--seed must be non-negative.")
    if args.workers < 1:
        _error("--workers must be at least 1.")
    if args.config and not Path(args.config).is_file():
        _error(f"--config {args.config} does not exist.")

    if action == "generate":
        if args.checkpoints < 0:
            _error("--checkpoints must be non-negative.")
        if args.model == "zhel" and args.preset:
            _error("--preset applies to the san model only.")

    elif action in ("measure", "fit", "apps", "subsample"):
        _existing_dir("--graph-dir", getattr(args, "graph_dir", None))

    elif action == "evolve":
        _existing_dir("--series-dir", args.series_dir)

    elif action == "likelihood":
        if not args.events:
            _error("--events required for 'likelihood' action.")
        elif not Path(args.events).is_file():
            _error(f"--events {args.events} does not exist.")
        if args.betas is None:
            args.betas = list(DEFAULT_PAPA_BETAS if args.attachment == "papa" else DEFAULT_BETAS)

    if action == "apps":
        if not args.app:
            _error("--app required for 'apps' action.")
        if any(c < 0 for c in args.points):
            _error("--points must be non-negative.")
        if args.compare_dir and not Path(args.compare_dir).is_dir():
            _error(f"--compare-dir {args.compare_dir} is not a directory.")

    elif action == "subsample":
        if args.keep_prob is None:
            _error("--keep-prob required for 'subsample' action.")
        elif not 0.0 <= args.keep_prob <= 1.0:
            _error("--keep-prob must lie in [0, 1].")

    elif action == "fit":
        if args.xmin is not None and args.xmin < 1:
            _error("--xmin must be at least 1.")
