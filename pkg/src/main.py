import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from apps.anonymity import AnonConfig
from apps.fidelity import App
from apps.sybil import SybilConfig
from metrics.report import MeasureConfig
from metrics.structure import DegreeKind
from models.baseline import ZhelParams
from models.params import PRESETS, Attachment, GenParams
from san_interactor import (
    TaskOutcome,
    cmd_apps,
    cmd_evolve,
    cmd_fit,
    cmd_generate,
    cmd_likelihood,
    cmd_measure,
    cmd_subsample,
)
from utils.cli import parse_args, validate_args
from utils.config import RunConfig, load_config_file, parse_param_overrides, resolve

# Module-level logger; do not configure logging on import so tests can control logging behavior
logger = logging.getLogger(__name__)


def _run_config(args, seed: Optional[int] = None) -> RunConfig:
    return RunConfig(
        action=args.action,
        out_dir=Path(args.out_dir),
        seed=args.seed if args.seed is not None else (seed or 0),
        workers=args.workers,
        config_path=args.config,
    )


def _measure_config(args, file_values: Dict[str, str]) -> MeasureConfig:
    overrides = {
        "metrics": args.metrics,
        "clustering": args.clustering,
        "diameter": args.diameter,
        "source_sample": args.source_sample,
        "epsilon": args.epsilon,
        "nu": args.nu,
        "seed": args.seed,
        "workers": args.workers,
    }
    return resolve(MeasureConfig, file_values, overrides)


def run_action(args) -> TaskOutcome:
    """Resolve the configuration blocks of args.action and run the matching command."""
    file_values = load_config_file(args.config)

    if args.action == "generate":
        overrides: Dict[str, Any] = parse_param_overrides(args.param)
        if args.model == "zhel":
            params = resolve(ZhelParams, file_values, overrides)
            return cmd_generate(_run_config(args), params, args.checkpoints)
        if args.preset:
            overrides = {**PRESETS[args.preset], **overrides}
        overrides["seed"] = args.seed
        params = resolve(GenParams, file_values, overrides)
        return cmd_generate(_run_config(args, params.seed), params, args.checkpoints)

    if args.action == "measure":
        config = _measure_config(args, file_values)
        return cmd_measure(_run_config(args, config.seed), Path(args.graph_dir), config, args.graph_id)

    if args.action == "evolve":
        config = _measure_config(args, file_values)
        return cmd_evolve(_run_config(args, config.seed), Path(args.series_dir), config)

    if args.action == "fit":
        kinds: List[DegreeKind] = [DegreeKind(k) for k in args.kinds]
        return cmd_fit(_run_config(args), Path(args.graph_dir), kinds, args.xmin)

    if args.action == "likelihood":
        return cmd_likelihood(_run_config(args), Path(args.events), args.alphas, args.betas,
                              Attachment(args.attachment), args.fc)

    if args.action == "apps":
        app = App(args.app)
        config_cls = SybilConfig if app == App.SYBIL else AnonConfig
        overrides = {**parse_param_overrides(args.param), "seed": args.seed, "workers": args.workers}
        config = resolve(config_cls, file_values, overrides)
        compare_dir = Path(args.compare_dir) if args.compare_dir else None
        return cmd_apps(_run_config(args, config.seed), Path(args.graph_dir), app, args.points, config,
                        compare_dir)

    if args.action == "subsample":
        config = resolve(MeasureConfig, file_values, {"seed": args.seed, "workers": args.workers})
        return cmd_subsample(_run_config(args, config.seed), Path(args.graph_dir), args.keep_prob,
                             args.metric, args.per_link, config)

    raise ValueError(f"unknown action {args.action!r}")


def main(argv: Optional[List[str]] = None) -> int:
    # parse and validate arguments using the shared CLI utility; parser.error exits with status 2
    args, parser = parse_args(argv)
    validate_args(args, parser)

    try:
        outcome = run_action(args)
    except (ValueError, OSError, LookupError) as e:
        logger.error(f"{args.action} failed: {e}")
        return 1

    for failure in outcome.failures:
        logger.error(f"{args.action}: {failure}")
    logger.info(f"{args.action} wrote {len(outcome.written)} files to {args.out_dir}: {outcome.summary}")
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    # Configure basic logging only when running as a script to avoid side effects during imports/tests
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=logging.INFO,
    )
    sys.exit(main())
