from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import asyncio
import logging

from utils.graph_loader import (
    BatchSnapshotLoader,
    SnapshotDirLoader,
    snapshot_dir_name,
    snapshot_index,
    write_san,
)
from utils.san_graph import EventLog, SanGraph, is_subgraph

logger = logging.getLogger(__name__)


@dataclass
class SnapshotSeries:
    """Time-ordered (day index, graph) pairs, the content hash of each loaded snapshot and records of skipped ones."""

    snapshots: List[Tuple[int, SanGraph]] = field(default_factory=list)
    warnings: List[Dict[str, str]] = field(default_factory=list)
    sources: List[Dict[str, str]] = field(default_factory=list)

    def __post_init__(self):
        stamps = [t for t, _ in self.snapshots]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError(f"snapshot timestamps must be strictly increasing: {stamps}")

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def timestamps(self) -> List[int]:
        return [t for t, _ in self.snapshots]

    def is_monotone(self) -> bool:
        """True when every snapshot contains its predecessor."""
        return all(
            is_subgraph(prev, cur) for (_, prev), (_, cur) in zip(self.snapshots, self.snapshots[1:])
        )


async def load_snapshot_series(directory: str, max_concurrent: int = 4) -> SnapshotSeries:
    """
    Read every `snapshot-<index>/` directory below directory.
    Malformed snapshots are skipped and recorded in SnapshotSeries.warnings.
    """
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"snapshot directory {root} does not exist")

    loaders = []
    warnings = []
    for child in sorted(root.iterdir()):
        if not child.is_dir():
            continue
        try:
            snapshot_index(child)
        except ValueError as e:
            logger.warning(f"Ignoring {child}: {e}")
            continue
        loaders.append(SnapshotDirLoader(str(child)))
    loaders.sort(key=lambda loader: loader.timestamp)

    if not loaders:
        logger.warning(f"No snapshot directories found under {root}")
        return SnapshotSeries()

    logger.info(f"Loading {len(loaders)} snapshots with max {max_concurrent} concurrent")
    batch_loader = BatchSnapshotLoader(max_concurrent=max_concurrent)
    outcomes = await batch_loader.load_graphs(loaders)

    snapshots = []
    sources = []
    for loader, graph, error in outcomes:
        if graph is None:
            warnings.append({"snapshot": loader.directory.name, "error": error})
            continue
        snapshots.append((loader.timestamp, graph))
        sources.append({"snapshot": loader.directory.name, "content_hash": loader.get_metadata()["content_hash"]})
    return SnapshotSeries(snapshots=snapshots, warnings=warnings, sources=sources)


def load_snapshot_series_sync(directory: str, max_concurrent: int = 4) -> SnapshotSeries:
    """
    Synchronous wrapper for load_snapshot_series.
    :param directory: series root.
    :param max_concurrent: maximum snapshots parsed at once.
    :return: the loaded series.
    """
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        # No event loop running, safe to use asyncio.run()
        return asyncio.run(load_snapshot_series(directory, max_concurrent))
    else:
        # We're in an event loop, run the coroutine in a thread
        import concurrent.futures

        with concurrent.futures.ThreadPoolExecutor() as executor:
            future = executor.submit(lambda: asyncio.run(load_snapshot_series(directory, max_concurrent)))
            return future.result()


def snapshots_from_log(log: EventLog, checkpoints: int, attribute_types=None) -> List[Tuple[int, SanGraph]]:
    """
    Replay log and freeze a copy at evenly spaced times.
    :param log: generated or ingested event log.
    :param checkpoints: number of snapshots; the last one is the full graph.
    :return: (checkpoint index, frozen graph) pairs.
    """
    if checkpoints < 1:
        raise ValueError("checkpoints must be >= 1")
    events = list(log)
    if not events:
        return [(i, SanGraph().freeze()) for i in range(checkpoints)]
    t_end = events[-1].t
    t_start = events[0].t
    cuts = [t_start + (t_end - t_start) * (i + 1) / checkpoints for i in range(checkpoints)]

    graph = SanGraph(attribute_types) if attribute_types is not None else SanGraph()
    result = []
    position = 0
    for index, cut in enumerate(cuts):
        last = index == checkpoints - 1
        while position < len(events) and (last or events[position].t <= cut):
            graph.apply(events[position])
            position += 1
        result.append((index, graph.copy().freeze()))
    return result


def write_snapshot_series(snapshots: List[Tuple[int, SanGraph]], directory: Path,
                          header: Optional[Dict[str, str]] = None) -> List[Path]:
    written = []
    for index, graph in snapshots:
        written.extend(write_san(graph, directory / snapshot_dir_name(index), header))
    logger.info(f"Wrote {len(snapshots)} snapshots to {directory}")
    return written
