from abc import ABC, abstractmethod
from typing import List, Dict, Any, Optional, Tuple, Iterable
from pathlib import Path
import asyncio
import hashlib
import logging

from utils.san_graph import (
    DEFAULT_ATTRIBUTE_TYPES,
    Event,
    EventKind,
    EventLog,
    LinkOrigin,
    SanGraph,
)

logger = logging.getLogger(__name__)

SOCIAL_FILE = "social.tsv"
ATTRIBUTES_FILE = "attributes.tsv"
NODES_FILE = "nodes.tsv"
EVENTS_FILE = "events.tsv"


class GraphFormatError(ValueError):
    """Raised for malformed TSV input."""

    def __init__(self, path: Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def _data_lines(path: Path) -> Iterable[Tuple[int, List[str]]]:
    """Yield (line number, fields) for non-empty, non-comment lines."""
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            yield line_no, line.split("\t")


def _content_hash(paths: Iterable[Path]) -> str:
    digest = hashlib.md5()
    for path in paths:
        if path.exists():
            digest.update(path.read_bytes())
    return digest.hexdigest()


def read_san(social_path: Path, attributes_path: Optional[Path] = None,
             nodes_path: Optional[Path] = None, until_day: Optional[int] = None) -> SanGraph:
    """
    Build a SanGraph from the TSV formats.
    :param social_path: `src<TAB>dst[<TAB>day]` lines.
    :param attributes_path: `node<TAB>attr_type<TAB>attr_value` lines (optional).
    :param nodes_path: one social label per line, for isolated users (optional).
    :param until_day: keep only social links stamped with a day <= until_day.
    :return: a frozen graph.
    """
    graph = SanGraph(DEFAULT_ATTRIBUTE_TYPES)
    if nodes_path is not None and nodes_path.exists():
        for _, fields in _data_lines(nodes_path):
            graph.ensure_social_node(fields[0])

    for line_no, fields in _data_lines(social_path):
        if len(fields) not in (2, 3):
            raise GraphFormatError(social_path, line_no, f"expected 2 or 3 columns, got {len(fields)}")
        if len(fields) == 3:
            try:
                day = int(fields[2])
            except ValueError:
                raise GraphFormatError(social_path, line_no, f"bad day stamp {fields[2]!r}") from None
            if until_day is not None and day > until_day:
                continue
        src, dst = fields[0], fields[1]
        if src == dst:
            raise GraphFormatError(social_path, line_no, f"self link on {src!r}")
        graph.add_social_link(graph.ensure_social_node(src), graph.ensure_social_node(dst))

    if attributes_path is not None and attributes_path.exists():
        for line_no, fields in _data_lines(attributes_path):
            if len(fields) != 3:
                raise GraphFormatError(attributes_path, line_no, f"expected 3 columns, got {len(fields)}")
            user = graph.ensure_social_node(fields[0])
            graph.add_attribute_link(user, graph.ensure_attribute_node(fields[1], fields[2]))

    logger.debug(
        f"Read SAN from {social_path}: {graph.n_social} social nodes, {graph.n_social_links} social links, "
        f"{graph.n_attribute} attribute nodes, {graph.n_attribute_links} attribute links"
    )
    return graph.freeze()


def _write_header(f, header: Optional[Dict[str, str]]) -> None:
    for key, value in (header or {}).items():
        f.write(f"# {key}={value}\n")


def write_san(graph: SanGraph, directory: Path, header: Optional[Dict[str, str]] = None) -> List[Path]:
    """Write social.tsv, attributes.tsv and nodes.tsv into directory."""
    directory.mkdir(parents=True, exist_ok=True)
    nodes_path = directory / NODES_FILE
    social_path = directory / SOCIAL_FILE
    attributes_path = directory / ATTRIBUTES_FILE

    with open(nodes_path, "w", encoding="utf-8", newline="\n") as f:
        _write_header(f, header)
        for u in range(graph.n_social):
            f.write(f"{graph.social_label(u)}\n")
    with open(social_path, "w", encoding="utf-8", newline="\n") as f:
        _write_header(f, header)
        for u, v in graph.social_edges():
            f.write(f"{graph.social_label(u)}\t{graph.social_label(v)}\n")
    with open(attributes_path, "w", encoding="utf-8", newline="\n") as f:
        _write_header(f, header)
        for u, a in graph.attribute_edges():
            attr_type, value = graph.attribute_label(a)
            f.write(f"{graph.social_label(u)}\t{attr_type}\t{value}\n")
    return [nodes_path, social_path, attributes_path]


def read_san_dir(directory: Path) -> SanGraph:
    """Read a directory written by write_san (or any directory holding social.tsv)."""
    directory = Path(directory)
    social = directory / SOCIAL_FILE
    if not social.exists():
        raise FileNotFoundError(f"{social} is missing")
    return read_san(social, directory / ATTRIBUTES_FILE, directory / NODES_FILE)


def read_event_log(path: Path) -> EventLog:
    """Parse `t<TAB>kind<TAB>args...` lines; slink lines may carry an origin column."""
    log = EventLog()
    for line_no, fields in _data_lines(path):
        if len(fields) < 3:
            raise GraphFormatError(path, line_no, "expected at least 3 columns")
        try:
            t = float(fields[0])
            kind = EventKind(fields[1])
        except ValueError as e:
            raise GraphFormatError(path, line_no, str(e)) from None
        args = fields[2:]
        if kind == EventKind.ARRIVE and len(args) == 1:
            log.append(Event.arrive(t, args[0]))
        elif kind == EventKind.ALINK and len(args) == 3:
            log.append(Event.alink(t, *args))
        elif kind == EventKind.SLINK and len(args) in (2, 3):
            origin = LinkOrigin(args[2]) if len(args) == 3 else None
            log.append(Event.slink(t, args[0], args[1], origin))
        else:
            raise GraphFormatError(path, line_no, f"bad arguments for {kind.value}: {args}")
    return log


def format_event(event: Event) -> str:
    fields = [repr(float(event.t)), event.kind.value, *event.args]
    if event.origin is not None:
        fields.append(event.origin.value)
    return "\t".join(fields)


def write_event_log(log: EventLog, path: Path, header: Optional[Dict[str, str]] = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        _write_header(f, header)
        for event in log:
            f.write(format_event(event) + "\n")
    return path


class GraphLoader(ABC):
    """Abstract base class for SAN sources."""

    @abstractmethod
    async def load(self) -> SanGraph:
        """Load the graph from the source."""
        pass

    @abstractmethod
    def get_metadata(self) -> Dict[str, Any]:
        """Get metadata about the graph source."""
        pass


class SnapshotDirLoader(GraphLoader):
    """Loader for one `snapshot-<index>/` directory of a snapshot series."""

    def __init__(self, directory: str):
        self.directory = Path(directory)

    @property
    def timestamp(self) -> int:
        return snapshot_index(self.directory)

    async def load(self) -> SanGraph:
        return await asyncio.to_thread(read_san_dir, self.directory)

    def get_metadata(self) -> Dict[str, Any]:
        return {
            "source_type": "snapshot",
            "source_path": str(self.directory),
            "content_hash": _content_hash(
                [self.directory / NODES_FILE, self.directory / SOCIAL_FILE, self.directory / ATTRIBUTES_FILE]
            ),
        }


class BatchSnapshotLoader:
    """Batch loader for reading several snapshots concurrently."""

    def __init__(self, max_concurrent: int = 4):
        self.max_concurrent = max_concurrent
        self.semaphore = asyncio.Semaphore(max_concurrent)

    async def load_graphs(self, loaders: List[GraphLoader]) -> List[Tuple[GraphLoader, Optional[SanGraph], Optional[str]]]:
        """
        Load every source concurrently.
        :return: (loader, graph or None, error message or None) in input order.
        """
        tasks = [self._load_with_semaphore(loader) for loader in loaders]
        results = await asyncio.gather(*tasks, return_exceptions=True)

        outcomes = []
        for loader, result in zip(loaders, results):
            if isinstance(result, Exception):
                message = f"{type(result).__name__}: {result}"
                logger.warning(f"Skipping {loader.get_metadata().get('source_path', loader)}: {message}")
                outcomes.append((loader, None, message))
            else:
                outcomes.append((loader, result, None))
        return outcomes

    async def _load_with_semaphore(self, loader: GraphLoader) -> SanGraph:
        """Load one graph with concurrency control."""
        async with self.semaphore:
            return await loader.load()


def snapshot_index(directory: Path) -> int:
    name = Path(directory).name
    prefix = "snapshot-"
    if not name.startswith(prefix) or not name[len(prefix):].isdigit():
        raise ValueError(f"not a snapshot directory name: {name}")
    return int(name[len(prefix):])


def snapshot_dir_name(index: int) -> str:
    return f"snapshot-{index:04d}"
