"""
Social-Attribute Network (SAN) data model.

A SAN holds directed social links between social nodes (users) and undirected
attribute links between a social node and an attribute node (e.g. Employer=Google).
Social and attribute nodes live in two separate dense integer id spaces; string
labels are kept alongside for ingested data and for the event log.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, NewType, Optional, Set, Tuple

import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)

SocialNodeId = NewType("SocialNodeId", int)
AttributeNodeId = NewType("AttributeNodeId", int)

# Attribute types are plain string labels; this is the default universe.
AttributeType = str
DEFAULT_ATTRIBUTE_TYPES: Tuple[AttributeType, ...] = ("School", "Major", "Employer", "City")


class NodeNotFound(KeyError):
    """Raised when a node id or label does not exist in the graph."""


class InvalidLinkError(ValueError):
    """Raised for self links or links between the wrong node classes."""


class FrozenGraphError(RuntimeError):
    """Raised when mutating a graph after freeze()."""


class NonMonotoneSnapshots(ValueError):
    """Raised when an earlier snapshot is not contained in a later one."""


class InvalidProbability(ValueError):
    pass


class SanValidationError(ValueError):
    """Raised by SanGraph.validate() when an invariant is broken."""


class EventKind(str, Enum):
    ARRIVE = "arrive"
    ALINK = "alink"
    SLINK = "slink"


class LinkOrigin(str, Enum):
    """Annotation carried by generated social link events."""

    INIT = "init"
    FIRST = "first"
    CLOSURE = "closure"


@dataclass(frozen=True)
class Event:
    """
    One link-creation event. Arguments are labels, not ids, so a log is
    independent of the id assignment of whoever replays it:
      arrive: (user,)
      alink:  (user, attr_type, attr_value)
      slink:  (src, dst)
    """

    t: float
    kind: EventKind
    args: Tuple[str, ...]
    origin: Optional[LinkOrigin] = None

    @classmethod
    def arrive(cls, t: float, user: str) -> "Event":
        return cls(t, EventKind.ARRIVE, (user,))

    @classmethod
    def alink(cls, t: float, user: str, attr_type: str, attr_value: str) -> "Event":
        return cls(t, EventKind.ALINK, (user, attr_type, attr_value))

    @classmethod
    def slink(cls, t: float, src: str, dst: str, origin: Optional[LinkOrigin] = None) -> "Event":
        return cls(t, EventKind.SLINK, (src, dst), origin)


class EventLog:
    """Ordered list of events; replaying it from an empty graph yields a valid SAN."""

    def __init__(self, events: Optional[Iterable[Event]] = None):
        self._events: List[Event] = list(events) if events is not None else []

    def append(self, event: Event) -> None:
        self._events.append(event)

    def extend(self, events: Iterable[Event]) -> None:
        self._events.extend(events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return EventLog(self._events[index])
        return self._events[index]

    def __eq__(self, other) -> bool:
        return isinstance(other, EventLog) and self._events == other._events

    def count(self, kind: EventKind) -> int:
        return sum(1 for e in self._events if e.kind == kind)


class SanGraph:
    """
    Mutable-until-frozen SAN.

    Social adjacency is kept as out- and in-sets plus an insertion-ordered
    neighbor list (Gamma_s) so uniform neighbor draws are O(1). Attribute links
    are stored on both sides.
    """

    def __init__(self, attribute_types: Iterable[AttributeType] = DEFAULT_ATTRIBUTE_TYPES):
        self._types: List[AttributeType] = []
        for attr_type in attribute_types:
            self.add_attribute_type(attr_type)

        self._social_labels: List[str] = []
        self._social_index: Dict[str, int] = {}
        self._out: List[Set[int]] = []
        self._in: List[Set[int]] = []
        self._nbrs: List[List[int]] = []
        self._attrs: List[List[int]] = []
        self._attr_set: List[Set[int]] = []

        self._attr_labels: List[Tuple[str, str]] = []
        self._attr_index: Dict[Tuple[str, str], int] = {}
        self._members: List[List[int]] = []

        self._n_social_links = 0
        self._n_attribute_links = 0
        self._frozen = False
        self._cache: Dict[str, object] = {}

    # ------------------------------------------------------------------ sizes
    @property
    def n_social(self) -> int:
        return len(self._social_labels)

    @property
    def n_attribute(self) -> int:
        return len(self._attr_labels)

    @property
    def n_social_links(self) -> int:
        return self._n_social_links

    @property
    def n_attribute_links(self) -> int:
        return self._n_attribute_links

    @property
    def attribute_types(self) -> Tuple[AttributeType, ...]:
        return tuple(self._types)

    @property
    def frozen(self) -> bool:
        return self._frozen

    # --------------------------------------------------------------- mutation
    def _check_mutable(self) -> None:
        if self._frozen:
            raise FrozenGraphError("SanGraph is frozen; copy() it before mutating")

    def add_attribute_type(self, attr_type: AttributeType) -> None:
        if attr_type not in self._types:
            self._types.append(attr_type)

    def add_social_node(self, label: Optional[str] = None) -> SocialNodeId:
        """
        Append a social node and return its id.
        :param label: external label; defaults to the decimal id.
        """
        self._check_mutable()
        node = len(self._social_labels)
        label = str(node) if label is None else label
        if label in self._social_index:
            raise InvalidLinkError(f"social node {label!r} already exists")
        self._social_labels.append(label)
        self._social_index[label] = node
        self._out.append(set())
        self._in.append(set())
        self._nbrs.append([])
        self._attrs.append([])
        self._attr_set.append(set())
        return SocialNodeId(node)

    def ensure_social_node(self, label: str) -> SocialNodeId:
        node = self._social_index.get(label)
        if node is None:
            return self.add_social_node(label)
        return SocialNodeId(node)

    def add_attribute_node(self, attr_type: AttributeType, value: Optional[str] = None) -> AttributeNodeId:
        self._check_mutable()
        node = len(self._attr_labels)
        value = f"{attr_type}:{node}" if value is None else value
        key = (attr_type, value)
        if key in self._attr_index:
            raise InvalidLinkError(f"attribute node {key!r} already exists")
        self.add_attribute_type(attr_type)
        self._attr_labels.append(key)
        self._attr_index[key] = node
        self._members.append([])
        return AttributeNodeId(node)

    def ensure_attribute_node(self, attr_type: AttributeType, value: str) -> AttributeNodeId:
        node = self._attr_index.get((attr_type, value))
        if node is None:
            return self.add_attribute_node(attr_type, value)
        return AttributeNodeId(node)

    def add_social_link(self, u: int, v: int) -> bool:
        """
        Add the directed social link (u, v).
        :return: False when the link was already present (no-op), True otherwise.
        """
        self._check_mutable()
        self._require_social(u)
        self._require_social(v)
        if u == v:
            raise InvalidLinkError(f"self social link on node {u}")
        if v in self._out[u]:
            return False
        reverse = u in self._out[v]
        self._out[u].add(v)
        self._in[v].add(u)
        if not reverse:
            # first link between the pair in either direction
            self._nbrs[u].append(v)
            self._nbrs[v].append(u)
        self._n_social_links += 1
        return True

    def add_attribute_link(self, u: int, a: int) -> bool:
        self._check_mutable()
        self._require_social(u)
        self._require_attribute(a)
        if a in self._attr_set[u]:
            return False
        self._attr_set[u].add(a)
        self._attrs[u].append(a)
        self._members[a].append(u)
        self._n_attribute_links += 1
        return True

    def apply(self, event: Event) -> bool:
        """Apply one event in place; returns False for an idempotent duplicate."""
        if event.kind == EventKind.ARRIVE:
            if event.args[0] in self._social_index:
                return False
            self.add_social_node(event.args[0])
            return True
        if event.kind == EventKind.ALINK:
            user, attr_type, value = event.args
            a = self.ensure_attribute_node(attr_type, value)
            return self.add_attribute_link(self.social_id(user), a)
        src, dst = event.args
        return self.add_social_link(self.social_id(src), self.social_id(dst))

    def freeze(self) -> "SanGraph":
        """Make the graph read-only so it can be shared by concurrent readers."""
        self._frozen = True
        return self

    def copy(self, include_attribute_links: bool = True) -> "SanGraph":
        """Unfrozen copy preserving every node id."""
        clone = SanGraph(self._types)
        for label in self._social_labels:
            clone.add_social_node(label)
        for attr_type, value in self._attr_labels:
            clone.add_attribute_node(attr_type, value)
        for u, v in self.social_edges():
            clone.add_social_link(u, v)
        if include_attribute_links:
            for u in range(self.n_social):
                for a in self._attrs[u]:
                    clone.add_attribute_link(u, a)
        return clone

    # ---------------------------------------------------------------- lookups
    def _require_social(self, u: int) -> None:
        if not 0 <= u < len(self._social_labels):
            raise NodeNotFound(f"social node {u}")

    def _require_attribute(self, a: int) -> None:
        if not 0 <= a < len(self._attr_labels):
            raise NodeNotFound(f"attribute node {a}")

    def social_label(self, u: int) -> str:
        self._require_social(u)
        return self._social_labels[u]

    def social_id(self, label: str) -> SocialNodeId:
        try:
            return SocialNodeId(self._social_index[label])
        except KeyError:
            raise NodeNotFound(f"social node {label!r}") from None

    def has_social_label(self, label: str) -> bool:
        return label in self._social_index

    def attribute_label(self, a: int) -> Tuple[str, str]:
        self._require_attribute(a)
        return self._attr_labels[a]

    def attribute_id(self, attr_type: AttributeType, value: str) -> AttributeNodeId:
        try:
            return AttributeNodeId(self._attr_index[(attr_type, value)])
        except KeyError:
            raise NodeNotFound(f"attribute node {attr_type}={value}") from None

    def has_attribute_label(self, attr_type: AttributeType, value: str) -> bool:
        return (attr_type, value) in self._attr_index

    def attribute_type(self, a: int) -> AttributeType:
        return self.attribute_label(a)[0]

    def attributes_of_type(self, attr_type: AttributeType) -> List[int]:
        return [a for a, (t, _) in enumerate(self._attr_labels) if t == attr_type]

    # Fast accessors: callers must not mutate the returned containers.
    def out_set(self, u: int) -> Set[int]:
        self._require_social(u)
        return self._out[u]

    def in_set(self, u: int) -> Set[int]:
        self._require_social(u)
        return self._in[u]

    def neighbor_list(self, u: int) -> List[int]:
        """Gamma_s(u) of a social node, each neighbor once, in first-contact order."""
        self._require_social(u)
        return self._nbrs[u]

    def attribute_list(self, u: int) -> List[int]:
        self._require_social(u)
        return self._attrs[u]

    def attribute_set(self, u: int) -> Set[int]:
        self._require_social(u)
        return self._attr_set[u]

    def members(self, a: int) -> List[int]:
        """Social neighbors of attribute node a."""
        self._require_attribute(a)
        return self._members[a]

    def has_social_link(self, u: int, v: int) -> bool:
        return v in self.out_set(u)

    def is_social_neighbor(self, u: int, v: int) -> bool:
        return v in self._out[u] or v in self._in[u]

    def out_degree(self, u: int) -> int:
        return len(self.out_set(u))

    def in_degree(self, u: int) -> int:
        return len(self.in_set(u))

    def out_degrees(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self._out), dtype=np.int64, count=self.n_social)

    def in_degrees(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self._in), dtype=np.int64, count=self.n_social)

    def neighbor_degrees(self) -> np.ndarray:
        return np.fromiter((len(n) for n in self._nbrs), dtype=np.int64, count=self.n_social)

    def attribute_degrees(self) -> np.ndarray:
        """Attribute degree of every social node."""
        return np.fromiter((len(a) for a in self._attrs), dtype=np.int64, count=self.n_social)

    def member_counts(self) -> np.ndarray:
        """Social degree of every attribute node."""
        return np.fromiter((len(m) for m in self._members), dtype=np.int64, count=self.n_attribute)

    def social_edges(self) -> Iterator[Tuple[int, int]]:
        """Directed social links in (src, dst) id order."""
        for u in range(self.n_social):
            for v in sorted(self._out[u]):
                yield u, v

    def attribute_edges(self) -> Iterator[Tuple[int, int]]:
        for u in range(self.n_social):
            for a in sorted(self._attrs[u]):
                yield u, a

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Social links as (src, dst) int64 arrays, cached once frozen."""
        cached = self._cache.get("edges")
        if cached is not None:
            return cached
        src = np.fromiter((u for u, _ in self.social_edges()), dtype=np.int64, count=self._n_social_links)
        dst = np.fromiter((v for _, v in self.social_edges()), dtype=np.int64, count=self._n_social_links)
        if self._frozen:
            self._cache["edges"] = (src, dst)
        return src, dst

    def social_csr(self) -> sparse.csr_matrix:
        """n x n adjacency of directed social links."""
        cached = self._cache.get("social_csr")
        if cached is not None:
            return cached
        src, dst = self.edge_arrays()
        n = self.n_social
        matrix = sparse.csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
        if self._frozen:
            self._cache["social_csr"] = matrix
        return matrix

    def neighbor_csr(self) -> sparse.csr_matrix:
        """Symmetric Gamma_s adjacency, one entry per neighbor pair direction."""
        cached = self._cache.get("neighbor_csr")
        if cached is not None:
            return cached
        adjacency = self.social_csr()
        matrix = ((adjacency + adjacency.T) > 0).astype(np.int8).tocsr()
        matrix.sort_indices()
        if self._frozen:
            self._cache["neighbor_csr"] = matrix
        return matrix

    def structure_key(self) -> Tuple:
        """Label-level fingerprint; equal keys mean equal graphs up to id assignment."""
        social = tuple(sorted(self._social_labels))
        attrs = tuple(sorted(self._attr_labels))
        slinks = tuple(sorted((self._social_labels[u], self._social_labels[v]) for u, v in self.social_edges()))
        alinks = tuple(sorted((self._social_labels[u],) + self._attr_labels[a] for u, a in self.attribute_edges()))
        return social, attrs, slinks, alinks

    def validate(self) -> None:
        """Check every SAN invariant; raises SanValidationError on the first violation."""
        n = self.n_social
        if len(self._social_index) != n or len(set(self._social_labels)) != n:
            raise SanValidationError("duplicate social labels")
        if len(set(self._types)) != len(self._types):
            raise SanValidationError("duplicate attribute type names")
        link_count = 0
        for u in range(n):
            if u in self._out[u]:
                raise SanValidationError(f"self link on {u}")
            for v in self._out[u]:
                if not 0 <= v < n:
                    raise SanValidationError(f"dangling social link ({u}, {v})")
                if u not in self._in[v]:
                    raise SanValidationError(f"in/out mismatch on ({u}, {v})")
            link_count += len(self._out[u])
            expected = self._out[u] | self._in[u]
            if len(self._nbrs[u]) != len(expected) or set(self._nbrs[u]) != expected:
                raise SanValidationError(f"neighbor list of {u} out of sync")
        if link_count != self._n_social_links:
            raise SanValidationError("social link counter out of sync")
        alink_count = 0
        for u in range(n):
            if len(self._attrs[u]) != len(self._attr_set[u]):
                raise SanValidationError(f"duplicate attribute link on {u}")
            for a in self._attrs[u]:
                if not 0 <= a < self.n_attribute:
                    raise SanValidationError(f"dangling attribute link ({u}, {a})")
            alink_count += len(self._attrs[u])
        if alink_count != self._n_attribute_links or alink_count != sum(len(m) for m in self._members):
            raise SanValidationError("attribute link counters out of sync")
        for a, members in enumerate(self._members):
            for u in members:
                if a not in self._attr_set[u]:
                    raise SanValidationError(f"membership mismatch on ({u}, {a})")


# ---------------------------------------------------------------- neighbor ops
def social_out_neighbors(g: SanGraph, u: int) -> Set[int]:
    return set(g.out_set(u))


def social_in_neighbors(g: SanGraph, u: int) -> Set[int]:
    return set(g.in_set(u))


def social_neighbors(g: SanGraph, node: int, of_attribute: bool = False) -> Set[int]:
    """
    Gamma_s of a social node (in- and out-neighbors), or the members of an
    attribute node when of_attribute is set.
    """
    if of_attribute:
        return set(g.members(node))
    return set(g.neighbor_list(node))


def attribute_neighbors(g: SanGraph, u: int) -> Set[int]:
    return set(g.attribute_set(u))


def common_attribute_count(g: SanGraph, u: int, v: int) -> int:
    a_u, a_v = g.attribute_set(u), g.attribute_set(v)
    if len(a_u) > len(a_v):
        a_u, a_v = a_v, a_u
    return sum(1 for a in a_u if a in a_v)


def common_social_neighbor_count(g: SanGraph, u: int, v: int) -> int:
    small, other = u, v
    if len(g.neighbor_list(u)) > len(g.neighbor_list(v)):
        small, other = v, u
    return sum(1 for w in g.neighbor_list(small) if g.is_social_neighbor(other, w))


# ------------------------------------------------------------ graph transforms
def subsample_attributes(g: SanGraph, keep_prob: float, seed: int, per_link: bool = False) -> SanGraph:
    """
    Drop attribute information at random.

    :param g: source graph (left untouched).
    :param keep_prob: probability that a user keeps their attributes.
    :param seed: RNG seed.
    :param per_link: decide per attribute link instead of per user.
    :return: new graph; social links and all node ids unchanged.
    """
    if not 0.0 <= keep_prob <= 1.0:
        raise InvalidProbability(f"keep_prob must lie in [0, 1], got {keep_prob}")
    rng = np.random.default_rng(seed)
    result = g.copy(include_attribute_links=False)
    kept_users = 0
    for u in range(g.n_social):
        attrs = g.attribute_list(u)
        if not attrs:
            continue
        if per_link:
            keep = rng.random(len(attrs)) < keep_prob
            for a, flag in zip(attrs, keep):
                if flag:
                    result.add_attribute_link(u, a)
            kept_users += int(keep.any())
        elif rng.random() < keep_prob:
            kept_users += 1
            for a in attrs:
                result.add_attribute_link(u, a)
    logger.debug(f"Subsampling kept attributes of {kept_users} users (keep_prob={keep_prob})")
    return result


def is_subgraph(g1: SanGraph, g2: SanGraph) -> bool:
    """True when every node and link of g1 appears (by label) in g2."""
    for u in range(g1.n_social):
        if not g2.has_social_label(g1.social_label(u)):
            return False
    for a in range(g1.n_attribute):
        if not g2.has_attribute_label(*g1.attribute_label(a)):
            return False
    for u, v in g1.social_edges():
        if not g2.has_social_link(g2.social_id(g1.social_label(u)), g2.social_id(g1.social_label(v))):
            return False
    for u, a in g1.attribute_edges():
        a2 = g2.attribute_id(*g1.attribute_label(a))
        if a2 not in g2.attribute_set(g2.social_id(g1.social_label(u))):
            return False
    return True


def diff_snapshots(g1: SanGraph, g2: SanGraph, t: float = 0.0) -> EventLog:
    """
    Events present in g2 but not in g1: arrivals, then attribute links, then social links.
    :raises NonMonotoneSnapshots: when g1 is not contained in g2.
    """
    if not is_subgraph(g1, g2):
        raise NonMonotoneSnapshots("earlier snapshot is not contained in the later one")
    log = EventLog()
    for u in range(g2.n_social):
        label = g2.social_label(u)
        if not g1.has_social_label(label):
            log.append(Event.arrive(t, label))
    for u, a in g2.attribute_edges():
        user = g2.social_label(u)
        attr_type, value = g2.attribute_label(a)
        if g1.has_social_label(user) and g1.has_attribute_label(attr_type, value):
            if g1.attribute_id(attr_type, value) in g1.attribute_set(g1.social_id(user)):
                continue
        log.append(Event.alink(t, user, attr_type, value))
    for u, v in g2.social_edges():
        src, dst = g2.social_label(u), g2.social_label(v)
        if g1.has_social_label(src) and g1.has_social_label(dst):
            if g1.has_social_link(g1.social_id(src), g1.social_id(dst)):
                continue
        log.append(Event.slink(t, src, dst))
    return log


def replay(events: Iterable[Event], base: Optional[SanGraph] = None,
           attribute_types: Iterable[AttributeType] = DEFAULT_ATTRIBUTE_TYPES) -> SanGraph:
    """Rebuild a graph by applying events to base (or to an empty graph)."""
    graph = base if base is not None else SanGraph(attribute_types)
    for event in events:
        graph.apply(event)
    return graph


def graph_to_events(g: SanGraph, t: float = 0.0) -> EventLog:
    """An event log whose replay from the empty graph reproduces g."""
    return diff_snapshots(SanGraph(g.attribute_types), g, t)
