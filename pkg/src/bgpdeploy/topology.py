"""AS-level topology: CAIDA serial-2 parsing, propagation ranks, deployment sets.

The relationship file format is one link per line::

    <as1>|<as2>|<rel>[|<source>]

where ``rel`` is ``-1`` (as1 is a provider of as2) or ``0`` (peers).  Lines
starting with ``#`` are comments; ``# input clique: 174 209 ...`` (or CAIDA's
own ``# inferred clique:``) names the core ASes.
"""

from __future__ import annotations

import enum
import json
import re
from collections import deque
from typing import Iterable, Mapping

__all__ = [
    "Relationship",
    "DeploymentType",
    "ASGraph",
    "ParseError",
    "TopologyError",
    "ConfigurationError",
    "parse_caida",
    "load_caida",
    "classify_deployment",
    "customer_cone",
    "graph_stats",
]


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class TopologyError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


class Relationship(enum.IntEnum):
    """Role of a neighbor relative to the local AS.

    Integer order doubles as route preference: customer routes beat peer
    routes beat provider routes.
    """

    PROVIDER = 1
    PEER = 2
    CUSTOMER = 3

    @property
    def inverse(self) -> "Relationship":
        return _INVERSE[self]

    @property
    def label(self) -> str:
        return self.name.capitalize()


_INVERSE = {
    Relationship.PROVIDER: Relationship.CUSTOMER,
    Relationship.CUSTOMER: Relationship.PROVIDER,
    Relationship.PEER: Relationship.PEER,
}


class DeploymentType(str, enum.Enum):
    INPUT_CLIQUE = "InputClique"
    STUBS = "Stubs"
    MULTIHOMED = "Multihomed"
    NO_DEPLOYMENT_TYPE = "NoDeploymentType"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "DeploymentType":
        for member in cls:
            if text in (member.value, member.name):
                return member
        raise ValueError(f"unknown deployment type {text!r}")


class ASGraph:
    """Immutable provider/customer/peer graph.

    Neighbor tuples are sorted by AS number so every iteration over the graph
    is deterministic.  ``propagation_rank`` is 0 for ASes without customers
    and otherwise one more than the largest rank among its customers.
    """

    __slots__ = (
        "_customers",
        "_peers",
        "_providers",
        "_rank",
        "input_clique",
        "_nodes",
        "_by_rank",
        "_cone_cache",
    )

    def __init__(
        self,
        customers: Mapping[int, Iterable[int]],
        peers: Mapping[int, Iterable[int]],
        providers: Mapping[int, Iterable[int]],
        input_clique: Iterable[int] = (),
    ):
        nodes = set(customers) | set(peers) | set(providers)
        self._customers = {a: tuple(sorted(customers.get(a, ()))) for a in nodes}
        self._peers = {a: tuple(sorted(peers.get(a, ()))) for a in nodes}
        self._providers = {a: tuple(sorted(providers.get(a, ()))) for a in nodes}
        self._nodes = tuple(sorted(nodes))
        self.input_clique = frozenset(input_clique)
        self._check_symmetry()
        self._rank = _compute_ranks(self._nodes, self._customers, self._providers)
        self._by_rank = tuple(sorted(self._nodes, key=lambda a: (self._rank[a], a)))
        self._cone_cache: dict[int, frozenset[int]] = {}

    def _check_symmetry(self) -> None:
        for a in self._nodes:
            for c in self._customers[a]:
                if a not in self._providers[c]:
                    raise TopologyError(f"asymmetric p2c edge {a}->{c}")
            for p in self._peers[a]:
                if a not in self._peers[p]:
                    raise TopologyError(f"asymmetric p2p edge {a}-{p}")

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, asn: object) -> bool:
        return asn in self._customers

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ASGraph):
            return NotImplemented
        return (
            self._customers == other._customers
            and self._peers == other._peers
            and self.input_clique == other.input_clique
        )

    def __hash__(self) -> int:
        return hash((self._nodes, len(self.input_clique)))

    def __repr__(self) -> str:
        return f"ASGraph({len(self._nodes)} ASes, clique={len(self.input_clique)})"

    def customers(self, asn: int) -> tuple[int, ...]:
        return self._customers[asn]

    def peers(self, asn: int) -> tuple[int, ...]:
        return self._peers[asn]

    def providers(self, asn: int) -> tuple[int, ...]:
        return self._providers[asn]

    def neighbors(self, asn: int) -> list[tuple[int, Relationship]]:
        return (
            [(c, Relationship.CUSTOMER) for c in self._customers[asn]]
            + [(p, Relationship.PEER) for p in self._peers[asn]]
            + [(p, Relationship.PROVIDER) for p in self._providers[asn]]
        )

    def relationship(self, asn: int, neighbor: int) -> Relationship:
        """Role of ``neighbor`` as seen from ``asn``."""
        if neighbor in self._customers[asn]:
            return Relationship.CUSTOMER
        if neighbor in self._providers[asn]:
            return Relationship.PROVIDER
        if neighbor in self._peers[asn]:
            return Relationship.PEER
        raise KeyError(f"AS{neighbor} is not adjacent to AS{asn}")

    def propagation_rank(self, asn: int) -> int:
        return self._rank[asn]

    @property
    def by_rank(self) -> tuple[int, ...]:
        """Nodes in ascending (rank, asn) order."""
        return self._by_rank

    def edge_counts(self) -> dict[str, int]:
        p2c = sum(len(c) for c in self._customers.values())
        p2p = sum(len(p) for p in self._peers.values()) // 2
        return {"p2c": p2c, "p2p": p2p}

    def with_input_clique(self, clique: Iterable[int]) -> "ASGraph":
        g = ASGraph(self._customers, self._peers, self._providers, clique)
        return g

    def to_caida(self) -> str:
        """Serialize back to the serial-2 text format."""
        lines = []
        if self.input_clique:
            lines.append("# input clique: " + " ".join(map(str, sorted(self.input_clique))))
        for a in self._nodes:
            for c in self._customers[a]:
                lines.append(f"{a}|{c}|-1")
            for p in self._peers[a]:
                if a < p:
                    lines.append(f"{a}|{p}|0")
        return "\n".join(lines) + "\n"


def _compute_ranks(nodes, customers, providers) -> dict[int, int]:
    # Kahn's algorithm from the leaves upward; leftovers mean a p2c cycle.
    pending = {a: len(customers[a]) for a in nodes}
    rank = {a: 0 for a in nodes}
    queue = deque(a for a in nodes if pending[a] == 0)
    done = 0
    while queue:
        a = queue.popleft()
        done += 1
        for p in providers[a]:
            if rank[a] + 1 > rank[p]:
                rank[p] = rank[a] + 1
            pending[p] -= 1
            if pending[p] == 0:
                queue.append(p)
    if done != len(nodes):
        stuck = sorted(a for a in nodes if pending[a] > 0)
        raise TopologyError(
            f"provider->customer cycle among {len(stuck)} ASes, e.g. AS{stuck[0]}"
        )
    return rank


_CLIQUE_RE = re.compile(r"^#\s*(?:input|inferred)\s+clique:\s*(.*)$", re.IGNORECASE)


def parse_caida(text: str, input_clique: Iterable[int] | None = None) -> ASGraph:
    """Build an :class:`ASGraph` from serial-2 text.

    ``input_clique`` overrides whatever the header declares.  Header-declared
    clique members are checked to be present and pairwise peered.
    """
    customers: dict[int, set[int]] = {}
    peers: dict[int, set[int]] = {}
    providers: dict[int, set[int]] = {}
    seen: dict[tuple[int, int], tuple[int, int, int]] = {}
    header_clique: list[int] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _CLIQUE_RE.match(line)
            if m:
                try:
                    header_clique = [int(x) for x in m.group(1).split()]
                except ValueError:
                    raise ParseError(lineno, "non-integer ASN in clique header") from None
            continue
        fields = line.split("|")
        if len(fields) not in (3, 4):
            raise ParseError(lineno, f"expected 3 or 4 fields, got {len(fields)}")
        try:
            a, b, rel = int(fields[0]), int(fields[1]), int(fields[2])
        except ValueError:
            raise ParseError(lineno, f"non-integer field in {line!r}") from None
        if a <= 0 or b <= 0:
            raise ParseError(lineno, "AS numbers must be positive")
        if a == b:
            raise ParseError(lineno, f"self-link on AS{a}")
        if rel not in (-1, 0):
            raise ParseError(lineno, f"unknown relationship code {rel}")

        key = (min(a, b), max(a, b))
        norm = (a, b, rel) if rel == -1 else (key[0], key[1], 0)
        prev = seen.get(key)
        if prev is not None:
            if prev != norm:
                raise ParseError(lineno, f"conflicting relationship for AS{a}-AS{b}")
            continue
        seen[key] = norm

        for asn in (a, b):
            customers.setdefault(asn, set())
            peers.setdefault(asn, set())
            providers.setdefault(asn, set())
        if rel == -1:
            customers[a].add(b)
            providers[b].add(a)
        else:
            peers[a].add(b)
            peers[b].add(a)

    if input_clique is not None:
        clique = set(input_clique)
        missing = clique - customers.keys()
        if missing:
            raise ConfigurationError(f"input clique override names unknown ASes {sorted(missing)}")
    elif header_clique is not None:
        clique = set(header_clique)
        missing = clique - customers.keys()
        if missing:
            raise TopologyError(f"clique header names unknown ASes {sorted(missing)}")
        for a in clique:
            for b in clique:
                if a < b and b not in peers[a]:
                    raise TopologyError(f"clique members AS{a} and AS{b} are not peers")
    else:
        clique = set()

    return ASGraph(customers, peers, providers, clique)


def load_caida(path, input_clique: Iterable[int] | None = None) -> ASGraph:
    import bz2
    import gzip

    path = str(path)
    if path.endswith(".bz2"):
        opener = bz2.open
    elif path.endswith(".gz"):
        opener = gzip.open
    else:
        opener = open
    with opener(path, "rt", encoding="utf-8") as fh:
        return parse_caida(fh.read(), input_clique)


def classify_deployment(graph: ASGraph, kind: DeploymentType | str) -> frozenset[int]:
    kind = DeploymentType.parse(kind) if isinstance(kind, str) else kind
    if kind is DeploymentType.INPUT_CLIQUE:
        if not graph.input_clique:
            raise ConfigurationError(
                "input clique requested but the topology declares none; supply an override"
            )
        return graph.input_clique
    if kind is DeploymentType.NO_DEPLOYMENT_TYPE:
        return frozenset(graph.nodes)
    stubs, multihomed = [], []
    for a in graph.nodes:
        if graph.customers(a):
            continue
        n_prov, n_peer = len(graph.providers(a)), len(graph.peers(a))
        if n_prov == 1 and n_peer == 0:
            stubs.append(a)
        elif n_prov >= 2 or n_peer >= 1:
            multihomed.append(a)
    return frozenset(stubs if kind is DeploymentType.STUBS else multihomed)


def customer_cone(graph: ASGraph, asn: int) -> frozenset[int]:
    """Every AS reachable over provider->customer edges, ``asn`` included."""
    if asn not in graph:
        raise KeyError(f"AS{asn} not in graph")
    cached = graph._cone_cache.get(asn)
    if cached is not None:
        return cached
    cone = {asn}
    stack = [asn]
    while stack:
        for c in graph.customers(stack.pop()):
            if c not in cone:
                cone.add(c)
                stack.append(c)
    result = frozenset(cone)
    graph._cone_cache[asn] = result
    return result


def graph_stats(graph: ASGraph) -> dict:
    stats = {"nodes": len(graph), **graph.edge_counts()}
    sizes = {}
    for kind in DeploymentType:
        try:
            sizes[kind.value] = len(classify_deployment(graph, kind))
        except ConfigurationError:
            sizes[kind.value] = 0
    stats["deployment_sizes"] = sizes
    stats["max_rank"] = max((graph.propagation_rank(a) for a in graph.nodes), default=0)
    return stats


def dumps_stats(graph: ASGraph) -> str:
    return json.dumps(graph_stats(graph), indent=2, sort_keys=True)
