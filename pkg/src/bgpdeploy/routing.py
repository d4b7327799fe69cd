"""Announcement model, route selection, propagation and data-plane tracing."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol

from .attestation import Prefix
from .policies import (
    ROVPP_KINDS,
    PolicyAssignment,
    PolicyKind,
    Registries,
    egress_transform,
    export_allowed,
    ingress_accept,
    rib_react,
)
from .topology import ASGraph, Relationship

__all__ = [
    "Announcement",
    "Outcome",
    "ConvergenceError",
    "prefer",
    "preference_key",
    "export_allowed",
    "propagate",
    "trace_outcome",
    "trace_all",
    "dump_ribs",
]

LocalRIB = dict  # Prefix -> Announcement


@dataclass(frozen=True, slots=True)
class Announcement:
    prefix: Prefix
    as_path: tuple[int, ...]
    from_rel: Relationship | None = None
    otc: int | None = None
    blackhole: bool = False
    seeded: bool = False

    def __post_init__(self):
        if not self.as_path:
            raise ValueError("empty AS path")

    @property
    def origin(self) -> int:
        return self.as_path[-1]

    @property
    def next_hop(self) -> int:
        return self.as_path[0]


class Outcome(str, enum.Enum):
    ATTACKER_SUCCESS = "ATTACKER_SUCCESS"
    VICTIM_SUCCESS = "VICTIM_SUCCESS"
    DISCONNECTED = "DISCONNECTED"

    def __str__(self) -> str:
        return self.value


class ConvergenceError(RuntimeError):
    def __init__(self, prefix: Prefix, rounds: int):
        super().__init__(f"no convergence for {prefix} after {rounds} rounds")
        self.prefix = prefix
        self.rounds = rounds


class ScenarioLike(Protocol):
    victim: int
    attack_prefix: Prefix
    rounds: int

    @property
    def attackers(self) -> frozenset[int]: ...

    @property
    def seeds(self) -> tuple[tuple[int, Announcement], ...]: ...

    def leakers(self, round_no: int) -> Iterable[tuple[int, Prefix]]: ...


def preference_key(ann: Announcement) -> tuple:
    """Smaller is better: seeded, then relationship, path length, first hop."""
    if ann.seeded:
        return (0,)
    return (1, -ann.from_rel, len(ann.as_path), ann.as_path[0])


def prefer(current: Announcement | None, candidate: Announcement) -> Announcement:
    if current is None:
        return candidate
    return candidate if preference_key(candidate) < preference_key(current) else current


_UP, _ACROSS, _DOWN = 1, 2, 4
_ALL = _UP | _ACROSS | _DOWN


class _Engine:
    def __init__(self, graph: ASGraph, assignment: PolicyAssignment, reg: Registries):
        self.graph = graph
        self.reg = reg
        self.adopters = assignment.adopters
        self.adopted = assignment.adopted_kind
        self.base = assignment.base_kind
        nodes = graph.nodes
        self.local: dict[int, dict[Prefix, Announcement]] = {a: {} for a in nodes}
        # asn -> prefix -> sender -> (announcement, accepted)
        self.adjin: dict[int, dict[Prefix, dict[int, tuple[Announcement, bool]]]] = {a: {} for a in nodes}
        self.seeded: dict[int, dict[Prefix, Announcement]] = {}
        self.exported: dict[int, set[Prefix]] = {a: set() for a in nodes}
        self.leaking: dict[int, set[Prefix]] = {}
        self.dirty: dict[int, int] = dict.fromkeys(nodes, 0)
        self.changed = False
        self.last_changed: Prefix | None = None

    def kind(self, asn: int) -> PolicyKind:
        return self.adopted if asn in self.adopters else self.base

    def seed(self, asn: int, ann: Announcement) -> None:
        if asn not in self.local:
            raise KeyError(f"seed AS{asn} not in graph")
        self.seeded.setdefault(asn, {})[ann.prefix] = ann
        self._set_best(asn, ann.prefix, ann)

    def _set_best(self, asn: int, prefix: Prefix, ann: Announcement | None) -> None:
        rib = self.local[asn]
        if rib.get(prefix) == ann:
            return
        if ann is None:
            del rib[prefix]
        else:
            rib[prefix] = ann
        self.dirty[asn] = _ALL
        self.changed = True
        self.last_changed = prefix
        if self.kind(asn) in ROVPP_KINDS:
            # hole decisions for more specific prefixes depend on this route
            seeds = self.seeded.get(asn, {})
            for q in self.adjin[asn]:
                if q.length > prefix.length and prefix.covers(q) and q not in seeds:
                    self._recompute(asn, q)

    def _recompute(self, asn: int, prefix: Prefix) -> None:
        table = self.adjin[asn].get(prefix, {})
        best = None
        best_key = None
        for ann, ok in table.values():
            if ok:
                k = (-ann.from_rel, len(ann.as_path), ann.as_path[0])
                if best_key is None or k < best_key:
                    best, best_key = ann, k
        if best is None:
            kind = self.kind(asn)
            if kind in ROVPP_KINDS:
                covering = _lookup_shorter(self.local[asn], prefix)
                for ann, ok in table.values():
                    if not ok:
                        hole = rib_react(kind, ann, self.reg, covering)
                        if hole is not None:
                            k = (-ann.from_rel, len(ann.as_path), ann.as_path[0])
                            if best_key is None or k < best_key:
                                best, best_key = hole, k
        self._set_best(asn, prefix, best)

    def receive(self, asn: int, sender: int, prefix: Prefix, ann: Announcement | None) -> None:
        table = self.adjin[asn].setdefault(prefix, {})
        old = table.get(sender)
        if ann is not None and asn in ann.as_path:
            ann = None
        if ann is None:
            if old is None:
                return
            del table[sender]
            ok = False
        else:
            if old is not None and old[0] == ann:
                return
            ok = ingress_accept(self.kind(asn), ann, ann.from_rel, self.reg)
            table[sender] = (ann, ok)

        seeds = self.seeded.get(asn)
        if seeds is not None and prefix in seeds:
            return
        cur = self.local[asn].get(prefix)
        if cur is not None and not cur.blackhole and cur.as_path[0] != sender:
            if ok:
                if (-ann.from_rel, len(ann.as_path), ann.as_path[0]) < (
                    -cur.from_rel,
                    len(cur.as_path),
                    cur.as_path[0],
                ):
                    self._set_best(asn, prefix, ann)
            return
        self._recompute(asn, prefix)

    def export(self, asn: int, targets: tuple[int, ...], to: Relationship) -> None:
        rib = self.local[asn]
        sent = self.exported[asn]
        prefixes = set(rib) | sent
        if not prefixes:
            return
        kind = self.kind(asn)
        leaking = self.leaking.get(asn, ())
        reg = self.reg
        for prefix in sorted(prefixes):
            best = rib.get(prefix)
            if best is None:
                out = None
            else:
                out = egress_transform(kind, asn, best, to, reg, leaking=prefix in leaking)
            if out is not None:
                sent.add(prefix)
            for n in targets:
                self.receive(n, asn, prefix, out)

    def run_round(self) -> None:
        g = self.graph
        dirty = self.dirty
        for asn in g.by_rank:
            if dirty[asn] & _UP:
                dirty[asn] &= ~_UP
                self.export(asn, g.providers(asn), Relationship.PROVIDER)
        for asn in g.nodes:
            if dirty[asn] & _ACROSS:
                dirty[asn] &= ~_ACROSS
                self.export(asn, g.peers(asn), Relationship.PEER)
        for asn in reversed(g.by_rank):
            if dirty[asn] & _DOWN:
                dirty[asn] &= ~_DOWN
                self.export(asn, g.customers(asn), Relationship.CUSTOMER)


def propagate(
    graph: ASGraph,
    assignment: PolicyAssignment,
    scenario: ScenarioLike,
    registries: Registries | None = None,
    *,
    hard_limit: int = 10,
) -> dict[int, dict[Prefix, Announcement]]:
    """Run rank-ordered UP/ACROSS/DOWN sweeps until no RIB changes.

    At least ``scenario.rounds`` rounds run; more follow while anything
    changes, up to ``hard_limit`` (or ``scenario.rounds`` if larger).
    """
    if registries is None:
        from .policies import build_registries

        registries = build_registries(graph, assignment, getattr(scenario, "roas", ()))
    eng = _Engine(graph, assignment, registries)
    for asn, ann in scenario.seeds:
        eng.seed(asn, ann)
    limit = max(hard_limit, scenario.rounds)
    round_no = 0
    while True:
        round_no += 1
        for asn, prefix in scenario.leakers(round_no):
            eng.leaking.setdefault(asn, set()).add(prefix)
            eng.dirty[asn] = _ALL
        eng.changed = False
        eng.run_round()
        if round_no >= scenario.rounds and not eng.changed:
            break
        if round_no >= limit:
            raise ConvergenceError(eng.last_changed, round_no)
    return eng.local


def _lookup(rib: Mapping[Prefix, Announcement], target: Prefix) -> Announcement | None:
    best = None
    for prefix, ann in rib.items():
        if prefix.covers(target) and (best is None or prefix.length > best.prefix.length):
            best = ann
    return best


def _lookup_shorter(rib: Mapping[Prefix, Announcement], target: Prefix) -> Announcement | None:
    best = None
    for prefix, ann in rib.items():
        if prefix.length < target.length and prefix.covers(target):
            if best is None or prefix.length > best.prefix.length:
                best = ann
    return best


def trace_outcome(
    graph: ASGraph,
    ribs: Mapping[int, Mapping[Prefix, Announcement]],
    start: int,
    scenario: ScenarioLike,
) -> Outcome:
    """Follow forwarding entries for the attacked prefix starting at ``start``."""
    attackers = scenario.attackers
    target = scenario.attack_prefix
    seen = set()
    asn = start
    while True:
        if asn in attackers:
            return Outcome.ATTACKER_SUCCESS
        if asn == scenario.victim:
            return Outcome.VICTIM_SUCCESS
        if asn in seen:
            return Outcome.DISCONNECTED
        seen.add(asn)
        entry = _lookup(ribs[asn], target)
        if entry is None or entry.blackhole or entry.seeded:
            return Outcome.DISCONNECTED
        asn = entry.as_path[0]


def trace_all(
    graph: ASGraph,
    ribs: Mapping[int, Mapping[Prefix, Announcement]],
    scenario: ScenarioLike,
) -> dict[int, Outcome]:
    """Outcome for every AS; forwarding is a function of the AS, so walks share results."""
    attackers = scenario.attackers
    victim = scenario.victim
    target = scenario.attack_prefix
    result: dict[int, Outcome] = {}
    for start in graph.nodes:
        if start in result:
            continue
        walk = []
        on_walk = set()
        asn = start
        while True:
            if asn in result:
                outcome = result[asn]
                break
            if asn in attackers:
                outcome = Outcome.ATTACKER_SUCCESS
                break
            if asn == victim:
                outcome = Outcome.VICTIM_SUCCESS
                break
            if asn in on_walk:
                outcome = Outcome.DISCONNECTED
                break
            walk.append(asn)
            on_walk.add(asn)
            entry = _lookup(ribs[asn], target)
            if entry is None or entry.blackhole or entry.seeded:
                outcome = Outcome.DISCONNECTED
                break
            asn = entry.as_path[0]
        for a in walk:
            result[a] = outcome
        if start not in result:
            result[start] = outcome
    return result


def dump_ribs(ribs: Mapping[int, Mapping[Prefix, Announcement]]) -> str:
    out = {}
    for asn in sorted(ribs):
        entries = {}
        for prefix in sorted(ribs[asn]):
            ann = ribs[asn][prefix]
            entries[str(prefix)] = {
                "path": list(ann.as_path),
                "from_rel": ann.from_rel.label if ann.from_rel is not None else None,
                "otc": ann.otc,
                "blackhole": ann.blackhole,
                "seeded": ann.seeded,
            }
        out[str(asn)] = entries
    return json.dumps(out, indent=1, sort_keys=False)
