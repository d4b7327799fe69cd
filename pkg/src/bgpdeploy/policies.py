"""Per-AS routing policies.

Each policy is three pure hooks the propagation engine calls:

* :func:`ingress_accept` filters an announcement a neighbor sent;
* :func:`rib_react` lets ROV++ adopters turn a rejected subprefix hijack into
  a local blackhole entry;
* :func:`egress_transform` rewrites or suppresses what an AS exports.

All mutable state lives in the engine's RIBs; :class:`Registries` is the
read-only context (ROAs, ASPA table, graph for customer cones).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Mapping

from .attestation import ROA, Validity, aspa_index, aspa_validity, build_aspa_records, roa_validity
from .topology import ASGraph, Relationship, customer_cone

if TYPE_CHECKING:
    from .routing import Announcement

__all__ = [
    "PolicyKind",
    "PolicyAssignment",
    "PolicyOptions",
    "Registries",
    "build_registries",
    "ingress_accept",
    "rib_react",
    "egress_transform",
    "export_allowed",
    "ROVPP_KINDS",
]


class PolicyKind(str, enum.Enum):
    BGP = "BGP"
    ROV = "ROV"
    PEER_ROV = "PeerROV"
    ASPA = "ASPA"
    AS_CONES = "ASCones"
    ROVPP_V1_LITE = "ROVPPv1Lite"
    ROVPP_V2_LITE = "ROVPPv2Lite"
    ROVPP_V2_IMPROVED_LITE = "ROVPPv2ImprovedLite"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        for member in cls:
            if text in (member.value, member.name) or text.lower() == member.value.lower():
                return member
        raise ValueError(f"unknown policy {text!r}")


ROVPP_KINDS = frozenset(
    {PolicyKind.ROVPP_V1_LITE, PolicyKind.ROVPP_V2_LITE, PolicyKind.ROVPP_V2_IMPROVED_LITE}
)
_ROV_BASED = frozenset({PolicyKind.ROV, PolicyKind.ASPA, PolicyKind.AS_CONES}) | ROVPP_KINDS


@dataclass(frozen=True)
class PolicyAssignment:
    adopters: frozenset[int]
    adopted_kind: PolicyKind
    base_kind: PolicyKind = PolicyKind.BGP

    def kind_of(self, asn: int) -> PolicyKind:
        return self.adopted_kind if asn in self.adopters else self.base_kind

    @classmethod
    def baseline(cls) -> "PolicyAssignment":
        return cls(frozenset(), PolicyKind.BGP)


@dataclass(frozen=True)
class PolicyOptions:
    """Switches for behaviour the literature leaves open.

    ``cone_check``: AS-Cones adopters also drop customer routes whose origin is
    outside that customer's cone.  ``v2_blackhole_to_all``: ROVPPv2Lite
    exports blackholes wherever export rules allow, not only to customers.
    ``aspa_publish_all``: every adopter publishes an ASPA record whatever its
    policy (default: only ASPA adopters publish).
    """

    cone_check: bool = True
    v2_blackhole_to_all: bool = False
    aspa_publish_all: bool = False


@dataclass
class Registries:
    roas: frozenset[ROA]
    aspa: Mapping[int, frozenset[int]] = field(default_factory=dict)
    graph: ASGraph | None = None
    options: PolicyOptions = field(default_factory=PolicyOptions)
    _rov_cache: dict = field(default_factory=dict, repr=False)

    def rov(self, ann: "Announcement") -> Validity:
        key = (ann.prefix, ann.as_path[-1])
        v = self._rov_cache.get(key)
        if v is None:
            v = self._rov_cache[key] = roa_validity(ann.prefix, ann.as_path[-1], self.roas)
        return v

    def is_subprefix_hijack(self, ann: "Announcement") -> bool:
        """ROA-invalid and strictly more specific than some ROA'd prefix."""
        if self.rov(ann) is not Validity.INVALID:
            return False
        return any(
            r.prefix.length < ann.prefix.length and r.prefix.covers(ann.prefix) for r in self.roas
        )


def build_registries(
    graph: ASGraph,
    assignment: PolicyAssignment,
    roas: Iterable[ROA],
    options: PolicyOptions | None = None,
) -> Registries:
    options = options or PolicyOptions()
    if assignment.adopted_kind is PolicyKind.ASPA or (options.aspa_publish_all and assignment.adopters):
        aspa = aspa_index(build_aspa_records(graph, assignment.adopters))
    else:
        aspa = {}
    return Registries(frozenset(roas), aspa, graph, options)


def export_allowed(learned_from: Relationship | None, to: Relationship) -> bool:
    """Gao-Rexford export rule; ``None`` means the route was seeded locally."""
    if learned_from is None or learned_from is Relationship.CUSTOMER:
        return True
    return to is Relationship.CUSTOMER


def ingress_accept(
    kind: PolicyKind, ann: "Announcement", from_rel: Relationship, reg: Registries
) -> bool:
    if kind is PolicyKind.BGP:
        return True
    if kind is PolicyKind.PEER_ROV:
        return not (from_rel is Relationship.PEER and reg.rov(ann) is Validity.INVALID)
    if kind in _ROV_BASED and reg.rov(ann) is Validity.INVALID:
        return False
    if kind is PolicyKind.ASPA:
        return aspa_validity(ann.as_path, from_rel, reg.aspa) is not Validity.INVALID
    if kind is PolicyKind.AS_CONES:
        sender = ann.as_path[0]
        if ann.otc is not None:
            if from_rel is Relationship.CUSTOMER:
                return False
            # a peer may legitimately stamp its own ASN on the way over
            if from_rel is Relationship.PEER and ann.otc != sender:
                return False
        if reg.options.cone_check and from_rel is Relationship.CUSTOMER and reg.graph is not None:
            if ann.as_path[-1] not in customer_cone(reg.graph, sender):
                return False
    return True


def rib_react(
    kind: PolicyKind,
    ann: "Announcement",
    reg: Registries,
    covering: "Announcement | None" = None,
) -> "Announcement | None":
    """Blackhole entry an ROV++ adopter installs for a rejected announcement.

    Only subprefix hijacks qualify.  ``covering`` is the adopter's most
    specific route for a less specific prefix.  The hole is installed when
    that route leads back to the neighbor that sent the hijack (traffic would
    reach the attacker anyway) or when no covering route is held at all.
    """
    if kind not in ROVPP_KINDS:
        return None
    if not reg.is_subprefix_hijack(ann):
        return None
    if covering is not None and (covering.seeded or covering.as_path[0] != ann.as_path[0]):
        return None
    return replace(ann, blackhole=True, otc=None, seeded=False)


def egress_transform(
    kind: PolicyKind,
    asn: int,
    ann: "Announcement",
    to: Relationship,
    reg: Registries,
    *,
    leaking: bool = False,
) -> "Announcement | None":
    """What ``asn`` sends to a neighbor with role ``to``, or ``None``.

    Applies the export rule (skipped when ``leaking``), the policy's own
    rewrite, and the AS-path prepend.
    """
    learned_from = None if ann.seeded else ann.from_rel
    if ann.blackhole and kind in ROVPP_KINDS:
        if kind is PolicyKind.ROVPP_V1_LITE:
            return None
        if kind is PolicyKind.ROVPP_V2_LITE and not reg.options.v2_blackhole_to_all:
            if to is not Relationship.CUSTOMER:
                return None
        if not export_allowed(learned_from, to):
            return None
    elif not leaking and not export_allowed(learned_from, to):
        return None

    otc = ann.otc
    if kind is PolicyKind.AS_CONES:
        if otc is not None and to is not Relationship.CUSTOMER:
            return None
        if otc is None and to is not Relationship.PROVIDER:
            otc = asn

    path = ann.as_path if ann.as_path[0] == asn else (asn,) + ann.as_path
    return type(ann)(ann.prefix, path, to.inverse, None if ann.blackhole else otc, ann.blackhole, False)
