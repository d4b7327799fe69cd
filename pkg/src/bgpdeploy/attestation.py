"""Trusted registries consulted by the defensive policies.

ROAs bind a prefix (up to a maximum length) to an origin AS; ASPA records
list the providers a customer AS has authorized.  Both are in-memory tables,
no cryptography is involved.
"""

from __future__ import annotations

import enum
import ipaddress
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .topology import ASGraph, Relationship

__all__ = [
    "Prefix",
    "ROA",
    "ASPARecord",
    "Validity",
    "Hop",
    "roa_validity",
    "aspa_hop",
    "aspa_validity",
    "aspa_index",
    "build_aspa_records",
    "dump_roas",
    "load_roas",
    "dump_aspa",
    "load_aspa",
]


@dataclass(frozen=True, order=True)
class Prefix:
    network: int
    length: int

    def __post_init__(self):
        if not 0 <= self.length <= 32:
            raise ValueError(f"prefix length {self.length} out of range")
        if not 0 <= self.network < 1 << 32:
            raise ValueError("network address out of range")
        host_mask = (1 << (32 - self.length)) - 1
        if self.network & host_mask:
            raise ValueError(f"host bits set in {self}")

    @classmethod
    def parse(cls, text: str) -> "Prefix":
        net = ipaddress.IPv4Network(text, strict=True)
        return cls(int(net.network_address), net.prefixlen)

    def covers(self, other: "Prefix") -> bool:
        if self.length > other.length:
            return False
        shift = 32 - self.length
        return (self.network >> shift) == (other.network >> shift) if shift < 32 else True

    def __str__(self) -> str:
        return f"{ipaddress.IPv4Address(self.network)}/{self.length}"


@dataclass(frozen=True, order=True)
class ROA:
    prefix: Prefix
    origin: int
    max_length: int

    def __post_init__(self):
        if not self.prefix.length <= self.max_length <= 32:
            raise ValueError(f"max_length {self.max_length} shorter than {self.prefix}")


@dataclass(frozen=True)
class ASPARecord:
    customer: int
    providers: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "providers", frozenset(self.providers))
        if self.customer in self.providers:
            raise ValueError(f"AS{self.customer} lists itself as a provider")


class Validity(str, enum.Enum):
    VALID = "Valid"
    INVALID = "Invalid"
    UNKNOWN = "Unknown"


def roa_validity(prefix: Prefix, origin: int, roas: Iterable[ROA]) -> Validity:
    covered = False
    for roa in roas:
        if not roa.prefix.covers(prefix):
            continue
        covered = True
        if roa.origin == origin and prefix.length <= roa.max_length:
            return Validity.VALID
    return Validity.INVALID if covered else Validity.UNKNOWN


class Hop(enum.Enum):
    PROVIDER_PLUS = "ProviderPlus"
    NOT_PROVIDER_PLUS = "NotProviderPlus"
    NO_ATTESTATION = "NoAttestation"


def aspa_index(records: Iterable[ASPARecord]) -> dict[int, frozenset[int]]:
    """customer -> authorized providers lookup table."""
    return {r.customer: r.providers for r in records}


def _as_index(records) -> Mapping[int, frozenset[int]]:
    if isinstance(records, Mapping):
        return records
    return aspa_index(records)


def aspa_hop(customer: int, provider: int, index: Mapping[int, frozenset[int]]) -> Hop:
    providers = index.get(customer)
    if providers is None:
        return Hop.NO_ATTESTATION
    return Hop.PROVIDER_PLUS if provider in providers else Hop.NOT_PROVIDER_PLUS


def aspa_validity(
    path: Sequence[int],
    from_rel: Relationship | None,
    records: Iterable[ASPARecord] | Mapping[int, frozenset[int]],
) -> Validity:
    """ASPA path verification using up-ramp / down-ramp lengths.

    ``path[0]`` is the neighbor that sent the route, ``path[-1]`` the origin.
    Routes from customers and peers must be a pure up-ramp; routes from a
    provider may be an up-ramp followed by a down-ramp.  Ramp lengths count
    ASes, so a one-AS path is trivially Valid.
    """
    index = _as_index(records)
    seq = list(reversed(path))  # origin first
    n = len(seq)
    if n == 0:
        raise ValueError("empty AS path")

    # Leading hops from the origin end: how far the path can be an up-ramp.
    max_up = min_up = n
    for i in range(n - 1):
        h = aspa_hop(seq[i], seq[i + 1], index)
        if h is not Hop.PROVIDER_PLUS and min_up == n:
            min_up = i + 1
        if h is Hop.NOT_PROVIDER_PLUS:
            max_up = i + 1
            break

    if from_rel is None or from_rel is not Relationship.PROVIDER:
        if max_up < n:
            return Validity.INVALID
        if min_up < n:
            return Validity.UNKNOWN
        return Validity.VALID

    # Trailing hops from the neighbor end, read in the reverse direction.
    max_down = min_down = n
    for j in range(n - 1, 0, -1):
        h = aspa_hop(seq[j], seq[j - 1], index)
        if h is not Hop.PROVIDER_PLUS and min_down == n:
            min_down = n - j
        if h is Hop.NOT_PROVIDER_PLUS:
            max_down = n - j
            break

    if max_up + max_down < n:
        return Validity.INVALID
    if min_up + min_down < n:
        return Validity.UNKNOWN
    return Validity.VALID


def build_aspa_records(graph: ASGraph, adopters: Iterable[int]) -> frozenset[ASPARecord]:
    return frozenset(ASPARecord(a, frozenset(graph.providers(a))) for a in adopters)


def dump_roas(roas: Iterable[ROA]) -> str:
    return json.dumps(
        [{"prefix": str(r.prefix), "origin": r.origin, "maxLength": r.max_length} for r in sorted(roas)],
        indent=2,
    )


def load_roas(text: str) -> frozenset[ROA]:
    return frozenset(
        ROA(Prefix.parse(d["prefix"]), int(d["origin"]), int(d["maxLength"])) for d in json.loads(text)
    )


def dump_aspa(records: Iterable[ASPARecord]) -> str:
    return json.dumps(
        [
            {"customer": r.customer, "providers": sorted(r.providers)}
            for r in sorted(records, key=lambda r: r.customer)
        ],
        indent=2,
    )


def load_aspa(text: str) -> frozenset[ASPARecord]:
    return frozenset(
        ASPARecord(int(d["customer"]), frozenset(int(p) for p in d["providers"])) for d in json.loads(text)
    )
