"""Attack setups and adopter sampling for a single trial."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .attestation import ROA, Prefix
from .routing import Announcement
from .topology import ASGraph, DeploymentType, classify_deployment

__all__ = [
    "AttackKind",
    "AdoptionLevel",
    "ScenarioConfig",
    "ScenarioError",
    "DEFAULT_LEVELS",
    "VICTIM_PREFIX",
    "SUBPREFIX",
    "eligible_ases",
    "make_scenario",
    "adopter_count",
    "sample_adopters",
]

VICTIM_PREFIX = Prefix.parse("1.2.0.0/16")
SUBPREFIX = Prefix.parse("1.2.3.0/24")


class ScenarioError(ValueError):
    pass


class AttackKind(str, enum.Enum):
    ACCIDENTAL_ROUTE_LEAK = "AccidentalRouteLeak"
    PREFIX_HIJACK = "PrefixHijack"
    SUBPREFIX_HIJACK = "SubprefixHijack"
    FORGED_ORIGIN_PREFIX_HIJACK = "ForgedOriginPrefixHijack"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "AttackKind":
        for member in cls:
            if text in (member.value, member.name) or text.lower() == member.value.lower():
                return member
        raise ValueError(f"unknown scenario {text!r}")


@dataclass(frozen=True)
class AdoptionLevel:
    """``fraction`` is ``None`` for the single-adopter level."""

    fraction: Fraction | None

    def __post_init__(self):
        if self.fraction is not None:
            f = Fraction(self.fraction)
            if not 0 < f <= 1:
                raise ValueError(f"adoption fraction {f} outside (0, 1]")
            object.__setattr__(self, "fraction", f)

    @classmethod
    def only_one(cls) -> "AdoptionLevel":
        return cls(None)

    @classmethod
    def percent(cls, pct) -> "AdoptionLevel":
        return cls(Fraction(str(pct)) / 100)

    @classmethod
    def parse(cls, text: str) -> "AdoptionLevel":
        t = str(text).strip()
        if t.lower().replace("_", "") in ("onlyone", "one"):
            return cls.only_one()
        if t.endswith("%"):
            return cls.percent(t[:-1])
        value = Fraction(t)
        if "." in t and value <= 1:
            return cls(value)
        return cls.percent(t)

    @property
    def is_only_one(self) -> bool:
        return self.fraction is None

    @property
    def label(self) -> str:
        if self.fraction is None:
            return "only_one"
        pct = self.fraction * 100
        return str(pct.numerator) if pct.denominator == 1 else str(float(pct))

    def __str__(self) -> str:
        return self.label

    def count(self, set_size: int) -> int:
        if self.fraction is None:
            return 1
        f = self.fraction
        return -(-f.numerator * set_size // f.denominator)


DEFAULT_LEVELS = (
    AdoptionLevel.only_one(),
    AdoptionLevel.percent(10),
    AdoptionLevel.percent(20),
    AdoptionLevel.percent(40),
    AdoptionLevel.percent(80),
    AdoptionLevel.percent(99),
)


def adopter_count(set_size: int, level: AdoptionLevel) -> int:
    return level.count(set_size)


def sample_adopters(
    deploy_set: Iterable[int],
    level: AdoptionLevel,
    rng: random.Random,
    exclude: Iterable[int] = (),
) -> frozenset[int]:
    """Draw the adopting ASes; the count is taken from the full deployment set."""
    members = sorted(set(deploy_set))
    if not members:
        raise ScenarioError("empty deployment set")
    wanted = level.count(len(members))
    excluded = set(exclude)
    pool = [a for a in members if a not in excluded]
    return frozenset(rng.sample(pool, min(wanted, len(pool))))


@dataclass(frozen=True)
class ScenarioConfig:
    kind: AttackKind
    victim: int
    attacker: int
    victim_prefix: Prefix
    attack_prefix: Prefix
    roas: frozenset[ROA]
    rounds: int

    def __post_init__(self):
        if self.victim == self.attacker:
            raise ScenarioError("victim and attacker must differ")
        sub = self.kind is AttackKind.SUBPREFIX_HIJACK
        if sub != (self.attack_prefix != self.victim_prefix):
            raise ScenarioError("attack prefix must differ from the victim's only for subprefix hijacks")
        if sub and not (
            self.victim_prefix.covers(self.attack_prefix)
            and self.attack_prefix.length > self.victim_prefix.length
        ):
            raise ScenarioError("subprefix must lie strictly inside the victim prefix")

    @property
    def attackers(self) -> frozenset[int]:
        return frozenset((self.attacker,))

    @property
    def seeds(self) -> tuple[tuple[int, Announcement], ...]:
        seeds = [(self.victim, Announcement(self.victim_prefix, (self.victim,), seeded=True))]
        if self.kind is AttackKind.PREFIX_HIJACK:
            seeds.append((self.attacker, Announcement(self.victim_prefix, (self.attacker,), seeded=True)))
        elif self.kind is AttackKind.SUBPREFIX_HIJACK:
            seeds.append((self.attacker, Announcement(self.attack_prefix, (self.attacker,), seeded=True)))
        elif self.kind is AttackKind.FORGED_ORIGIN_PREFIX_HIJACK:
            seeds.append(
                (self.attacker, Announcement(self.victim_prefix, (self.attacker, self.victim), seeded=True))
            )
        return tuple(seeds)

    def leakers(self, round_no: int) -> tuple[tuple[int, Prefix], ...]:
        if self.kind is AttackKind.ACCIDENTAL_ROUTE_LEAK and round_no == 2:
            return ((self.attacker, self.victim_prefix),)
        return ()


def eligible_ases(graph: ASGraph, mode: str = "edge") -> list[int]:
    if mode == "all":
        return list(graph.nodes)
    if mode != "edge":
        raise ValueError(f"unknown eligibility mode {mode!r}")
    edge = classify_deployment(graph, DeploymentType.STUBS) | classify_deployment(
        graph, DeploymentType.MULTIHOMED
    )
    return sorted(edge)


def make_scenario(
    kind: AttackKind,
    graph: ASGraph,
    rng: random.Random,
    eligible: Iterable[int] | None = None,
) -> ScenarioConfig:
    pool = sorted(set(eligible)) if eligible is not None else eligible_ases(graph)
    if len(pool) < 2:
        raise ScenarioError(f"need at least 2 eligible ASes, have {len(pool)}")
    victim, attacker = rng.sample(pool, 2)
    attack_prefix = SUBPREFIX if kind is AttackKind.SUBPREFIX_HIJACK else VICTIM_PREFIX
    roas = frozenset({ROA(VICTIM_PREFIX, victim, VICTIM_PREFIX.length)})
    rounds = 2 if kind is AttackKind.ACCIDENTAL_ROUTE_LEAK else 1
    return ScenarioConfig(kind, victim, attacker, VICTIM_PREFIX, attack_prefix, roas, rounds)
