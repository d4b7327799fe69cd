"""Permutation sweep: policy x attack x deployment x adoption level x trial."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import platform
import random
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .policies import ROVPP_KINDS, PolicyAssignment, PolicyKind, PolicyOptions, build_registries
from .routing import ConvergenceError, Outcome, propagate, trace_all
from .scenarios import (
    DEFAULT_LEVELS,
    AdoptionLevel,
    AttackKind,
    eligible_ases,
    make_scenario,
    sample_adopters,
)
from .topology import ASGraph, DeploymentType, classify_deployment

log = logging.getLogger(__name__)

CSV_HEADER = (
    "scenario_cls",
    "AdoptingPolicyCls",
    "PolicyCls",
    "BasePolicyCls",
    "percent_adopt",
    "outcome",
    "value",
    "yerr",
    "deployment_type",
)
Z_90 = 1.645

SESSION_ONE_POLICIES = (PolicyKind.ROV, PolicyKind.ASPA, PolicyKind.PEER_ROV, PolicyKind.AS_CONES)


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class Combo:
    attack: AttackKind
    policy: PolicyKind
    deployment: DeploymentType

    @property
    def name(self) -> str:
        return f"{self.attack.value}__{self.policy.value}__{self.deployment.value}"


@dataclass
class SweepConfig:
    policies: Sequence[PolicyKind] = SESSION_ONE_POLICIES
    attacks: Sequence[AttackKind] = tuple(AttackKind)
    deployments: Sequence[DeploymentType] = tuple(DeploymentType)
    levels: Sequence[AdoptionLevel] = DEFAULT_LEVELS
    trials_per_level: int = 200
    master_seed: int = 0
    jobs: int = 1
    output_dir: Path | str = "results"
    options: PolicyOptions = field(default_factory=PolicyOptions)
    eligible: str = "edge"
    allow_rovpp_leak: bool = False

    def __post_init__(self):
        if self.trials_per_level < 1:
            raise ValueError("trials_per_level must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def combos(self) -> tuple[list[Combo], list[Combo]]:
        """(run, skipped) in deterministic order."""
        run, skipped = [], []
        for attack in self.attacks:
            for policy in self.policies:
                for dep in self.deployments:
                    c = Combo(attack, policy, dep)
                    if (
                        policy in ROVPP_KINDS
                        and attack is AttackKind.ACCIDENTAL_ROUTE_LEAK
                        and not self.allow_rovpp_leak
                    ):
                        skipped.append(c)
                    else:
                        run.append(c)
        return run, skipped

    def to_json(self) -> dict:
        # worker count is left out: it never changes results, and the output tree must not depend on it
        return {
            "policies": [p.value for p in self.policies],
            "scenarios": [a.value for a in self.attacks],
            "deployments": [d.value for d in self.deployments],
            "levels": [lv.label for lv in self.levels],
            "trials": self.trials_per_level,
            "seed": self.master_seed,
            "eligible": self.eligible,
            "allow_rovpp_leak": self.allow_rovpp_leak,
            "cone_check": self.options.cone_check,
            "v2_blackhole_to_all": self.options.v2_blackhole_to_all,
            "aspa_publish_all": self.options.aspa_publish_all,
        }


@dataclass(frozen=True)
class TrialRecord:
    """Outcome percentages over every non-attacker AS."""

    fractions: dict[Outcome, float]

    def __getitem__(self, outcome: Outcome) -> float:
        return self.fractions[outcome]


def trial_seed(master_seed: int, combo: Combo, level: AdoptionLevel, trial: int) -> int:
    # The policy is deliberately left out: every policy in a (attack,
    # deployment, level) cell faces the same victims, attackers and adopters.
    key = f"{master_seed}|{combo.attack.value}|{combo.deployment.value}|{level.label}|{trial}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def run_trial(
    graph: ASGraph,
    combo: Combo,
    level: AdoptionLevel,
    seed: int,
    *,
    options: PolicyOptions | None = None,
    eligible: str = "edge",
    deploy_set: frozenset[int] | None = None,
    eligible_set: Sequence[int] | None = None,
) -> TrialRecord:
    rng = random.Random(seed)
    if eligible_set is None:
        eligible_set = eligible_ases(graph, eligible)
    scenario = make_scenario(combo.attack, graph, rng, eligible_set)
    if deploy_set is None:
        deploy_set = classify_deployment(graph, combo.deployment)
    adopters = sample_adopters(deploy_set, level, rng, exclude={scenario.attacker})
    assignment = PolicyAssignment(adopters, combo.policy)
    reg = build_registries(graph, assignment, scenario.roas, options)
    ribs = propagate(graph, assignment, scenario, reg)
    outcomes = trace_all(graph, ribs, scenario)
    counts = dict.fromkeys(Outcome, 0)
    total = 0
    for asn, outcome in outcomes.items():
        if asn in scenario.attackers:
            continue
        counts[outcome] += 1
        total += 1
    return TrialRecord({o: 100.0 * counts[o] / total for o in Outcome})


def aggregate(records: Sequence[TrialRecord]) -> dict[Outcome, tuple[float, float]]:
    """Mean and 90% CI half-width per outcome; one trial gives yerr 0."""
    out = {}
    n = len(records)
    for o in Outcome:
        vals = [r[o] for r in records]
        mean = math.fsum(vals) / n
        yerr = Z_90 * statistics.stdev(vals) / math.sqrt(n) if n > 1 else 0.0
        out[o] = (mean, yerr)
    return out


_WORKER_GRAPH: ASGraph | None = None


def _init_worker(graph: ASGraph) -> None:
    global _WORKER_GRAPH
    _WORKER_GRAPH = graph


def _run_cell(args) -> tuple[list[TrialRecord], int]:
    combo, level, seeds, options, eligible, graph = args
    graph = graph if graph is not None else _WORKER_GRAPH
    deploy_set = classify_deployment(graph, combo.deployment)
    eligible_set = eligible_ases(graph, eligible)
    records, failed = [], 0
    for s in seeds:
        try:
            records.append(
                run_trial(
                    graph,
                    combo,
                    level,
                    s,
                    options=options,
                    eligible=eligible,
                    deploy_set=deploy_set,
                    eligible_set=eligible_set,
                )
            )
        except ConvergenceError as exc:
            log.warning("%s level %s: %s", combo.name, level.label, exc)
            failed += 1
    return records, failed


def format_float(x: float) -> str:
    return repr(float(x))


def combo_rows(combo: Combo, level: AdoptionLevel, agg) -> list[list[str]]:
    rows = []
    for o in Outcome:
        mean, yerr = agg[o]
        rows.append(
            [
                combo.attack.value,
                combo.policy.value,
                PolicyKind.BGP.value,
                PolicyKind.BGP.value,
                level.label,
                o.value,
                format_float(mean),
                format_float(yerr),
                combo.deployment.value,
            ]
        )
    return rows


def _check_writable(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path):
            pass
    except OSError as exc:
        raise SweepError(f"output directory {path} is not writable: {exc}") from exc


def run_sweep(config: SweepConfig, graph: ASGraph, dataset_hash: str | None = None) -> dict:
    """Execute every combo and write one CSV per combo plus ``manifest.json``.

    Returns the manifest.
    """
    out = Path(config.output_dir)
    _check_writable(out)
    run, skipped = config.combos()
    for c in skipped:
        log.warning("skipping %s: ROV++ policies are not run against route leaks", c.name)
    for dep in config.deployments:
        classify_deployment(graph, dep)  # fail fast on a missing clique

    cells = []
    for combo in run:
        for level in config.levels:
            seeds = [trial_seed(config.master_seed, combo, level, t) for t in range(config.trials_per_level)]
            cells.append((combo, level, seeds))

    if config.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=config.jobs, initializer=_init_worker, initargs=(graph,)
        ) as pool:
            results = list(
                pool.map(
                    _run_cell,
                    [(c, lv, s, config.options, config.eligible, None) for c, lv, s in cells],
                )
            )
    else:
        results = [_run_cell((c, lv, s, config.options, config.eligible, graph)) for c, lv, s in cells]

    failed: dict[str, int] = {}
    by_combo: dict[Combo, list[list[str]]] = {c: [] for c in run}
    for (combo, level, _), (records, n_failed) in zip(cells, results):
        if n_failed:
            failed[f"{combo.name}@{level.label}"] = n_failed
        if records:
            by_combo[combo].extend(combo_rows(combo, level, aggregate(records)))

    for i, combo in enumerate(run, start=1):
        with open(out / f"{combo.name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            w.writerows(by_combo[combo])
        log.info("[%d/%d] %s", i, len(run), combo.name)

    manifest = {
        "seed": config.master_seed,
        "dataset_sha256": dataset_hash,
        "graph": {"nodes": len(graph), **graph.edge_counts()},
        "config": config.to_json(),
        "versions": {"bgpdeploy": __version__, "python": platform.python_version()},
        "combos": [c.name for c in run],
        "skipped": [c.name for c in skipped],
        "failed_trials": failed,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def default_jobs() -> int:
    return os.cpu_count() or 1
