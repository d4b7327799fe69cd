"""Command line entry point: ``bgpdeploy {topo,gen-topo,run,simulate,analyze,plot}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from .policies import PolicyKind, PolicyOptions
from .scenarios import DEFAULT_LEVELS, AdoptionLevel, AttackKind
from .topology import ConfigurationError, DeploymentType, ParseError, TopologyError, load_caida

log = logging.getLogger("bgpdeploy")

ENV_TOPOLOGY = "BGPDEPLOY_TOPOLOGY"

CONFIG_KEYS = {
    "topology",
    "input_clique",
    "output_dir",
    "policies",
    "scenarios",
    "deployments",
    "levels",
    "trials",
    "seed",
    "jobs",
    "eligible",
    "cone_check",
    "v2_blackhole_to_all",
    "aspa_publish_all",
    "allow_rovpp_leak",
}


class UsageError(Exception):
    pass


def _vocab() -> str:
    return (
        "vocabularies:\n"
        f"  policies:    {', '.join(p.value for p in PolicyKind)}\n"
        f"  scenarios:   {', '.join(a.value for a in AttackKind)}\n"
        f"  deployments: {', '.join(d.value for d in DeploymentType)}\n"
        f"  levels:      {', '.join(lv.label for lv in DEFAULT_LEVELS)} (or any percent in (0, 100])\n"
    )


def _split(value) -> list[str]:
    if isinstance(value, str):
        return [v for v in (s.strip() for s in value.split(",")) if v]
    return [str(v) for v in value]


def _parse_list(value, parser, what):
    try:
        return [parser(v) for v in _split(value)]
    except (ValueError, ArithmeticError) as exc:
        raise UsageError(f"bad {what}: {exc}") from None


def _load_graph(path, clique=None):
    if path is None:
        path = os.environ.get(ENV_TOPOLOGY)
    if path is None:
        raise UsageError("no topology given (use --topology or set " + ENV_TOPOLOGY + ")")
    if not Path(path).is_file():
        raise UsageError(f"cannot read topology file {path}")
    try:
        return load_caida(path, clique)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None


def cmd_topo(args) -> int:
    from .topology import graph_stats

    if not Path(args.caida).is_file():
        raise UsageError(f"cannot read {args.caida}")
    clique = [int(x) for x in _split(args.input_clique)] if args.input_clique else None
    graph = load_caida(args.caida, clique)
    stats = graph_stats(graph)
    if not args.stats:
        stats = {k: stats[k] for k in ("nodes", "p2c", "p2p")}
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def cmd_gen_topo(args) -> int:
    from .synthetic import hierarchical

    graph = hierarchical(args.size, args.seed)
    Path(args.out).write_text(graph.to_caida(), encoding="utf-8")
    return 0


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(cfg) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    return cfg


def build_sweep_config(args):
    from .experiment import SESSION_ONE_POLICIES, SweepConfig, default_jobs

    cfg = _read_config(args.config)
    flags = {
        "topology": args.topology,
        "output_dir": args.out,
        "policies": args.policies,
        "scenarios": args.scenarios,
        "deployments": args.deployments,
        "levels": args.levels,
        "trials": args.trials,
        "seed": args.seed,
        "jobs": args.jobs,
    }
    cfg.update({k: v for k, v in flags.items() if v is not None})
    if "output_dir" not in cfg:
        raise UsageError("--out is required")

    def _bool(key, default):
        v = cfg.get(key, default)
        if not isinstance(v, bool):
            raise UsageError(f"{key} must be true or false")
        return v

    def _int(key, default, minimum):
        try:
            v = int(cfg.get(key, default))
        except (TypeError, ValueError):
            raise UsageError(f"{key} must be an integer") from None
        if v < minimum:
            raise UsageError(f"{key} must be >= {minimum}")
        return v

    eligible = cfg.get("eligible", "edge")
    if eligible not in ("edge", "all"):
        raise UsageError("eligible must be 'edge' or 'all'")
    config = SweepConfig(
        policies=_parse_list(cfg.get("policies", [p.value for p in SESSION_ONE_POLICIES]), PolicyKind.parse, "policy"),
        attacks=_parse_list(cfg.get("scenarios", [a.value for a in AttackKind]), AttackKind.parse, "scenario"),
        deployments=_parse_list(
            cfg.get("deployments", [d.value for d in DeploymentType]), DeploymentType.parse, "deployment"
        ),
        levels=_parse_list(cfg.get("levels", [lv.label for lv in DEFAULT_LEVELS]), AdoptionLevel.parse, "level"),
        trials_per_level=_int("trials", 200, 1),
        master_seed=_int("seed", 0, 0),
        jobs=_int("jobs", default_jobs(), 1),
        output_dir=Path(cfg["output_dir"]),
        options=PolicyOptions(
            cone_check=_bool("cone_check", True),
            v2_blackhole_to_all=_bool("v2_blackhole_to_all", False),
            aspa_publish_all=_bool("aspa_publish_all", False),
        ),
        eligible=eligible,
        allow_rovpp_leak=_bool("allow_rovpp_leak", False),
    )
    clique = cfg.get("input_clique")
    if clique is not None:
        clique = _parse_list(clique, int, "input clique ASN")
    return config, cfg.get("topology"), clique


def cmd_run(args) -> int:
    from .experiment import run_sweep, sha256_file

    config, topo_path, clique = build_sweep_config(args)
    graph = _load_graph(topo_path, clique)
    try:
        manifest = run_sweep(config, graph, sha256_file(topo_path or os.environ[ENV_TOPOLOGY]))
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None
    for name in manifest["skipped"]:
        print(f"warning: skipped {name} (ROV++ x route leak)", file=sys.stderr)
    if manifest["failed_trials"]:
        print(f"warning: failed trials {manifest['failed_trials']}", file=sys.stderr)
    print(json.dumps({"combos": len(manifest["combos"]), "output_dir": str(config.output_dir)}))
    return 0


def cmd_simulate(args) -> int:
    import random

    from .experiment import Combo, run_trial
    from .policies import PolicyAssignment, build_registries
    from .routing import dump_ribs, propagate, trace_all
    from .scenarios import eligible_ases, make_scenario, sample_adopters
    from .topology import classify_deployment

    try:
        combo = Combo(AttackKind.parse(args.scenario), PolicyKind.parse(args.policy), DeploymentType.parse(args.deployment))
        level = AdoptionLevel.parse(args.level)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    graph = _load_graph(args.topology)
    record = run_trial(graph, combo, level, args.seed)
    print(json.dumps({o.value: v for o, v in record.fractions.items()}, indent=2))
    if args.dump_rib:
        # replay the same trial to capture its RIBs
        rng = random.Random(args.seed)
        scenario = make_scenario(combo.attack, graph, rng, eligible_ases(graph))
        adopters = sample_adopters(classify_deployment(graph, combo.deployment), level, rng, {scenario.attacker})
        assignment = PolicyAssignment(adopters, combo.policy)
        ribs = propagate(graph, assignment, scenario, build_registries(graph, assignment, scenario.roas))
        Path(args.dump_rib).write_text(dump_ribs(ribs), encoding="utf-8")
        counts = Counter(o.value for o in trace_all(graph, ribs, scenario).values())
        log.info("victim AS%d attacker AS%d outcomes %s", scenario.victim, scenario.attacker, dict(counts))
    return 0


def cmd_analyze(args) -> int:
    from .analysis import SchemaError, combine_csv, summarize, write_table

    try:
        table = combine_csv(args.input)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_table(table, args.out)
    if args.summary:
        summarize(table).to_csv(args.summary, index=False, lineterminator="\n")
    print(json.dumps({"rows": len(table), "out": str(args.out)}))
    return 0


def cmd_plot(args) -> int:
    from .analysis import SchemaError, read_table
    from .plotting import render_all

    try:
        table = read_table(args.input)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if table.empty:
        print("warning: empty table, nothing to plot", file=sys.stderr)
        return 0
    written = render_all(args.kind, table, args.out)
    print(json.dumps({"figures": len(written), "out": str(args.out)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .plotting import PLOT_KINDS

    p = argparse.ArgumentParser(
        prog="bgpdeploy",
        description="Simulate BGP defensive policies against routing attacks under varied deployments.",
        epilog=_vocab(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("topo", help="print topology summary as JSON")
    t.add_argument("--caida", required=True, help="serial-2 AS relationship file")
    t.add_argument("--stats", action="store_true", help="include deployment-set sizes")
    t.add_argument("--input-clique", help="comma separated override")
    t.set_defaults(func=cmd_topo)

    g = sub.add_parser("gen-topo", help="write a synthetic hierarchical topology")
    g.add_argument("--size", type=int, default=2000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_topo)

    r = sub.add_parser(
        "run", help="run the permutation sweep", epilog=_vocab(), formatter_class=argparse.RawDescriptionHelpFormatter
    )
    r.add_argument("--config", help="JSON run configuration")
    r.add_argument("--topology", help=f"serial-2 file (default ${ENV_TOPOLOGY})")
    r.add_argument("--out", help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int, help="trials per adoption level")
    r.add_argument("--jobs", type=int)
    r.add_argument("--policies", help="comma separated: " + ",".join(x.value for x in PolicyKind))
    r.add_argument("--scenarios", help="comma separated: " + ",".join(x.value for x in AttackKind))
    r.add_argument("--deployments", help="comma separated: " + ",".join(x.value for x in DeploymentType))
    r.add_argument("--levels", help="comma separated: " + ",".join(lv.label for lv in DEFAULT_LEVELS))
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="run one trial and optionally dump its RIBs")
    s.add_argument("--topology")
    s.add_argument("--policy", required=True)
    s.add_argument("--scenario", required=True)
    s.add_argument("--deployment", default=DeploymentType.NO_DEPLOYMENT_TYPE.value)
    s.add_argument("--level", default="10")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dump-rib", help="write the converged RIBs as JSON")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="combine per-combo CSVs")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--summary", help="also write summary statistics here")
    a.set_defaults(func=cmd_analyze)

    pl = sub.add_parser("plot", help="render SVG figures from a combined CSV")
    pl.add_argument("--in", dest="input", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--kind", default="all", choices=PLOT_KINDS + ("all",))
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, TopologyError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # engine or IO failure
        log.debug("unhandled", exc_info=True)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
