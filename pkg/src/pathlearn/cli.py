"""Command-line entry point: ``pathlearn <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 capacity exceeded, 3 file I/O.
``PATHLEARN_SEED`` sets the default seed; everything else comes from flags.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .asgn import compute_wmin_wmax, compute_wmin_wmax_transitive, random_asgn
from .discrete_cbn import ENUMERATION_CAP, compute_gamma, compute_gamma_transitive, random_discrete_cbn
from .errors import CapacityError, GenerationError, PathLearnError
from .experiments import (
    ExperimentConfig,
    curve_svg,
    run_benchmark_recovery,
    run_census,
    run_phase_transition,
)
from .graph import random_tr_dag
from .learner import learn_structure, learn_tr, plan_samples
from .model_io import (
    NamedNetwork,
    export_dot,
    load_network,
    named,
    serialize_network,
    write_curve_csv,
    write_edge_list,
    write_rows_csv,
)
from .queries import (
    AsgnSampler,
    CbnSampler,
    ContinuousPathQuery,
    ContinuousTransitiveQuery,
    DiscretePathQuery,
    DiscreteTransitiveQuery,
    PathOracle,
    TransitiveOracle,
    path_query_continuous,
    path_query_discrete,
    path_query_discrete_imperfect,
    transitive_query_continuous,
    transitive_query_discrete,
)

SEED_ENV = "PATHLEARN_SEED"
EXIT_OK, EXIT_INVALID, EXIT_CAPACITY, EXIT_IO = 0, 1, 2, 3


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise PathLearnError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _node(net: NamedNetwork, label: str) -> int:
    if label in net.node_names:
        return net.index(label)
    try:
        k = int(label)
    except ValueError:
        raise PathLearnError(f"unknown node {label!r}") from None
    if not 0 <= k < net.payload.n:
        raise PathLearnError(f"node index {k} out of range")
    return k


# --------------------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    g = random_tr_dag(args.n, args.density, args.seed)
    if args.kind == "discrete":
        payload = random_discrete_cbn(g, args.r_max, args.gamma_floor, args.seed)
    else:
        payload = random_asgn(g, args.seed)
    _write(args.output, serialize_network(named(payload, args.name)))
    return EXIT_OK


def _discrete_constants(args, cbn):
    gamma = args.gamma if args.gamma is not None else compute_gamma(cbn).value
    gamma_t = args.gamma if args.gamma is not None else compute_gamma_transitive(cbn).value
    return gamma, gamma_t


def cmd_learn(args) -> int:
    net = load_network(args.network)
    n = net.payload.n
    notes: dict = {"regime": args.regime}
    with_transitive = not args.reduction_only
    delta_phase = args.delta / 2 if with_transitive else args.delta

    if args.oracle:
        report = learn_structure(n, PathOracle(net.dag), TransitiveOracle(net.dag) if with_transitive else None)
        notes["oracle"] = True
    elif net.kind == "discrete":
        cbn = net.payload
        imperfect = args.regime == "discrete-imperfect"
        if args.regime not in ("discrete", "discrete-imperfect"):
            raise PathLearnError(f"regime {args.regime!r} does not fit a discrete network")
        gamma, gamma_t = _discrete_constants(args, cbn)
        r = cbn.r
        k = max((len(cbn.parents(j)) for j in range(n)), default=0)
        if args.m_override is not None:
            m, mt = args.m_override, args.m_override
        else:
            plan = plan_samples(
                args.regime, n, delta_phase, gamma=gamma, r=r,
                alpha=args.alpha if imperfect else None,
            )
            m = plan.m_per_distribution
            mt = plan_samples(
                "transitive-discrete", n, delta_phase, gamma=gamma_t, r=r, max_parents=k
            ).m_per_distribution
        sampler = CbnSampler(cbn, success=args.phi if imperfect else None)
        th = gamma if args.threshold == "gamma" else None
        query = DiscretePathQuery(sampler, m, gamma, th, args.seed, imperfect=imperfect, batched=args.batched)
        tquery = None
        if with_transitive:
            th_t = gamma_t if args.threshold == "gamma" else None
            tquery = DiscreteTransitiveQuery(CbnSampler(cbn), mt, gamma_t, th_t, args.seed)
        notes.update(gamma=gamma, gamma_transitive=gamma_t, m_path=m, m_transitive=mt)
        if imperfect and with_transitive:
            notes["transitive_interventions"] = "perfect"
        report = learn_structure(n, query, tquery)
    else:
        a = net.payload
        if args.regime not in ("continuous", "continuous-imperfect"):
            raise PathLearnError(f"regime {args.regime!r} does not fit a linear network")
        consts = compute_wmin_wmax(a)
        consts_t = compute_wmin_wmax_transitive(a)
        sigma_ub = args.sigma_ub if args.sigma_ub is not None else consts.sigma_ub
        if args.m_override is not None:
            m = mt = args.m_override
        else:
            m = plan_samples(args.regime, n, delta_phase, sigma_ub=sigma_ub, w_min=consts.w_min).m_per_distribution
            mt = plan_samples(
                "transitive-continuous", n, delta_phase,
                sigma_ub=args.sigma_ub if args.sigma_ub is not None else consts_t.sigma_ub,
                w_min=consts_t.w_min,
            ).m_per_distribution
        spread = a.noise_variances if args.regime == "continuous-imperfect" else None
        query = ContinuousPathQuery(AsgnSampler(a, spread=spread), m, consts.z, args.seed, batched=args.batched)
        tquery = ContinuousTransitiveQuery(AsgnSampler(a), mt, consts_t.z, 0.0, args.seed) if with_transitive else None
        notes.update(z=consts.z, sigma_ub=sigma_ub, m_path=m, m_transitive=mt)
        if spread is not None and with_transitive:
            notes["transitive_interventions"] = "perfect"
        report = learn_structure(n, query, tquery)

    report.notes.update(notes)
    report.with_truth(net.dag)
    _write(args.dot, export_dot(report.learned, net.node_names, title=net.name))
    if args.report:
        _write(args.report, json.dumps(report.to_dict(), indent=1) + "\n")
    if args.edges:
        _write(args.edges, write_edge_list(report.learned))
    return EXIT_OK


def cmd_query(args) -> int:
    net = load_network(args.network)
    i, j = _node(net, args.i), _node(net, args.j)
    S = [_node(net, s) for s in args.S.split(",")] if args.S else []
    if net.kind == "discrete":
        gamma = args.gamma if args.gamma is not None else (
            compute_gamma_transitive(net.payload).value if S else compute_gamma(net.payload).value
        )
        if args.phi is not None:
            out = path_query_discrete_imperfect(CbnSampler(net.payload, success=args.phi), i, j, args.m, gamma, seed=args.seed)
        elif S:
            out = transitive_query_discrete(
                CbnSampler(net.payload), i, j, S, args.m, gamma, seed=args.seed, cap=args.cap
            )
        else:
            out = path_query_discrete(CbnSampler(net.payload), i, j, args.m, gamma, seed=args.seed)
    else:
        consts = (compute_wmin_wmax_transitive if S else compute_wmin_wmax)(net.payload)
        z = args.z if args.z is not None else consts.z
        if z is None:
            raise PathLearnError("w_min vanishes; pass --z explicitly")
        if S:
            out = transitive_query_continuous(AsgnSampler(net.payload), i, j, S, args.m, 0.0, z, args.seed)
        else:
            out = path_query_continuous(AsgnSampler(net.payload), i, j, args.m, z, args.seed)
    print(json.dumps({"i": i, "j": j, "S": S, "answer": int(out.answer),
                      "samples_used": out.samples_used, "max_gap": out.max_gap}))
    return EXIT_OK


def cmd_census(args) -> int:
    result = run_census(args.networks)
    _write(args.output, write_rows_csv(["network", "V", "E", "RE", "ratio", "note"], result.table()))
    return EXIT_OK


def _load_config(path: str) -> ExperimentConfig:
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(raw.decode("utf-8"))
    else:
        data = json.loads(raw)
    return ExperimentConfig.from_mapping(data)


def cmd_phase(args) -> int:
    config = _load_config(args.config) if args.config else ExperimentConfig()
    if args.seed_given:
        config.seed = args.seed
    if config.kind == "census":
        return cmd_census(argparse.Namespace(networks=config.networks, output=args.output))
    if config.kind == "benchmark-recovery":
        reports = []
        for src in config.networks:
            rep = run_benchmark_recovery(
                load_network(src), config.mode, config.delta, config.seed, config.m_override,
                "gamma" if config.threshold is not None else "half", config.batched,
            )
            reports.append(rep.to_dict())
        _write(args.output, json.dumps(reports, indent=1) + "\n")
        return EXIT_OK

    def progress(row):
        if args.verbose:
            print(f"n={row.n} C={row.C:g} m={row.m} {row.successes}/{row.trials}", file=sys.stderr)

    rows = run_phase_transition(config, progress)
    _write(args.output, write_curve_csv((r.n, r.C, r.m, r.trials, r.successes) for r in rows))
    if args.svg:
        _write(args.svg, curve_svg(rows))
    return EXIT_OK


def cmd_convert(args) -> int:
    net = load_network(args.input)
    if args.to == "json":
        text = serialize_network(net)
    elif args.to == "dot":
        text = export_dot(net.dag, net.node_names, title=net.name)
    else:
        text = write_edge_list(net.dag)
    _write(args.output, text)
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    p = argparse.ArgumentParser(prog="pathlearn", description="Causal structure learning from interventional queries.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="random network to JSON")
    g.add_argument("--kind", choices=["discrete", "asgn"], default="discrete")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density", type=float, default=0.1)
    g.add_argument("--r-max", type=int, default=5)
    g.add_argument("--gamma-floor", type=float, default=0.01)
    g.add_argument("--name", default="random")
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    lr = sub.add_parser("learn", help="learn a network's structure from simulated interventions")
    lr.add_argument("network", help="BIF or JSON file, or a bundled network name")
    lr.add_argument("--regime", default=None,
                    choices=["discrete", "discrete-imperfect", "continuous", "continuous-imperfect"])
    lr.add_argument("--delta", type=float, default=0.01)
    lr.add_argument("--gamma", type=float)
    lr.add_argument("--sigma-ub", type=float)
    lr.add_argument("--alpha", type=float, default=0.9, help="lower bound on intervention success")
    lr.add_argument("--phi", type=float, default=0.9, help="simulated intervention success probability")
    lr.add_argument("--threshold", choices=["half", "gamma"], default="half")
    lr.add_argument("--m-override", type=int)
    lr.add_argument("--seed", type=int, default=seed)
    lr.add_argument("--batched", action="store_true")
    lr.add_argument("--oracle", action="store_true", help="answer queries from the true graph")
    lr.add_argument("--reduction-only", action="store_true", help="skip the transitive-edge phase")
    lr.add_argument("--dot", default="-", help="learned graph as DOT (default stdout)")
    lr.add_argument("--report", help="report JSON path")
    lr.add_argument("--edges", help="learned graph as edge list")
    lr.set_defaults(func=cmd_learn)

    q = sub.add_parser("query", help="run one path or transitive query")
    q.add_argument("network")
    q.add_argument("i")
    q.add_argument("j")
    q.add_argument("--S", default="", help="comma-separated conditioning set")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--gamma", type=float)
    q.add_argument("--z", type=float)
    q.add_argument("--phi", type=float)
    q.add_argument("--cap", type=int, default=ENUMERATION_CAP,
                   help="largest number of interventions a transitive query may sweep")
    q.add_argument("--seed", type=int, default=seed)
    q.set_defaults(func=cmd_query)

    c = sub.add_parser("census", help="transitive-edge census of network files")
    c.add_argument("networks", nargs="+")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_census)

    ph = sub.add_parser("phase", help="run an experiment from a TOML or JSON config")
    ph.add_argument("config", nargs="?")
    ph.add_argument("-o", "--output")
    ph.add_argument("--svg")
    ph.add_argument("--seed", type=int)
    ph.set_defaults(func=cmd_phase)

    cv = sub.add_parser("convert", help="BIF/JSON to JSON, DOT or edge list")
    cv.add_argument("input")
    cv.add_argument("--to", choices=["json", "dot", "edges"], required=True)
    cv.add_argument("-o", "--output")
    cv.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except PathLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "phase":
        args.seed_given = args.seed is not None
    try:
        if args.command == "learn" and args.regime is None:
            kind = load_network(args.network).kind
            args.regime = "discrete" if kind == "discrete" else "continuous"
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PathLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
