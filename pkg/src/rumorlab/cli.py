"""Command-line front end.

Builds and verifies graphs, runs replica simulations, solves the
deterministic and fluctuation systems, and runs oracle or acceptance
experiments.  Every run writes CSV data plus a meta.json into an output
directory; parameters come from an optional JSON config file with any key
overridable by the matching flag.  Exit codes: 0 success or PASS, 1 model
failure or FAIL, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .acceptance import CRITERION_IDS, format_result, run_all, run_criterion
from .engine import IGNORANT, SPREADER, SimConfig, YYRule, exact_mean_counts, run, run_replicas
from .errors import ConfigError, RumorlabError
from .fluctuations import eval_noise_covariance, sample_limit_noises, solve_fclt, write_covariance_blocks
from .meanfield import MeanFieldProblem, solve_mean_field
from .qtgraph import build_configuration_model, build_family, read_graph, validate_blueprint, verify_realization, write_graph
from .stifling import parse_law

_YY_RULES = {"both": YYRule.BOTH_STIFLE, "initiator": YYRule.INITIATOR_ONLY}


def _resolve_seed(value):
    if value is not None:
        return int(value)
    env = os.environ.get("RUMORLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"RUMORLAB_SEED must be an integer, got {env!r}")
    return 0


def _load_config(path, allowed):
    """Read a JSON config object; reject unknown keys with their location."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("/: config must be a JSON object")
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"/{key}: unknown key (allowed: {sorted(allowed)})")
    return cfg


def _merged(args, names):
    """Flag value if given, else config value, else None, per name."""
    cfg = {}
    if getattr(args, "config", None):
        allowed = set(names) | ({"lambda"} if "lam" in names else set())
        cfg = _load_config(args.config, allowed)
    if "lambda" in cfg:  # accept the natural key name for the contact rate
        cfg["lam"] = cfg.pop("lambda")
    out = {}
    for name in names:
        flag = getattr(args, name, None)
        out[name] = flag if flag is not None else cfg.get(name)
    return out


def _require(params, *names):
    for name in names:
        if params.get(name) is None:
            raise ConfigError(f"/{name}: required (set the flag or config key)")


def _float_list(value, n_types, what):
    """Scalar or per-type list, broadcast to a tuple of length n_types."""
    if isinstance(value, str):
        value = [float(p) for p in value.split(",")] if "," in value else float(value)
    if isinstance(value, (int, float)):
        return (float(value),) * n_types
    vals = tuple(float(v) for v in value)
    if len(vals) != n_types:
        raise ConfigError(f"/{what}: expected 1 or {n_types} values, got {len(vals)}")
    return vals


def _blueprint_from(params):
    """Blueprint from --counts, or from the family named in --graph/--family."""
    counts = params.get("counts")
    if counts is not None:
        if isinstance(counts, str):
            try:
                counts = json.loads(counts)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"/counts: not valid JSON: {exc}")
        return validate_blueprint(counts)
    spec = params.get("family") or params.get("graph")
    if spec is None:
        raise ConfigError("/counts: required unless a graph family is named")
    return build_family(spec).blueprint


def _outdir(params):
    out = params.get("out") or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _write_meta(outdir, command, seed, params):
    meta = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "params": {k: v for k, v in sorted(params.items()) if k not in ("out", "config")},
        "created_unix": time.time(),
    }
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=str)
        fh.write("\n")


def _initial_spreader_states(graph):
    return tuple(SPREADER if v == 0 else IGNORANT for v in range(graph.num_vertices))


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_graph_build(args):
    params = _merged(args, ("family", "counts", "size", "out", "seed"))
    seed = _resolve_seed(params["seed"])
    if params["counts"] is not None:
        _require(params, "size")
        bp = _blueprint_from(params)
        graph = build_configuration_model(bp, int(params["size"]), seed=seed)
        source = f"configuration model, {params['size']} vertices"
    else:
        _require(params, "family")
        graph = build_family(params["family"])
        source = params["family"]
    outdir = _outdir(params)
    write_graph(graph, os.path.join(outdir, "edges.csv"), os.path.join(outdir, "types.json"))
    _write_meta(outdir, "graph build", seed, params)
    report = verify_realization(graph)
    print(
        f"built {source}: {graph.num_vertices} vertices, "
        f"{sum(1 for _ in graph.edges())} edges, verified={report.ok}, "
        f"connected={report.connected} -> {outdir}/"
    )
    return 0 if report.ok else 1


def _cmd_graph_verify(args):
    params = _merged(args, ("edges", "types", "counts", "family"))
    _require(params, "edges", "types")
    bp = _blueprint_from(params)
    graph = read_graph(params["edges"], params["types"], bp)
    report = verify_realization(graph)
    print(f"verified={report.ok}, connected={report.connected}: {report.message or 'ok'}")
    return 0 if report.ok else 1


def _sim_config(params, bp, seed, grid_default=0.1):
    law = parse_law(params["law"])
    t_max = float(params["t_max"])
    grid_dt = float(params["grid_dt"]) if params["grid_dt"] is not None else grid_default
    yy = params["yy_rule"] or "both"
    if yy not in _YY_RULES:
        raise ConfigError(f"/yy_rule: choose from {sorted(_YY_RULES)}")
    y0 = _float_list(params["y0"] if params["y0"] is not None else 0.01, bp.n_types, "y0")
    z0 = _float_list(params["z0"] if params["z0"] is not None else 0.0, bp.n_types, "z0")
    fractions = tuple((1.0 - y - z, y, z) for y, z in zip(y0, z0))
    return SimConfig(
        contact_rate=float(params["lam"]),
        law=law,
        t_max=t_max,
        grid_dt=grid_dt,
        seed=seed,
        yy_rule=_YY_RULES[yy],
        initial_fractions=fractions,
    )


def _cmd_simulate(args):
    names = ("graph", "law", "lam", "t_max", "grid_dt", "y0", "z0",
             "yy_rule", "replicas", "jobs", "seed", "out")
    params = _merged(args, names)
    _require(params, "graph", "law", "lam", "t_max")
    graph = build_family(params["graph"])
    seed = _resolve_seed(params["seed"])
    config = _sim_config(params, graph.blueprint, seed)
    outdir = _outdir(params)
    n_rep = int(params["replicas"]) if params["replicas"] is not None else 1
    jobs = int(params["jobs"]) if params["jobs"] is not None else 1
    if n_rep <= 1:
        traj = run(graph, config)
        traj.to_csv(os.path.join(outdir, "trajectory_0.csv"))
        print(f"1 trajectory -> {outdir}/trajectory_0.csv")
    else:
        summary = run_replicas(graph, config, n_rep, base_seed=seed, jobs=jobs)
        for i, traj in enumerate(summary.trajectories):
            traj.to_csv(os.path.join(outdir, f"trajectory_{i}.csv"))
        stats_path = os.path.join(outdir, "replica_stats.csv")
        with open(stats_path, "w") as fh:
            fh.write("t,type,X_mean,Y_mean,Z_mean,X_var,Y_var,Z_var\n")
            for m, t in enumerate(summary.times):
                for k in range(summary.mean.shape[1]):
                    mu = summary.mean[m, k]
                    va = summary.var[m, k]
                    fh.write(
                        f"{t:.10g},{k},{mu[0]:.10g},{mu[1]:.10g},{mu[2]:.10g},"
                        f"{va[0]:.10g},{va[1]:.10g},{va[2]:.10g}\n"
                    )
        print(f"{n_rep} trajectories + replica_stats.csv -> {outdir}/")
    _write_meta(outdir, "simulate", seed, params)
    return 0


def _meanfield_problem(params):
    bp = _blueprint_from(params)
    law = parse_law(params["law"])
    y0 = _float_list(params["y0"] if params["y0"] is not None else 0.01, bp.n_types, "y0")
    z0 = _float_list(params["z0"] if params["z0"] is not None else 0.0, bp.n_types, "z0")
    dt = float(params["dt"]) if params["dt"] is not None else 0.01
    return MeanFieldProblem(bp, float(params["lam"]), law, y0, z0, float(params["t_max"]), dt)


def _cmd_meanfield(args):
    names = ("counts", "family", "graph", "law", "lam", "y0", "z0", "t_max", "dt", "drain", "out")
    params = _merged(args, names)
    _require(params, "law", "lam", "t_max")
    problem = _meanfield_problem(params)
    drain = params["drain"] or "survival"
    solution = solve_mean_field(problem, drain=drain)
    outdir = _outdir(params)
    solution.to_csv(os.path.join(outdir, "meanfield.csv"))
    _write_meta(outdir, "meanfield", 0, params)
    print(f"{len(solution.times)} grid points x {problem.blueprint.n_types} types -> {outdir}/meanfield.csv")
    return 0


def _cmd_fclt(args):
    names = ("counts", "family", "graph", "law", "lam", "y0", "z0", "t_max", "dt",
             "drain", "structure", "cov_stride", "samples", "seed", "out")
    params = _merged(args, names)
    _require(params, "law", "lam", "t_max")
    problem = _meanfield_problem(params)
    solution = solve_mean_field(problem, drain=params["drain"] or "survival")
    structure = params["structure"] or "isometry"
    outdir = _outdir(params)
    if args.fclt_action == "covariance":
        stride = int(params["cov_stride"]) if params["cov_stride"] is not None else 1
        cov = eval_noise_covariance(solution, times=solution.times[::stride])
        written = write_covariance_blocks(cov, outdir, structure=structure)
        _write_meta(outdir, "fclt covariance", 0, params)
        print(f"{len(written)} covariance blocks ({structure}) -> {outdir}/")
        return 0
    seed = _resolve_seed(params["seed"])
    n_samples = int(params["samples"]) if params["samples"] is not None else 100
    cov = eval_noise_covariance(solution)
    noises = sample_limit_noises(cov, seed=seed, n_samples=n_samples, structure=structure)
    sample = solve_fclt(cov, noises)
    sample.to_csv(os.path.join(outdir, "fluctuations.csv"))
    _write_meta(outdir, "fclt sample", seed, params)
    print(f"{n_samples} limit fluctuation paths -> {outdir}/fluctuations.csv")
    return 0


def _cmd_oracle(args):
    names = ("graph", "law", "lam", "times", "replicas", "tol", "seed", "out")
    params = _merged(args, names)
    _require(params, "graph")
    graph = build_family(params["graph"])
    law = parse_law(params["law"] or "exp:1")
    lam = float(params["lam"]) if params["lam"] is not None else 1.0
    raw_times = params["times"] if params["times"] is not None else "0.5,1,2,4"
    if isinstance(raw_times, str):
        times = tuple(float(t) for t in raw_times.split(","))
    else:
        times = tuple(float(t) for t in raw_times)
    n_rep = int(params["replicas"]) if params["replicas"] is not None else 10_000
    tol = float(params["tol"]) if params["tol"] is not None else 3.0
    seed = _resolve_seed(params["seed"])

    states = _initial_spreader_states(graph)
    grid_dt = min(times)
    for t in times:
        if abs(round(t / grid_dt) * grid_dt - t) > 1e-9:
            raise ConfigError("/times: values must share a common grid step")
    config = SimConfig(
        contact_rate=lam, law=law, t_max=max(times), grid_dt=grid_dt,
        seed=seed, initial_states=states,
    )
    summary = run_replicas(graph, config, n_rep)
    exact = exact_mean_counts(graph, lam, law, states, times)

    worst = 0.0
    rows = []
    for ti, t in enumerate(times):
        gi = round(t / grid_dt)
        mean, var = summary.mean[gi], summary.var[gi]
        se = np.sqrt(var / n_rep)
        for k in range(mean.shape[0]):
            for ci, comp in enumerate("XYZ"):
                diff = abs(mean[k, ci] - exact[ti][k, ci])
                z = diff / se[k, ci] if se[k, ci] > 0 else (np.inf if diff > 0 else 0.0)
                worst = max(worst, float(z))
                rows.append((t, k, comp, mean[k, ci], exact[ti][k, ci], float(z)))

    if params["out"]:
        outdir = _outdir(params)
        with open(os.path.join(outdir, "oracle.csv"), "w") as fh:
            fh.write("t,type,state,simulated,exact,z\n")
            for t, k, comp, sim_v, ex_v, z in rows:
                fh.write(f"{t:.10g},{k},{comp},{sim_v:.10g},{ex_v:.10g},{z:.6g}\n")
        _write_meta(outdir, "oracle", seed, params)
    status = "PASS" if worst <= tol else "FAIL"
    print(f"{status} oracle: max |z| = {worst:.2f} over {len(rows)} cells "
          f"({n_rep} replicas, tolerance {tol})")
    return 0 if worst <= tol else 1


def _cmd_acceptance(args):
    if args.id == "all":
        results = run_all()
        for res in results:
            print(format_result(res))
        return 0 if all(r.passed for r in results) else 1
    try:
        res = run_criterion(args.id)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    print(format_result(res))
    return 0 if res.passed else 1


# ---------------------------------------------------------------------------
# parser


def _add_common(p, *, seed=True, out=True, config=True):
    if config:
        p.add_argument("--config", help="JSON config file; flags override its keys")
    if seed:
        p.add_argument("--seed", type=int, help="RNG seed (default: $RUMORLAB_SEED or 0)")
    if out:
        p.add_argument("--out", help="output directory (default: out/)")


def _add_model_flags(p, dt_flag):
    p.add_argument("--law", help="stifling law, e.g. weibull:2:5, exp:1, never")
    p.add_argument("--lambda", dest="lam", type=float, help="contact rate per edge")
    p.add_argument("--y0", help="initial spreader fraction (scalar or comma list per type)")
    p.add_argument("--z0", help="initial stifler fraction (scalar or comma list per type)")
    p.add_argument("--t-max", dest="t_max", type=float, help="time horizon")
    p.add_argument(dt_flag, dest=dt_flag.strip("-").replace("-", "_"), type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rumorlab",
        description="Rumor spread with spontaneous stifling: simulation, "
        "deterministic limits, and Gaussian fluctuations on vertex-typed graphs.",
    )
    ap.add_argument("--version", action="version", version=f"rumorlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="build or verify typed graphs")
    gsub = g.add_subparsers(dest="graph_action", required=True)
    gb = gsub.add_parser("build", help="build a family or a configuration-model realization")
    gb.add_argument("--family", help="family spec, e.g. torus:50, cycle:8, grid:8:6")
    gb.add_argument("--counts", help="JSON neighbor-count matrix for the configuration model")
    gb.add_argument("--size", type=int, help="vertex count for the configuration model")
    _add_common(gb)
    gv = gsub.add_parser("verify", help="verify a stored graph against a blueprint")
    gv.add_argument("--edges", help="edge-list CSV")
    gv.add_argument("--types", help="vertex-type JSON sidecar")
    gv.add_argument("--counts", help="JSON neighbor-count matrix")
    gv.add_argument("--family", help="family spec supplying the blueprint")
    _add_common(gv, seed=False, out=False)

    s = sub.add_parser("simulate", help="event-driven runs on a built graph family")
    s.add_argument("--graph", help="graph family spec, e.g. torus:50")
    _add_model_flags(s, "--grid-dt")
    s.add_argument("--yy-rule", dest="yy_rule", choices=sorted(_YY_RULES),
                   help="spreader-meets-spreader rule (default both)")
    s.add_argument("--replicas", type=int, help="replica count (default 1)")
    s.add_argument("--jobs", type=int, help="worker processes for replicas")
    _add_common(s)

    m = sub.add_parser("meanfield", help="solve the deterministic limit system")
    m.add_argument("--counts", help="JSON neighbor-count matrix")
    m.add_argument("--family", help="family spec supplying the blueprint")
    _add_model_flags(m, "--dt")
    m.add_argument("--drain", choices=("survival", "linear"),
                   help="stifling-drain closure (default survival)")
    _add_common(m, seed=False)

    f = sub.add_parser("fclt", help="Gaussian fluctuation limit machinery")
    fsub = f.add_subparsers(dest="fclt_action", required=True)
    for name, extra in (("sample", "draw limit paths"), ("covariance", "export covariance blocks")):
        fp = fsub.add_parser(name, help=extra)
        fp.add_argument("--counts", help="JSON neighbor-count matrix")
        fp.add_argument("--family", help="family spec supplying the blueprint")
        _add_model_flags(fp, "--dt")
        fp.add_argument("--drain", choices=("survival", "linear"))
        fp.add_argument("--structure", choices=("isometry", "min_kernel"),
                        help="pair-block covariance structure (default isometry)")
        if name == "sample":
            fp.add_argument("--samples", type=int, help="number of limit paths (default 100)")
            _add_common(fp)
        else:
            fp.add_argument("--cov-stride", dest="cov_stride", type=int,
                            help="grid subsampling stride for exported blocks")
            _add_common(fp, seed=False)

    o = sub.add_parser("oracle", help="replica means vs the exact small-graph chain")
    o.add_argument("--graph", help="small graph family spec, e.g. cycle:4")
    o.add_argument("--law", help="stifling law (exponential required), default exp:1")
    o.add_argument("--lambda", dest="lam", type=float, help="contact rate (default 1)")
    o.add_argument("--times", help="comma-separated comparison times (default 0.5,1,2,4)")
    o.add_argument("--replicas", type=int, help="replica count (default 10000)")
    o.add_argument("--tol", type=float, help="max |z| to pass (default 3.0)")
    _add_common(o)

    a = sub.add_parser("acceptance", help="run a named acceptance experiment")
    a.add_argument("id", help=f"criterion id, 1-10, or all; ids: {', '.join(CRITERION_IDS)}")

    return ap


_DISPATCH = {
    "simulate": _cmd_simulate,
    "meanfield": _cmd_meanfield,
    "fclt": _cmd_fclt,
    "oracle": _cmd_oracle,
    "acceptance": _cmd_acceptance,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "graph":
            fn = _cmd_graph_build if args.graph_action == "build" else _cmd_graph_verify
            return fn(args)
        return _DISPATCH[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RumorlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
