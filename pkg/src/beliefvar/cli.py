"""Command-line entry point: ``beliefvar <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings

import numpy as np

from . import experiments as ex
from .adjustments import full_bundle
from .continuous import StParams, st_density
from .delta import variance_v1
from .doubling import estimate_q2_v2
from .errors import BeliefVarError
from .inference import Query, evaluate_query
from .io import load_network, network_to_dict, read_data_csv
from .network import posterior_update
from .oracle import OracleConfig, mc_estimates


def _num(x: float) -> str:
    return repr(float(x))


def _query(args) -> Query:
    return Query.parse(args.hypothesis, args.evidence or "")


def _add_query_args(p):
    p.add_argument("network", help="network JSON file")
    p.add_argument("--hypothesis", required=True, help="e.g. A=a1,B=b2")
    p.add_argument("--evidence", default="", help="e.g. C=c1")


def cmd_validate(args):
    net = load_network(args.network)
    sizes = sorted({round(net.effective_sample_size(n), 9) for n in net.names})
    print(f"ok: {len(net.names)} variables, effective sample sizes {sizes}")


def cmd_update(args):
    net = load_network(args.network)
    data = read_data_csv(net, args.data)
    out = json.dumps(network_to_dict(posterior_update(net, data)), indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def cmd_query(args):
    net = load_network(args.network)
    print(_num(evaluate_query(net, None, _query(args))))


def cmd_variance(args):
    net = load_network(args.network)
    q = _query(args)
    if args.method == "delta":
        print(_num(variance_v1(net, q)))
    else:
        q2, v2 = estimate_q2_v2(net, q)
        print(f"{_num(q2)},{_num(v2)}")


BUNDLE_FIELDS = ("q1", "q2", "q3", "q4", "v1", "v2", "v3", "v4", "mu_r", "sigma_rr")


def cmd_bundle(args):
    net = load_network(args.network)
    b = full_bundle(net, _query(args))
    w = csv.writer(sys.stdout, lineterminator="\n")
    if not args.no_header:
        w.writerow(BUNDLE_FIELDS)
    w.writerow([_num(getattr(b, f)) for f in BUNDLE_FIELDS])


def cmd_oracle(args):
    net = load_network(args.network)
    r = mc_estimates(net, _query(args), OracleConfig(args.k, args.seed, workers=args.workers))
    print("q0,v0,se_mean,se_var")
    print(",".join(_num(x) for x in (r.q0, r.v0, r.se_mean, r.se_var)))


def cmd_stdensity(args):
    eta = np.array(args.eta, dtype=float)
    p = eta.size
    if args.omega2 is not None:
        omega = np.array(args.omega2, dtype=float).reshape(p, p) if p > 1 else np.array([[args.omega2[0]]])
    else:
        raise SystemExit("--omega2 is required")
    at = np.array(args.at, dtype=float)
    print(_num(st_density(StParams(eta, omega, args.nu), at)))


def _size(text: str) -> int | float:
    x = float(text)
    return int(x) if x.is_integer() else x


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_experiment(args):
    m_grid = [_size(m) for m in _csv_list(args.m)] if args.m else None
    rows = []
    for name in _csv_list(args.bench):
        bench = ex.get_benchmark(name)
        rows += ex.run_error_table(
            bench, OracleConfig(args.k, args.seed), m_grid=m_grid, workers=args.workers, timings=args.timings
        )
    text = ex.format_results_csv(rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args):
    cases = []
    for item in _csv_list(args.nets):
        if item in ex.BENCHMARKS:
            net, queries = ex.build_benchmark(item, args.m)
        elif item.startswith("random"):
            _, _, seed = item.partition(":")
            net = ex.random_network(seed=int(seed or 0), m=args.m)
            queries = ex.random_queries(net, args.queries, seed=int(seed or 0))
        else:
            net = load_network(item)
            queries = ex.random_queries(net, args.queries, seed=0)
        cases.append((item, net, queries))
    print("net,n_queries,ratio")
    for row in ex.run_timing_bench(cases, repeats=args.repeats):
        print(f"{row.label},{row.n_queries},{_num(row.ratio)}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beliefvar", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network file")
    p.add_argument("network")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("update", help="conjugate update from complete data")
    p.add_argument("network")
    p.add_argument("data", help="CSV, one column per variable")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("query", help="plug-in answer q1")
    _add_query_args(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("variance", help="v1 (delta) or q2,v2 (doubling)")
    _add_query_args(p)
    p.add_argument("--method", choices=("delta", "doubling"), default="doubling")
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("bundle", help="all estimates as one CSV row")
    _add_query_args(p)
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("oracle", help="Monte Carlo mean and variance")
    _add_query_args(p)
    p.add_argument("-k", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stdensity", help="Student-t density")
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--eta", type=float, nargs="+", required=True)
    p.add_argument("--omega2", type=float, nargs="+", help="scale (p*p entries, row-major)")
    p.add_argument("--at", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_stdensity)

    p = sub.add_parser("experiment", help="error table CSV for the benchmarks")
    p.add_argument("--bench", default="nb2,nb4,diamond")
    p.add_argument("--m", default="", help="comma-separated sample sizes")
    p.add_argument("-k", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="fill t_delta/t_double (not reproducible)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench", help="delta vs doubling timing ratio")
    p.add_argument("--nets", default="nb4,random:0", help="benchmark names, random[:seed] or JSON files")
    p.add_argument("--m", type=float, default=20.0)
    p.add_argument("--queries", type=int, default=5)
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("default")
    try:
        args.func(args)
    except (BeliefVarError, ValueError, KeyError, OSError) as exc:
        print(f"beliefvar: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
