"""Benchmark networks, estimator-vs-oracle error tables and timing comparisons."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .adjustments import full_bundle
from .delta import variance_v1
from .doubling import estimate_q2_v2
from .errors import InsufficientData, UnknownBenchmark
from .inference import Query
from .network import Network, Structure, Variable, bde_prior
from .oracle import OracleConfig, mc_estimates_many, warn_if_undersampled

M_GRID = (20, 50, 100, 200, 500)
BINARY = ("0", "1")
CSV_HEADER = "# beliefvar-results v1"
FIXTURE_SEED = 0


def _structure(name: str) -> Structure:
    if name in ("nb2", "nb4"):
        k = int(name[-1])
        feats = [f"F{i}" for i in range(1, k + 1)]
        variables = [Variable("H", BINARY)] + [Variable(f, BINARY) for f in feats]
        return Structure(variables, {f: ("H",) for f in feats})
    if name == "diamond":
        variables = [Variable(n, BINARY) for n in "ABCD"]
        return Structure(variables, {"B": ("A",), "C": ("A",), "D": ("B", "C")})
    raise UnknownBenchmark(name)


def _queries(name: str, structure: Structure) -> list[Query]:
    if name in ("nb2", "nb4"):
        feats = structure.children("H")
        return [
            Query({"H": BINARY[0]}, dict(zip(feats, vals)))
            for vals in itertools.product(BINARY, repeat=len(feats))
        ]
    queries = []
    for h in structure.names:
        others = [n for n in structure.names if n != h]
        for size in range(len(others) + 1):
            for subset in itertools.combinations(others, size):
                for vals in itertools.product(BINARY, repeat=size):
                    queries.append(Query({h: BINARY[0]}, dict(zip(subset, vals))))
    return queries


def draw_mean_cpts(structure: Structure, seed: int, concentration: float = 2.0) -> dict[str, np.ndarray]:
    """Seeded mean CPTs, each row drawn from a symmetric Dirichlet."""
    rng = np.random.default_rng(seed)
    out = {}
    for n in structure.names:
        shape = structure.cpt_shape(n)
        rows = rng.dirichlet(np.full(shape[-1], concentration), size=int(np.prod(shape[:-1], dtype=int)))
        out[n] = rows.reshape(shape)
    return out


def fixture_dict(name: str, seed: int = FIXTURE_SEED) -> dict:
    structure = _structure(name)
    means = draw_mean_cpts(structure, seed)
    return {
        "version": 1,
        "name": name,
        "seed": seed,
        "variables": [{"name": v.name, "domain": list(v.domain)} for v in structure.variables],
        "parents": {n: list(ps) for n, ps in structure.parents.items() if ps},
        "means": {
            n: [
                {"parent_config": list(c), "probs": row.tolist()}
                for c, row in zip(structure.parent_configs(n), means[n].reshape(-1, structure.card(n)))
            ]
            for n in structure.names
        },
    }


def _load_fixture(name: str) -> tuple[Structure, dict[str, np.ndarray]]:
    try:
        text = resources.files("beliefvar.data").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise UnknownBenchmark(name) from None
    d = json.loads(text)
    structure = Structure(
        [Variable(v["name"], tuple(v["domain"])) for v in d["variables"]], d["parents"]
    )
    means = {}
    for n in structure.names:
        rows = [r["probs"] for r in d["means"][n]]
        means[n] = np.array(rows, dtype=float).reshape(structure.cpt_shape(n))
    return structure, means


@dataclass(frozen=True)
class Benchmark:
    name: str
    structure: Structure
    mean_cpts: dict
    queries: tuple
    m_grid: tuple = M_GRID

    def network(self, m: float) -> Network:
        return bde_prior(self.structure, self.mean_cpts, m)


BENCHMARKS = ("nb2", "nb4", "diamond")


def get_benchmark(name: str, m_grid: Sequence[float] = M_GRID) -> Benchmark:
    name = name.lower().replace("-", "")
    if name not in BENCHMARKS:
        raise UnknownBenchmark(name)
    structure, means = _load_fixture(name)
    return Benchmark(name, structure, means, tuple(_queries(name, structure)), tuple(m_grid))


def build_benchmark(name: str, m: float) -> tuple[Network, list[Query]]:
    b = get_benchmark(name)
    return b.network(m), list(b.queries)


RESULT_FIELDS = (
    ["bench", "m", "query"]
    + [f"q{j}" for j in range(5)]
    + [f"v{j}" for j in range(5)]
    + ["se_q0", "se_v0"]
    + [f"eq{j}" for j in range(1, 5)]
    + [f"ev{j}" for j in range(1, 5)]
    + ["t_delta", "t_double"]
)


@dataclass(frozen=True)
class ResultRow:
    bench: str
    m: float
    query: int
    q0: float
    q1: float
    q2: float
    q3: float
    q4: float
    v0: float
    v1: float
    v2: float
    v3: float
    v4: float
    se_q0: float
    se_v0: float
    t_delta: float | None = None
    t_double: float | None = None

    def mean_error(self, j: int) -> float:
        """Scaled mean error m (q_j - q0)."""
        return self.m * (getattr(self, f"q{j}") - self.q0)

    def variance_error(self, j: int) -> float:
        """Scaled relative variance error m (v_j - v0) / v0."""
        return self.m * (getattr(self, f"v{j}") - self.v0) / self.v0

    def as_record(self) -> dict:
        rec = {f.name: getattr(self, f.name) for f in fields(self)}
        for j in range(1, 5):
            rec[f"eq{j}"] = self.mean_error(j)
            rec[f"ev{j}"] = self.variance_error(j)
        return rec


def _row_for(bench, m, qid, net, q, oracle, timings):
    b = full_bundle(net, q)
    t_delta = t_double = None
    if timings:
        t0 = time.perf_counter()
        variance_v1(net, q)
        t1 = time.perf_counter()
        estimate_q2_v2(net, q)
        t2 = time.perf_counter()
        t_delta, t_double = t1 - t0, t2 - t1
    return ResultRow(
        bench, m, qid, oracle.q0, b.q1, b.q2, b.q3, b.q4,
        oracle.v0, b.v1, b.v2, b.v3, b.v4, oracle.se_mean, oracle.se_var,
        t_delta, t_double,
    ), b


def run_error_table(
    bench: Benchmark | str,
    oracle_cfg: OracleConfig,
    m_grid: Sequence[float] | None = None,
    workers: int = 1,
    timings: bool = False,
    diagnostics: list | None = None,
) -> list[ResultRow]:
    """One row per (m, query): all estimators plus the oracle.

    Rows come back ordered by (m, query id) whatever ``workers`` is.  When
    ``diagnostics`` is a list, the per-row EstimateBundle objects are appended.
    """
    if isinstance(bench, str):
        bench = get_benchmark(bench)
    if oracle_cfg.k < 10_000:
        raise ValueError("the oracle needs k >= 10^4 samples")
    grid = tuple(m_grid) if m_grid is not None else bench.m_grid
    cfg = OracleConfig(oracle_cfg.k, oracle_cfg.seed, oracle_cfg.chunk_size, workers)
    rows = []
    for m in grid:
        warn_if_undersampled(cfg.k, m)
        net = bench.network(m)
        oracle = mc_estimates_many(net, bench.queries, cfg)
        jobs = list(enumerate(bench.queries))

        def one(job, net=net, m=m, oracle=oracle):
            qid, q = job
            return _row_for(bench.name, m, qid, net, q, oracle[qid], timings)

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                out = list(pool.map(one, jobs))
        else:
            out = [one(j) for j in jobs]
        for row, b in out:
            rows.append(row)
            if diagnostics is not None:
                diagnostics.append(b)
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def format_results_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in rows:
        rec = r.as_record()
        w.writerow([rec["bench"] if f == "bench" else _fmt(rec[f]) for f in RESULT_FIELDS])
    return buf.getvalue()


def write_results_csv(rows: Iterable[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_results_csv(rows))


def read_results_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != CSV_HEADER:
            raise ValueError(f"not a beliefvar results file (header {first!r})")
        rows = []
        for rec in csv.DictReader(fh):
            kw = {}
            for f in fields(ResultRow):
                text = rec[f.name]
                if f.name == "bench":
                    kw[f.name] = text
                elif f.name == "query":
                    kw[f.name] = int(text)
                elif f.name in ("t_delta", "t_double"):
                    kw[f.name] = float(text) if text else None
                else:
                    kw[f.name] = float(text)
            rows.append(ResultRow(**kw))
    return rows


def fit_slope(ms: Sequence[float], errors: Sequence[float], floors: Sequence[float] | None = None) -> float:
    """Least-squares slope of log|error| against log m, skipping points below ``floors``.

    Returns nan when fewer than two points survive the mask.
    """
    ms = np.asarray(ms, dtype=float)
    err = np.abs(np.asarray(errors, dtype=float))
    ok = err > 0
    if floors is not None:
        ok &= err >= np.asarray(floors, dtype=float)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(ms[ok]), np.log(err[ok]), 1)[0])


ESTIMATORS = ("q1", "q2", "q3", "q4", "v1", "v2", "v3", "v4")


def fit_convergence_rates(
    rows: Iterable[ResultRow], noise_mult: float = 3.0, estimators: Sequence[str] = ESTIMATORS
) -> dict[tuple[str, int], dict[str, float]]:
    """Per-query slopes of log error vs log m for each estimator.

    Mean errors are |q_j - q0|; variance errors are |v_j - v0| / v0.  Points
    whose error is within ``noise_mult`` oracle standard errors are masked.
    """
    groups: dict[tuple[str, int], list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.bench, r.query), []).append(r)
    out = {}
    for key, grp in groups.items():
        grp = sorted(grp, key=lambda r: r.m)
        if len({r.m for r in grp}) < 3:
            raise InsufficientData(f"query {key} has fewer than 3 values of m")
        ms = [r.m for r in grp]
        slopes = {}
        for est in estimators:
            if est.startswith("q"):
                err = [getattr(r, est) - r.q0 for r in grp]
                floor = [noise_mult * r.se_q0 for r in grp]
            else:
                err = [(getattr(r, est) - r.v0) / r.v0 for r in grp]
                floor = [noise_mult * r.se_v0 / r.v0 for r in grp]
            slopes[est] = fit_slope(ms, err, floor)
        out[key] = slopes
    return out


def random_network(
    n_vars: int = 37,
    seed: int = 0,
    max_parents: int = 4,
    cards: Sequence[int] = (2, 3, 4),
    window: int = 6,
    m: float = 50.0,
) -> Network:
    """A random layered DAG with Alarm-like fan-in under a BDe prior."""
    rng = np.random.default_rng(seed)
    variables = []
    parents = {}
    for i in range(n_vars):
        card = int(rng.choice(cards))
        variables.append(Variable(f"X{i}", tuple(str(v) for v in range(card))))
        pool = list(range(max(0, i - window), i))
        k = min(len(pool), int(rng.choice(max_parents + 1, p=_fan_in_probs(max_parents))))
        chosen = sorted(rng.choice(pool, size=k, replace=False)) if k else []
        parents[f"X{i}"] = tuple(f"X{j}" for j in chosen)
    structure = Structure(variables, parents)
    return bde_prior(structure, draw_mean_cpts(structure, seed + 1), m)


def _fan_in_probs(max_parents: int) -> np.ndarray:
    w = np.array([1.0, 3.0, 3.0, 2.0, 1.0][: max_parents + 1])
    if len(w) < max_parents + 1:
        w = np.concatenate([w, np.ones(max_parents + 1 - len(w))])
    return w / w.sum()


def random_queries(net: Network, n: int, seed: int = 0, n_hyp: int = 2, n_ev: int = 8) -> list[Query]:
    rng = np.random.default_rng(seed)
    names = list(net.names)
    out = []
    for _ in range(n):
        picked = rng.permutation(len(names))[: n_hyp + n_ev]
        def label(j):
            v = net.var(names[j])
            return v.domain[int(rng.integers(v.card))]
        hyp = {names[j]: label(j) for j in picked[:n_hyp]}
        ev = {names[j]: label(j) for j in picked[n_hyp:]}
        out.append(Query(hyp, ev))
    return out


@dataclass(frozen=True)
class TimingRow:
    label: str
    n_queries: int
    t_delta: float
    t_double: float

    @property
    def ratio(self) -> float:
        """Doubling time over delta time (< 1 means doubling is faster)."""
        return self.t_double / self.t_delta if self.t_delta > 0 else math.nan


def run_timing_bench(cases: Sequence[tuple[str, Network, Sequence[Query]]], repeats: int = 1) -> list[TimingRow]:
    """Wall-clock totals for the delta and doubling variances over each query set.

    The doubled network is rebuilt once per case and that cost is charged to
    doubling.
    """
    out = []
    for label, net, queries in cases:
        if not queries:
            continue
        fresh = net.with_alpha(net.alpha)
        t0 = time.perf_counter()
        for _ in range(repeats):
            for q in queries:
                variance_v1(fresh, q)
        t1 = time.perf_counter()
        for _ in range(repeats):
            for q in queries:
                estimate_q2_v2(fresh, q)
        t2 = time.perf_counter()
        out.append(TimingRow(label, len(queries) * repeats, t1 - t0, t2 - t1))
    return out
