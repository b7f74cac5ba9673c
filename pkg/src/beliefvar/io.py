"""JSON network files and CSV data files.

Network file::

    {"variables": [{"name": "A", "domain": ["a1", "a2"]}, ...],
     "parents": {"B": ["A"]},
     "cpt": {"B": [{"parent_config": ["a1"], "alpha": [1.0, 2.0]}, ...]}}

Rows may appear in any order, but every parent configuration needs exactly one.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import IndexMismatch, MissingRow, NetworkError
from .network import CompleteData, Network, Structure, Variable


def _reject_unknown(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise NetworkError(f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise NetworkError(f"unknown fields in {where}: {sorted(extra)}")


def network_from_dict(d: dict) -> Network:
    _reject_unknown(d, {"variables", "parents", "cpt"}, "network")
    variables = []
    for v in d["variables"]:
        _reject_unknown(v, {"name", "domain"}, "variable")
        variables.append(Variable(v["name"], tuple(v["domain"])))
    parents = {k: tuple(ps) for k, ps in d.get("parents", {}).items()}
    structure = Structure(variables, parents)
    cpt = d.get("cpt", {})
    unknown = set(cpt) - set(structure.names)
    if unknown:
        raise NetworkError(f"cpt rows given for unknown variables {sorted(unknown)}")
    alpha = {}
    for name in structure.names:
        shape = structure.cpt_shape(name)
        a = np.full(shape, np.nan)
        doms = [structure.var(p).domain for p in structure.parents[name]]
        for row in cpt.get(name, []):
            _reject_unknown(row, {"parent_config", "alpha"}, f"cpt row of {name!r}")
            config = tuple(row["parent_config"])
            if len(config) != len(doms):
                raise IndexMismatch(f"{name!r}: parent_config {config} has the wrong length")
            try:
                idx = tuple(dom.index(c) for dom, c in zip(doms, config))
            except ValueError:
                raise IndexMismatch(f"{name!r}: parent_config {config} is out of domain") from None
            if not np.all(np.isnan(a[idx])):
                raise NetworkError(f"{name!r}: duplicate row for {config}")
            vals = np.asarray(row["alpha"], dtype=float)
            if vals.shape != (shape[-1],):
                raise IndexMismatch(f"{name!r}: alpha for {config} has the wrong length")
            a[idx] = vals
        if np.isnan(a).any():
            raise MissingRow(f"{name!r} is missing rows for some parent configurations")
        alpha[name] = a
    return Network(variables, parents, alpha)


def network_to_dict(net: Network) -> dict:
    return {
        "variables": [{"name": v.name, "domain": list(v.domain)} for v in net.variables],
        "parents": {n: list(ps) for n, ps in net.parents.items() if ps},
        "cpt": {
            n: [{"parent_config": list(c), "alpha": row.alpha.tolist()} for c, row in net.rows(n)]
            for n in net.names
        },
    }


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n")


def read_data_csv(structure: Structure, source) -> CompleteData:
    """Tally a CSV with one column per variable and one row per complete tuple."""
    fh: TextIO = open(source, newline="") if isinstance(source, (str, Path)) else source
    try:
        reader = csv.DictReader(fh)
        if set(reader.fieldnames or ()) != set(structure.names):
            raise IndexMismatch(f"CSV columns {reader.fieldnames} do not match {list(structure.names)}")
        domains = {n: [str(x) for x in structure.var(n).domain] for n in structure.names}
        records = []
        for line in reader:
            rec = {}
            for n, text in line.items():
                try:
                    rec[n] = structure.var(n).domain[domains[n].index(text)]
                except ValueError:
                    raise IndexMismatch(f"value {text!r} not in the domain of {n!r}") from None
            records.append(rec)
    finally:
        if fh is not source:
            fh.close()
    return CompleteData.from_records(structure, records)
