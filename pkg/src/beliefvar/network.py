"""Discrete network structure, Dirichlet hyperparameters and conjugate updates.

CPT arrays are stored with one axis per parent (in the declared parent order)
followed by one axis for the child, so ``alpha[B][i, j, :]`` is the Dirichlet
row for parent configuration ``(A1 = dom[i], A2 = dom[j])``.  Flattening the
parent axes row-major gives the row numbering used by the JSON format.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    IndexMismatch,
    MissingRow,
    NetworkError,
    NonPositiveAlpha,
    NonPositiveM,
    NotNormalized,
    ZeroProbabilityConfig,
)


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple

    def __post_init__(self):
        domain = tuple(self.domain)
        object.__setattr__(self, "domain", domain)
        if len(domain) < 2:
            raise NetworkError(f"variable {self.name!r} needs at least two values")
        if len(set(domain)) != len(domain):
            raise NetworkError(f"variable {self.name!r} has duplicate value labels")

    @property
    def card(self) -> int:
        return len(self.domain)

    def index(self, label: Hashable) -> int:
        try:
            return self.domain.index(label)
        except ValueError:
            raise NetworkError(
                f"{label!r} is not in the domain of {self.name!r}: {self.domain}"
            ) from None


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class Structure:
    """A DAG over discrete variables; no parameters."""

    def __init__(self, variables: Sequence[Variable], parents: Mapping[str, Sequence[str]]):
        self.variables = tuple(variables)
        self._by_name = {v.name: v for v in self.variables}
        if len(self._by_name) != len(self.variables):
            raise NetworkError("duplicate variable names")
        unknown = set(parents) - set(self._by_name)
        if unknown:
            raise NetworkError(f"parents given for unknown variables {sorted(unknown)}")
        self.parents = {}
        for v in self.variables:
            ps = tuple(parents.get(v.name, ()))
            for p in ps:
                if p not in self._by_name:
                    raise NetworkError(f"unknown parent {p!r} of {v.name!r}")
            if len(set(ps)) != len(ps) or v.name in ps:
                raise NetworkError(f"bad parent list for {v.name!r}: {ps}")
            self.parents[v.name] = ps
        self.topological_order = self._toposort()

    def _toposort(self) -> tuple[str, ...]:
        indeg = {n: len(ps) for n, ps in self.parents.items()}
        children = {n: [] for n in self.parents}
        for n, ps in self.parents.items():
            for p in ps:
                children[p].append(n)
        ready = [v.name for v in self.variables if indeg[v.name] == 0]
        order = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.variables):
            stuck = sorted(n for n, d in indeg.items() if d > 0)
            raise CycleDetected(f"parent graph has a cycle through {stuck}")
        return tuple(order)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def var(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise NetworkError(f"unknown variable {name!r}") from None

    def card(self, name: str) -> int:
        return self.var(name).card

    def family(self, name: str) -> tuple[str, ...]:
        return self.parents[name] + (name,)

    def cpt_shape(self, name: str) -> tuple[int, ...]:
        return tuple(self.card(n) for n in self.family(name))

    def parent_configs(self, name: str) -> list[tuple]:
        """Parent label tuples in row-major order (the CPT row numbering)."""
        doms = [self.var(p).domain for p in self.parents[name]]
        return list(itertools.product(*doms))

    def ancestors(self, names: Iterable[str]) -> set[str]:
        """The given variables together with all their ancestors."""
        seen = set()
        stack = list(names)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.parents[n])
        return seen

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(n for n in self.names if name in self.parents[n])


@dataclass(frozen=True)
class DirichletRow:
    """One CPT row: Dir(alpha) over the child domain."""

    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _readonly(self.alpha))

    @property
    def alpha_sum(self) -> float:
        return float(self.alpha.sum())

    @property
    def means(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()


class TableNetwork(Structure):
    """A network with fixed CPT tables (no parameter uncertainty)."""

    def __init__(self, variables, parents, tables: Mapping[str, np.ndarray]):
        super().__init__(variables, parents)
        self.tables = {}
        for n in self.names:
            if n not in tables:
                raise MissingRow(f"no table for {n!r}")
            t = _readonly(tables[n])
            if t.shape != self.cpt_shape(n):
                raise MissingRow(
                    f"table for {n!r} has shape {t.shape}, expected {self.cpt_shape(n)}"
                )
            self.tables[n] = t


class Network(Structure):
    """Discrete network with a Dirichlet distribution on every CPT row.

    Immutable: every update returns a new Network.
    """

    def __init__(self, variables, parents, alpha: Mapping[str, np.ndarray], validate: bool = True):
        super().__init__(variables, parents)
        self.alpha = {n: _readonly(alpha[n]) if n in alpha else None for n in self.names}
        if validate:
            validate_network(self)

    @cached_property
    def _means(self) -> dict[str, np.ndarray]:
        return {n: _readonly(a / a.sum(axis=-1, keepdims=True)) for n, a in self.alpha.items()}

    def means(self) -> dict[str, np.ndarray]:
        """Posterior-mean CPTs (the predictive probabilities)."""
        return self._means

    def alpha_sums(self, name: str) -> np.ndarray:
        return self.alpha[name].sum(axis=-1)

    def row(self, name: str, config: Sequence) -> DirichletRow:
        idx = tuple(self.var(p).index(c) for p, c in zip(self.parents[name], config, strict=True))
        return DirichletRow(self.alpha[name][idx])

    def rows(self, name: str) -> Iterator[tuple[tuple, DirichletRow]]:
        flat = self.alpha[name].reshape(-1, self.card(name))
        for config, a in zip(self.parent_configs(name), flat):
            yield config, DirichletRow(a)

    def with_alpha(self, alpha: Mapping[str, np.ndarray]) -> "Network":
        return Network(self.variables, self.parents, alpha)

    def effective_sample_size(self, name: str) -> float:
        return float(self.alpha[name].sum())

    @cached_property
    def doubled(self):
        from .doubling import double_network

        return double_network(self)

    def __repr__(self):
        return f"Network({', '.join(self.names)})"


def validate_network(net: Network) -> Network:
    """Check the DAG and Dirichlet-row invariants; return ``net`` unchanged."""
    Structure._toposort(net)
    for n in net.names:
        a = net.alpha.get(n)
        if a is None:
            raise MissingRow(f"no Dirichlet rows for {n!r}")
        if a.shape != net.cpt_shape(n):
            raise MissingRow(
                f"{n!r} has alpha of shape {a.shape}; expected one row per parent "
                f"configuration, shape {net.cpt_shape(n)}"
            )
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise NonPositiveAlpha(f"{n!r} has non-positive hyperparameters")
    return net


@dataclass(frozen=True)
class CompleteData:
    """Family counts n_ab tallied from ``n`` complete tuples."""

    counts: Mapping[str, np.ndarray]
    n: int

    def __post_init__(self):
        counts = {}
        for k, c in self.counts.items():
            c = np.asarray(c)
            if np.any(c < 0) or not np.all(c == np.round(c)):
                raise IndexMismatch(f"counts for {k!r} must be nonnegative integers")
            if int(c.sum()) != self.n:
                raise IndexMismatch(f"counts for {k!r} sum to {int(c.sum())}, not n={self.n}")
            counts[k] = c.astype(np.int64)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_records(cls, structure: Structure, records: Iterable[Mapping[str, Hashable]]) -> "CompleteData":
        """Tally complete tuples given as ``{variable: label}`` mappings."""
        counts = {n: np.zeros(structure.cpt_shape(n), dtype=np.int64) for n in structure.names}
        n = 0
        for rec in records:
            if set(rec) != set(structure.names):
                raise IndexMismatch(f"record keys {sorted(rec)} do not match the network variables")
            idx = {k: structure.var(k).index(v) for k, v in rec.items()}
            for name in structure.names:
                counts[name][tuple(idx[p] for p in structure.family(name))] += 1
            n += 1
        return cls(counts, n)

    @classmethod
    def from_indices(cls, structure: Structure, data: np.ndarray) -> "CompleteData":
        """Tally an (n, n_vars) integer array whose columns follow ``structure.names``."""
        data = np.asarray(data, dtype=np.int64).reshape(-1, len(structure.names))
        col = {n: i for i, n in enumerate(structure.names)}
        counts = {}
        for name in structure.names:
            fam = structure.family(name)
            shape = structure.cpt_shape(name)
            flat = np.ravel_multi_index(tuple(data[:, col[f]] for f in fam), shape) if len(data) else np.zeros(0, int)
            counts[name] = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
        return cls(counts, len(data))

    @classmethod
    def empty(cls, structure: Structure) -> "CompleteData":
        return cls({n: np.zeros(structure.cpt_shape(n), dtype=np.int64) for n in structure.names}, 0)


def posterior_update(net: Network, data: CompleteData) -> Network:
    """Conjugate update: alpha = prior alpha + family counts."""
    if set(data.counts) != set(net.names):
        raise IndexMismatch("data counts do not cover exactly the network variables")
    alpha = {}
    for n in net.names:
        c = data.counts[n]
        if c.shape != net.cpt_shape(n):
            raise IndexMismatch(f"counts for {n!r} have shape {c.shape}, expected {net.cpt_shape(n)}")
        alpha[n] = net.alpha[n] + c
    return net.with_alpha(alpha)


def parent_marginal(structure: Structure, tables: Mapping[str, np.ndarray], name: str) -> np.ndarray:
    """Joint probability of each parent configuration of ``name`` under ``tables``."""
    from .inference import marginal_table

    parents = structure.parents[name]
    if not parents:
        return np.array(1.0)
    return marginal_table(structure, tables, keep=parents).table


def bde_prior(
    structure: Structure, mean_cpts: Mapping[str, np.ndarray], m: float
) -> Network:
    """Hyperparameters alpha_{b|a} = m * P(a) * theta_{b|a} under the mean CPTs.

    Every variable gets total pseudo-count ``m`` and the predictive means
    reproduce ``mean_cpts``.
    """
    if not m > 0:
        raise NonPositiveM(f"effective sample size must be positive, got {m}")
    tables = {}
    for n in structure.names:
        t = np.asarray(mean_cpts[n], dtype=float)
        if t.shape != structure.cpt_shape(n):
            raise MissingRow(f"mean table for {n!r} has shape {t.shape}")
        if np.any(t < 0) or not np.allclose(t.sum(axis=-1), 1.0, rtol=0, atol=1e-10):
            raise NotNormalized(f"mean rows of {n!r} must be probability vectors")
        tables[n] = t
    alpha = {}
    for n in structure.names:
        pa = parent_marginal(structure, tables, n)
        if np.any(pa <= 0):
            raise ZeroProbabilityConfig(f"a parent configuration of {n!r} has probability 0")
        alpha[n] = m * pa[..., None] * tables[n]
    return Network(structure.variables, structure.parents, alpha)


def scale_effective_sample_size(net: Network, factor: float) -> Network:
    """Multiply every hyperparameter by ``factor``; predictive means are unchanged."""
    if not factor > 0:
        raise NonPositiveM(f"scale factor must be positive, got {factor}")
    return net.with_alpha({n: a * factor for n, a in net.alpha.items()})
