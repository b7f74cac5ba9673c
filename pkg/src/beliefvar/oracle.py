"""Monte-Carlo ground truth for query means and variances.

Draws are generated in fixed blocks of ``BLOCK`` samples; block ``j`` uses a
stream seeded by ``(seed, j)``.  Per-block central moments are merged in
block order, so results depend only on (network, query, k, seed) and not on
chunking or the number of worker threads.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .inference import Query, query_terms
from .network import Network

BLOCK = 4096


@dataclass(frozen=True)
class OracleConfig:
    k: int = 100_000
    seed: int = 0
    chunk_size: int = 8 * BLOCK
    workers: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two samples")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")


@dataclass(frozen=True)
class OracleResult:
    q0: float
    v0: float
    se_mean: float
    se_var: float
    k_effective: int


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block])))


def _draw(net: Network, rng: np.random.Generator, size: int) -> dict[str, np.ndarray]:
    out = {}
    for n in net.names:
        a = net.alpha[n]
        g = rng.standard_gamma(a, size=(size,) + a.shape)
        out[n] = g / g.sum(axis=-1, keepdims=True)
    return out


def sample_parameters(net: Network, seed: int, size: int | None = None) -> dict[str, np.ndarray]:
    """Independent Dir(alpha) draws for every CPT row (gamma-ratio method).

    With ``size`` the arrays carry a leading batch axis of that length.
    """
    rng = _block_rng(seed, 0)
    draws = _draw(net, rng, 1 if size is None else size)
    if size is None:
        return {n: d[0] for n, d in draws.items()}
    return draws


# Streaming central moments: (count, mean, M2, M3, M4)
def _moments(x: np.ndarray) -> tuple:
    n = x.size
    if n == 0:
        return (0, 0.0, 0.0, 0.0, 0.0)
    mean = x.mean()
    d = x - mean
    d2 = d * d
    return (n, float(mean), float(d2.sum()), float((d2 * d).sum()), float((d2 * d2).sum()))


def _merge(a: tuple, b: tuple) -> tuple:
    na, ma, m2a, m3a, m4a = a
    nb, mb, m2b, m3b, m4b = b
    if na == 0:
        return b
    if nb == 0:
        return a
    n = na + nb
    delta = mb - ma
    dn = delta / n
    mean = ma + nb * dn
    m2 = m2a + m2b + delta * dn * na * nb
    m3 = (m3a + m3b + delta * dn * dn * na * nb * (na - nb)
          + 3.0 * dn * (na * m2b - nb * m2a))
    m4 = (m4a + m4b + delta * dn * dn * dn * na * nb * (na * na - na * nb + nb * nb)
          + 6.0 * dn * dn * (na * na * m2b + nb * nb * m2a)
          + 4.0 * dn * (na * m3b - nb * m3a))
    return (n, mean, m2, m3, m4)


def _finish(mom: tuple) -> OracleResult:
    n, mean, m2, _, m4 = mom
    if n < 2:
        return OracleResult(mean if n else math.nan, math.nan, math.nan, math.nan, n)
    var = m2 / (n - 1)
    mu4 = m4 / n
    var_of_var = max(mu4 - var * var * (n - 3) / (n - 1), 0.0) / n
    return OracleResult(
        q0=min(max(mean, 0.0), 1.0),
        v0=max(var, 0.0),
        se_mean=math.sqrt(max(var, 0.0) / n),
        se_var=math.sqrt(var_of_var),
        k_effective=n,
    )


def _block_values(net, resolved, k, seed, block):
    size = min(BLOCK, k - block * BLOCK)
    params = _draw(net, _block_rng(seed, block), size)
    out = []
    for rq in resolved:
        num, total = query_terms(net, params, rq)
        ok = total > 0
        out.append(_moments(np.asarray(num)[ok] / np.asarray(total)[ok]))
    return out


def mc_estimates_many(net: Network, queries: Sequence[Query], cfg: OracleConfig) -> list[OracleResult]:
    """Oracle results for several queries sharing one set of posterior draws.

    Each entry equals what :func:`mc_estimates` returns for that query alone.
    """
    resolved = [q.resolve(net) for q in queries]
    n_blocks = -(-cfg.k // BLOCK)
    per_chunk = max(1, cfg.chunk_size // BLOCK)
    chunks = [range(s, min(s + per_chunk, n_blocks)) for s in range(0, n_blocks, per_chunk)]

    def run(chunk):
        return [_block_values(net, resolved, cfg.k, cfg.seed, b) for b in chunk]

    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    acc = [(0, 0.0, 0.0, 0.0, 0.0)] * len(queries)
    for chunk in results:
        for block in chunk:
            acc = [_merge(a, b) for a, b in zip(acc, block)]
    return [_finish(a) for a in acc]


def mc_estimates(net: Network, q: Query, cfg: OracleConfig | None = None) -> OracleResult:
    """Sample mean (q0) and sample variance (v0, divisor k - 1) of q(Theta)."""
    return mc_estimates_many(net, [q], cfg or OracleConfig())[0]


def warn_if_undersampled(k: int, m: float) -> bool:
    """The oracle variance only out-resolves O(1/m) errors when k is of order m^2."""
    if k < m * m:
        warnings.warn(f"k={k} is below m^2={m * m:g}; oracle variances may be too noisy", stacklevel=2)
        return True
    return False
