"""Normal/inverse-chi-square regression families and Student-t predictives.

Only parameter algebra and density evaluation; these pieces are what a
continuous evidence variable contributes to a (doubled) network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln

from .errors import SingularPsi

_FIELDS = {"mu", "Psi", "nu", "tau2"}


def _cholesky(a: np.ndarray):
    try:
        return cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularPsi("matrix is not positive definite") from exc


class RegressionFamily:
    """Hyperparameters (mu, Psi, nu, tau2) for one parent configuration.

    Psi is kept internally as nu * Psi, the quantity the updates act on.
    """

    def __init__(self, mu, Psi, nu: float, tau2: float, *, _nu_psi=None):
        self.mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if not nu > 0 or not tau2 > 0:
            raise ValueError("nu and tau2 must be positive")
        self.nu = float(nu)
        self.tau2 = float(tau2)
        p = self.mu.size
        if _nu_psi is None:
            _nu_psi = self.nu * np.asarray(Psi, dtype=float).reshape(p, p)
        self.nu_psi = np.asarray(_nu_psi, dtype=float).reshape(p, p)
        if not np.allclose(self.nu_psi, self.nu_psi.T, rtol=1e-12, atol=1e-14):
            raise SingularPsi("Psi must be symmetric")
        self._chol = _cholesky(self.nu_psi)

    @property
    def Psi(self) -> np.ndarray:
        return self.nu_psi / self.nu

    @property
    def d(self) -> int:
        return self.mu.size - 1

    def design(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.d:
            raise ValueError(f"expected {self.d} covariates, got {x.size}")
        return np.concatenate(([1.0], x))

    def inv_quad(self, u: np.ndarray) -> np.ndarray:
        """u (nu Psi)^-1 u' for a row or a stack of rows."""
        u = np.atleast_2d(u)
        return u @ cho_solve(self._chol, u.T)

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "Psi": self.Psi.tolist(), "nu": self.nu, "tau2": self.tau2}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionFamily":
        extra = set(d) - _FIELDS
        if extra:
            raise ValueError(f"unknown fields {sorted(extra)}")
        return cls(d["mu"], d["Psi"], d["nu"], d["tau2"])

    def __repr__(self):
        return f"RegressionFamily(mu={self.mu}, nu={self.nu}, tau2={self.tau2})"


def regression_posterior_update(prior: RegressionFamily, X, y) -> RegressionFamily:
    """Conjugate update from rows (1, x_i') of ``X`` and responses ``y``."""
    X = np.asarray(X, dtype=float).reshape(-1, prior.mu.size)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(X) != len(y):
        raise ValueError("X and y must have the same number of rows")
    nu = prior.nu + len(y)
    nu_psi = prior.nu_psi + X.T @ X
    rhs = prior.nu_psi @ prior.mu + X.T @ y
    mu = cho_solve(_cholesky(nu_psi), rhs)
    scaled = prior.nu * prior.tau2 + prior.mu @ prior.nu_psi @ prior.mu + y @ y
    tau2 = (scaled - mu @ nu_psi @ mu) / nu
    if not tau2 > 0:
        raise SingularPsi(f"updated tau2 is not positive ({tau2})")
    return RegressionFamily(mu, None, nu, tau2, _nu_psi=nu_psi)


@dataclass(frozen=True)
class StParams:
    """Location-scale Student t: St_p(eta, Omega, nu)."""

    eta: np.ndarray
    omega: np.ndarray
    nu: float

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        omega = np.asarray(self.omega, dtype=float).reshape(eta.size, eta.size)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "omega", omega)
        if not self.nu > 0:
            raise ValueError("degrees of freedom must be positive")

    @property
    def p(self) -> int:
        return self.eta.size

    @property
    def omega2(self) -> float:
        return float(self.omega[0, 0])

    def logpdf(self, t) -> float | np.ndarray:
        return st_logdensity(self, t)

    def pdf(self, t):
        return np.exp(self.logpdf(t))

    def covariance(self) -> np.ndarray:
        if self.nu <= 2:
            raise ValueError("covariance is infinite for nu <= 2")
        return self.omega * self.nu / (self.nu - 2.0)


@dataclass(frozen=True)
class IndependentPair:
    """Product of two univariate St densities (replicates with distinct parameters)."""

    first: StParams
    second: StParams

    def logpdf(self, t):
        t = np.asarray(t, dtype=float)
        return self.first.logpdf(t[..., 0]) + self.second.logpdf(t[..., 1])

    def pdf(self, t):
        return np.exp(self.logpdf(t))


def st_logdensity(p: StParams, t):
    t = np.asarray(t, dtype=float)
    if p.p == 1 and (t.ndim == 0 or t.shape[-1] != 1):
        t = t[..., None]
    L = np.linalg.cholesky(p.omega)
    z = np.linalg.solve(L, np.moveaxis(t - p.eta, -1, 0).reshape(p.p, -1))
    maha = (z * z).sum(axis=0).reshape(t.shape[:-1])
    half_logdet = np.log(np.diag(L)).sum()
    nu, dim = p.nu, p.p
    out = (gammaln((nu + dim) / 2.0) - gammaln(nu / 2.0) - 0.5 * dim * math.log(nu * math.pi)
           - half_logdet - 0.5 * (nu + dim) * np.log1p(maha / nu))
    return float(out) if np.ndim(out) == 0 else out


def st_density(p: StParams, t):
    return np.exp(st_logdensity(p, t))


def predictive_st1(fam: RegressionFamily, x) -> StParams:
    """Predictive law of Y at covariates x, integrating out (beta, sigma^2)."""
    u = fam.design(x)
    omega2 = fam.tau2 * (float(fam.inv_quad(u)[0, 0]) + 1.0)
    return StParams(np.array([u @ fam.mu]), np.array([[omega2]]), fam.nu)


def predictive_st2_doubled(fam: RegressionFamily, x1, x2, same_config: bool, other: RegressionFamily | None = None):
    """Joint predictive of two replicates (Y1, Y2).

    Replicates under different parent configurations have independent
    parameters (``other`` holds the second family) and the density factors.
    Under the same configuration they share (beta, sigma^2) and follow a
    bivariate St with positively correlated components.
    """
    if not same_config:
        return IndependentPair(predictive_st1(fam, x1), predictive_st1(other or fam, x2))
    X2 = np.vstack([fam.design(x1), fam.design(x2)])
    omega = fam.tau2 * (fam.inv_quad(X2) + np.eye(2))
    return StParams(X2 @ fam.mu, omega, fam.nu)


def sample_predictive(fam: RegressionFamily, X, rng: np.random.Generator, size: int) -> np.ndarray:
    """Simulate (beta, sigma^2) then one response per row of ``X``: shape (size, rows)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sigma2 = fam.tau2 * fam.nu / rng.chisquare(fam.nu, size=size)
    cov = np.linalg.inv(fam.nu_psi)
    z = rng.multivariate_normal(np.zeros(fam.mu.size), cov, size=size)
    beta = fam.mu + np.sqrt(sigma2)[:, None] * z
    noise = rng.standard_normal((size, len(X)))
    return beta @ X.T + np.sqrt(sigma2)[:, None] * noise
