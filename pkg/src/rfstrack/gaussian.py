"""Gaussian / beta primitives and single-object filter kernels.

Everything downstream (GLMB, robust CPHD, birth model) is built from the
pieces in this module: Gaussian densities and mixtures, Kalman and unscented
predict/update steps, mixture hygiene, and beta-distributed detection
probabilities.  All types are immutable values; all operations are pure
functions, so they are safe to call from any number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ContractViolationError, NumericalDegeneracyError

LOG_2PI = math.log(2.0 * math.pi)

# Unscented-transform spread parameters (alpha, beta, kappa).
DEFAULT_UT_PARAMS = (1.0, 2.0, 2.0)


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class Gaussian:
    """A single Gaussian density N(mean, cov); covariance symmetrized on construction."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ContractViolationError(
                f"covariance shape {cov.shape} does not match mean dimension {mean.size}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", symmetrize(cov))

    @property
    def dim(self) -> int:
        return self.mean.size

    def logpdf(self, x: np.ndarray) -> float:
        """Log density at x, via a Cholesky solve (never an explicit inverse)."""
        chol = _chol(self.cov)
        resid = np.asarray(x, dtype=float).reshape(-1) - self.mean
        white = cho_solve(chol, resid)
        logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
        return -0.5 * (self.dim * LOG_2PI + logdet + float(resid @ white))


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted Gaussian components, stored as stacked arrays.

    Weights are non-negative; when the mixture represents a single-object
    state density they sum to one, when it represents an intensity they sum
    to the expected object count.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        p = np.asarray(self.covs, dtype=float)
        if p.ndim == 2:
            p = p[np.newaxis]
        if not (w.shape[0] == m.shape[0] == p.shape[0]):
            raise ContractViolationError("mixture component counts disagree")
        if np.any(w < 0):
            raise ContractViolationError("mixture weights must be non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covs", p)

    @classmethod
    def single(cls, g: Gaussian, weight: float = 1.0) -> "GaussianMixture":
        return cls(np.array([weight]), g.mean[np.newaxis], g.cov[np.newaxis])

    def __len__(self) -> int:
        return self.weights.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def component(self, i: int) -> Gaussian:
        return Gaussian(self.means[i], self.covs[i])

    def mean(self) -> np.ndarray:
        """Overall mixture mean (weights need not be normalized)."""
        w = self.weights / self.weights.sum()
        return w @ self.means

    def normalized(self) -> "GaussianMixture":
        total = self.weights.sum()
        if total <= 0:
            raise NumericalDegeneracyError("cannot normalize a zero-mass mixture")
        return GaussianMixture(self.weights / total, self.means, self.covs)


@dataclass(frozen=True)
class BetaParams:
    """Beta(s, t) parameters for a detection probability on (0, 1)."""

    s: float
    t: float

    def __post_init__(self):
        if not (self.s > 0 and self.t > 0):
            raise ContractViolationError("beta parameters must be positive")

    @property
    def mean(self) -> float:
        return self.s / (self.s + self.t)

    @property
    def variance(self) -> float:
        c = self.s + self.t
        return self.s * self.t / (c * c * (c + 1.0))

    @classmethod
    def from_moments(cls, mean: float, variance: float) -> "BetaParams":
        """Invert mean/variance to (s, t); variance must sit below mean*(1-mean)."""
        bound = mean * (1.0 - mean)
        if not (0.0 < mean < 1.0) or not (0.0 < variance < bound):
            raise ContractViolationError("moments outside the beta-representable region")
        c = bound / variance - 1.0
        return cls(mean * c, (1.0 - mean) * c)


def _chol(cov: np.ndarray):
    try:
        return cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"covariance not positive definite: {exc}") from exc


def kalman_predict(prior: Gaussian, transition: np.ndarray, noise: np.ndarray) -> Gaussian:
    """Propagate N(m, P) through a linear model: N(F m, F P F^T + Q)."""
    f = np.asarray(transition, dtype=float)
    q = np.asarray(noise, dtype=float)
    if f.shape[1] != prior.dim or q.shape != (f.shape[0], f.shape[0]):
        raise ContractViolationError("transition/noise dimensions do not conform")
    return Gaussian(f @ prior.mean, f @ prior.cov @ f.T + q)


def kalman_update(
    prior: Gaussian, z: np.ndarray, observation: np.ndarray, noise: np.ndarray
) -> tuple[Gaussian, float]:
    """Condition N(m, P) on z = H x + v, v ~ N(0, R).

    Returns the posterior and the log marginal likelihood log N(z; H m, S).
    The innovation covariance is factorized, never inverted directly, and the
    posterior covariance uses the Joseph form to stay PSD.
    """
    h = np.asarray(observation, dtype=float)
    r = np.asarray(noise, dtype=float)
    z = np.asarray(z, dtype=float).reshape(-1)
    if h.shape != (z.size, prior.dim) or r.shape != (z.size, z.size):
        raise ContractViolationError("observation/noise dimensions do not conform")
    z_hat = h @ prior.mean
    s = symmetrize(h @ prior.cov @ h.T + r)
    chol = _chol(s)
    resid = z - z_hat
    gain = cho_solve(chol, h @ prior.cov).T
    mean = prior.mean + gain @ resid
    imkh = np.eye(prior.dim) - gain @ h
    cov = imkh @ prior.cov @ imkh.T + gain @ r @ gain.T
    logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
    loglik = -0.5 * (z.size * LOG_2PI + logdet + float(resid @ cho_solve(chol, resid)))
    return Gaussian(mean, cov), loglik


def sigma_points(
    g: Gaussian, ut_params: tuple[float, float, float] = DEFAULT_UT_PARAMS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled sigma points and their mean/covariance weights (2d+1 points)."""
    alpha, beta, kappa = ut_params
    d = g.dim
    lam = alpha * alpha * (d + kappa) - d
    try:
        root = np.linalg.cholesky((d + lam) * g.cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError("sigma points need a PD covariance") from exc
    points = np.vstack([g.mean, g.mean + root.T, g.mean - root.T])
    wm = np.full(2 * d + 1, 1.0 / (2.0 * (d + lam)))
    wc = wm.copy()
    wm[0] = lam / (d + lam)
    wc[0] = wm[0] + (1.0 - alpha * alpha + beta)
    return points, wm, wc


def unscented_transform(
    points: np.ndarray, wm: np.ndarray, wc: np.ndarray, noise: np.ndarray | None = None
) -> Gaussian:
    """Moment-match transformed sigma points, with optional additive noise."""
    mean = wm @ points
    dev = points - mean
    cov = (dev.T * wc) @ dev
    if noise is not None:
        cov = cov + noise
    return Gaussian(mean, cov)


def ut_predict(
    prior: Gaussian,
    transition_fn,
    noise: np.ndarray,
    ut_params: tuple[float, float, float] = DEFAULT_UT_PARAMS,
) -> Gaussian:
    """Unscented prediction through a nonlinear transition with additive noise."""
    points, wm, wc = sigma_points(prior, ut_params)
    propagated = np.apply_along_axis(transition_fn, 1, points)
    return unscented_transform(propagated, wm, wc, noise)


def ut_project(
    prior: Gaussian,
    measure_fn,
    noise: np.ndarray,
    ut_params: tuple[float, float, float] = DEFAULT_UT_PARAMS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Predicted measurement mean, innovation covariance and state/measurement
    cross covariance for a nonlinear measurement function with additive noise."""
    points, wm, wc = sigma_points(prior, ut_params)
    projected = np.apply_along_axis(measure_fn, 1, points)
    z_hat = wm @ projected
    dz = projected - z_hat
    s = symmetrize((dz.T * wc) @ dz + np.asarray(noise, dtype=float))
    cross = ((points - prior.mean).T * wc) @ dz
    return z_hat, s, cross


def ukf_update(
    prior: Gaussian,
    z: np.ndarray,
    measure_fn,
    noise: np.ndarray,
    ut_params: tuple[float, float, float] = DEFAULT_UT_PARAMS,
) -> tuple[Gaussian, float]:
    """Unscented measurement update; agrees with kalman_update for linear maps."""
    z = np.asarray(z, dtype=float).reshape(-1)
    z_hat, s, cross = ut_project(prior, measure_fn, noise, ut_params)
    chol = _chol(s)
    gain = cho_solve(chol, cross.T).T
    resid = z - z_hat
    mean = prior.mean + gain @ resid
    cov = prior.cov - gain @ s @ gain.T
    logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
    loglik = -0.5 * (z.size * LOG_2PI + logdet + float(resid @ cho_solve(chol, resid)))
    return Gaussian(mean, cov), loglik


def gm_reduce(
    mix: GaussianMixture,
    prune_threshold: float = 1e-5,
    merge_threshold: float = 4.0,
    max_components: int = 100,
) -> GaussianMixture:
    """Prune, merge and cap a mixture, preserving its pre-reduction total weight.

    Components below prune_threshold are dropped; components within squared
    Mahalanobis distance merge_threshold of the current heaviest survivor are
    moment-merged into it; at most max_components survive, by weight.
    """
    if prune_threshold < 0 or merge_threshold < 0:
        raise ContractViolationError("reduction thresholds must be non-negative")
    total = mix.total_weight
    keep = np.flatnonzero(mix.weights >= prune_threshold)
    if keep.size == 0:
        return GaussianMixture(np.empty(0), np.empty((0, mix.means.shape[1])), np.empty((0, mix.means.shape[1], mix.means.shape[1])))
    w = mix.weights[keep].copy()
    means = mix.means[keep]
    covs = mix.covs[keep]

    out_w, out_m, out_p = [], [], []
    alive = np.ones(w.size, dtype=bool)
    while alive.any():
        pivot = int(np.flatnonzero(alive)[np.argmax(w[alive])])
        chol = _chol(covs[pivot])
        idx = np.flatnonzero(alive)
        dev = means[idx] - means[pivot]
        d2 = np.einsum("ij,ij->i", dev, cho_solve(chol, dev.T).T)
        member = idx[d2 < merge_threshold] if merge_threshold > 0 else np.array([pivot])
        if member.size == 0:
            member = np.array([pivot])
        wm = w[member]
        wsum = wm.sum()
        mean = (wm @ means[member]) / wsum
        dev = means[member] - mean
        cov = np.einsum("k,kij->ij", wm, covs[member]) / wsum + (dev.T * wm) @ dev / wsum
        out_w.append(wsum)
        out_m.append(mean)
        out_p.append(symmetrize(cov))
        alive[member] = False

    order = np.argsort(out_w)[::-1][:max_components]
    w = np.array([out_w[i] for i in order])
    reduced = GaussianMixture(
        w * (total / w.sum()),
        np.array([out_m[i] for i in order]),
        np.array([out_p[i] for i in order]),
    )
    return reduced


def beta_predict(b: BetaParams, variance_inflation: float) -> BetaParams:
    """Mean-preserving dispersion of a beta density.

    The variance is multiplied by variance_inflation (> 1) and clamped below
    the representable bound mean*(1-mean); parameters are recovered from the
    moment equations, so the family stays closed under prediction.
    """
    if variance_inflation <= 1.0:
        raise ContractViolationError("variance inflation factor must exceed 1")
    mean = b.mean
    bound = mean * (1.0 - mean)
    variance = min(b.variance * variance_inflation, 0.999 * bound)
    return BetaParams.from_moments(mean, variance)
