"""Robust CPHD filter on a hybrid augmented state space.

Two intensities are propagated jointly with one hybrid cardinality
distribution: one over actual objects, whose state couples kinematics with a
beta-distributed detection probability, and one over clutter-generating
objects, which carry only a detection-probability beta (their measurements
are uniform over the measurement space, so the spatial factor is analytic).
The updated clutter intensity yields the expected clutter count per scan and
the updated object intensity yields the mean detection probability; both are
bootstrapped into the tracking filter.

Beta factors stay closed under the update: a detection multiplies the beta
density by its argument (s -> s + 1), a missed detection by one minus it
(t -> t + 1), with the mixture weights absorbing the scalar ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln, logsumexp
from scipy.stats import binom, poisson

from .errors import ContractViolationError, NumericalDegeneracyError
from .gaussian import BetaParams, Gaussian, beta_predict, symmetrize

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BetaGaussianMixture:
    """Intensity over (kinematic state, detection probability) pairs."""

    weights: np.ndarray   # (k,)
    beta_s: np.ndarray    # (k,)
    beta_t: np.ndarray    # (k,)
    means: np.ndarray     # (k, d)
    covs: np.ndarray      # (k, d, d)

    @classmethod
    def empty(cls, dim: int) -> "BetaGaussianMixture":
        return cls(np.empty(0), np.empty(0), np.empty(0), np.empty((0, dim)), np.empty((0, dim, dim)))

    def __len__(self) -> int:
        return self.weights.size

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def beta_means(self) -> np.ndarray:
        return self.beta_s / (self.beta_s + self.beta_t)

    def detected_mass(self) -> float:
        """< intensity, detection probability >."""
        return float((self.weights * self.beta_means).sum()) if len(self) else 0.0


@dataclass(frozen=True)
class BetaMixture:
    """Clutter-object intensity: weights over detection-probability betas."""

    weights: np.ndarray
    beta_s: np.ndarray
    beta_t: np.ndarray

    @classmethod
    def empty(cls) -> "BetaMixture":
        return cls(np.empty(0), np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return self.weights.size

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def beta_means(self) -> np.ndarray:
        return self.beta_s / (self.beta_s + self.beta_t)

    def detected_mass(self) -> float:
        return float((self.weights * self.beta_means).sum()) if len(self) else 0.0


@dataclass(frozen=True)
class CphdConfig:
    survival_probability: float = 0.99      # actual objects
    clutter_survival: float = 0.9
    clutter_detection_beta: BetaParams = field(default_factory=lambda: BetaParams(95.0, 5.0))
    clutter_birth_rate: float = 5.0         # intensity mass injected per scan
    max_cardinality: int = 300
    beta_inflation: float = 1.2
    max_components: int = 100
    prune_threshold: float = 1e-5
    merge_threshold: float = 4.0        # squared Mahalanobis; 0 disables merging
    beta_merge_tolerance: float = 0.05  # max detection-mean gap for a merge


@dataclass(frozen=True)
class CphdState:
    objects: BetaGaussianMixture
    clutter: BetaMixture
    cardinality: np.ndarray       # hybrid object count distribution, 0..max_cardinality
    truncation_warnings: int = 0

    @classmethod
    def initial(cls, state_dim: int, cfg: CphdConfig) -> "CphdState":
        rho = np.zeros(cfg.max_cardinality + 1)
        rho[0] = 1.0
        return cls(BetaGaussianMixture.empty(state_dim), BetaMixture.empty(), rho)

    def total_mass(self) -> float:
        return self.objects.mass + self.clutter.mass


def _binomial_thinning(rho: np.ndarray, phi: float) -> np.ndarray:
    """Distribution of survivors when each of n objects persists w.p. phi."""
    n = rho.size - 1
    if phi >= 1.0:
        return rho.copy()
    grid = np.arange(n + 1)
    pmf = binom.pmf(grid[:, None], grid[None, :], phi)  # [j, l] = P(j of l survive)
    return pmf @ rho


def cphd_predict(state: CphdState, birth, motion, cfg: CphdConfig) -> CphdState:
    """Propagate intensities and the hybrid cardinality one step forward.

    ``birth`` is the (components, cardinality) pair produced by the adaptive
    birth model; clutter birth is the fixed intensity from the config.
    """
    birth_components, birth_cardinality = birth

    # Actual objects: survival-scaled kinematic prediction with beta dispersion.
    parts = []
    for i in range(len(state.objects)):
        g = motion.predict(Gaussian(state.objects.means[i], state.objects.covs[i]))
        b = beta_predict(BetaParams(state.objects.beta_s[i], state.objects.beta_t[i]), cfg.beta_inflation)
        parts.append((cfg.survival_probability * state.objects.weights[i], b.s, b.t, g.mean, g.cov))
    for w, b, g in birth_components:
        parts.append((w, b.s, b.t, g.mean, g.cov))
    dim = state.objects.means.shape[1]
    objects = (
        BetaGaussianMixture(
            np.array([p[0] for p in parts]),
            np.array([p[1] for p in parts]),
            np.array([p[2] for p in parts]),
            np.array([p[3] for p in parts]),
            np.array([p[4] for p in parts]),
        )
        if parts
        else BetaGaussianMixture.empty(dim)
    )

    # Clutter objects: mass decay plus the fixed birth component.
    cb = cfg.clutter_detection_beta
    clutter = BetaMixture(
        np.concatenate([cfg.clutter_survival * state.clutter.weights, [cfg.clutter_birth_rate]]),
        np.concatenate([state.clutter.beta_s, [cb.s]]),
        np.concatenate([state.clutter.beta_t, [cb.t]]),
    )

    # Hybrid cardinality: binomial thinning convolved with the joint birth
    # cardinality (adaptive births convolved with truncated Poisson clutter).
    prior_mass = state.total_mass()
    if prior_mass > 0:
        phi = (
            cfg.survival_probability * state.objects.mass
            + cfg.clutter_survival * state.clutter.mass
        ) / prior_mass
    else:
        phi = 1.0
    thinned = _binomial_thinning(state.cardinality, min(phi, 1.0))
    n_max = cfg.max_cardinality
    clutter_birth_card = poisson.pmf(np.arange(n_max + 1), cfg.clutter_birth_rate)
    joint_birth = np.convolve(birth_cardinality, clutter_birth_card)[: n_max + 1]
    rho = np.convolve(thinned, joint_birth)
    lost = float(rho[n_max + 1 :].sum())
    rho = rho[: n_max + 1]
    total = rho.sum()
    if total <= 0:
        raise NumericalDegeneracyError("predicted cardinality lost all mass")
    return CphdState(
        objects=_reduce_objects(objects, cfg),
        clutter=_reduce_clutter(clutter, cfg),
        cardinality=rho / total,
        truncation_warnings=state.truncation_warnings + (1 if lost > 1e-12 else 0),
    )


def _log_perm(n: np.ndarray, j: int) -> np.ndarray:
    """log n!/(n-j)! with -inf where n < j."""
    out = np.full(n.shape, -np.inf)
    ok = n >= j
    out[ok] = gammaln(n[ok] + 1.0) - gammaln(n[ok] - j + 1.0)
    return out


def cphd_update(state: CphdState, measurements, sensor, cfg: CphdConfig) -> CphdState:
    """Condition the predicted hybrid state on one measurement scan."""
    z = np.asarray(measurements, dtype=float)
    if z.size == 0:
        z = np.empty((0, 2))
    z = np.atleast_2d(z)
    m = z.shape[0]
    if m > cfg.max_cardinality:
        raise ContractViolationError(
            f"{m} measurements exceed the cardinality cap {cfg.max_cardinality}; raise max_cardinality"
        )
    total_mass = state.total_mass()
    if total_mass <= 0:
        raise NumericalDegeneracyError("updating a zero-mass hybrid state")

    objects, clutter = state.objects, state.clutter
    n_obj = len(objects)
    ea = objects.beta_means if n_obj else np.empty(0)
    eb = clutter.beta_means if len(clutter) else np.empty(0)

    # Per-component measurement likelihoods and conditioning gains.
    logliks = np.full((n_obj, m), -np.inf)
    gains, post_covs, z_hats = [], [], []
    for i in range(n_obj):
        z_hat, s, cross = sensor.project(Gaussian(objects.means[i], objects.covs[i]))
        try:
            chol = cho_factor(s, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalDegeneracyError("innovation covariance not PD") from exc
        gain = cho_solve(chol, cross.T).T
        gains.append(gain)
        post_covs.append(symmetrize(objects.covs[i] - gain @ s @ gain.T))
        z_hats.append(z_hat)
        if m:
            resid = z - z_hat
            white = cho_solve(chol, resid.T)
            quad = np.einsum("ij,ji->i", resid, white)
            logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
            logliks[i] = -0.5 * (z.shape[1] * LOG_2PI + logdet + quad)

    clutter_density = sensor.clutter_density
    det_obj = (objects.weights * ea)[:, None] * np.exp(logliks) if n_obj else np.empty((0, m))
    clutter_detected_mass = clutter.detected_mass()
    denom = clutter_detected_mass * clutter_density + det_obj.sum(axis=0)  # per measurement
    if m and np.any(denom <= 0):
        raise NumericalDegeneracyError("a measurement has zero total likelihood mass")

    # Missed-detection fraction and the cardinality reweighting factors.
    detected_total = objects.detected_mass() + clutter_detected_mass
    phi_missed = max(1.0 - detected_total / total_mass, 1e-300)
    log_phi = math.log(phi_missed)
    grid = np.arange(cfg.max_cardinality + 1)
    with np.errstate(divide="ignore"):
        log_rho = np.log(state.cardinality)
    log_gamma0 = _log_perm(grid, m) + (grid - m) * log_phi
    log_gamma0[grid < m] = -np.inf
    log_inner0 = logsumexp(log_gamma0 + log_rho)
    if not np.isfinite(log_inner0):
        raise NumericalDegeneracyError("cardinality support below the measurement count")
    log_gamma1 = _log_perm(grid, m + 1) + (grid - m - 1) * log_phi
    log_gamma1[grid < m + 1] = -np.inf
    log_inner1 = logsumexp(log_gamma1 + log_rho)
    missed_scale = math.exp(log_inner1 - log_inner0) / total_mass if np.isfinite(log_inner1) else 0.0

    # Updated cardinality: zero below |Z|, reweighted above.
    log_post = log_rho + log_gamma0 - log_inner0
    rho = np.exp(log_post - logsumexp(log_post))

    # Updated object intensity: one missed child per component plus one child
    # per (component, measurement) pair, detected children conditioned on z.
    cand = []
    for i in range(n_obj):
        w_miss = objects.weights[i] * (1.0 - ea[i]) * missed_scale
        cand.append((w_miss, objects.beta_s[i], objects.beta_t[i] + 1.0, objects.means[i], objects.covs[i]))
        if m:
            w_det = det_obj[i] / denom
            keep = np.flatnonzero(w_det > cfg.prune_threshold * 1e-3)
            for j in keep:
                mean = objects.means[i] + gains[i] @ (z[j] - z_hats[i])
                cand.append((float(w_det[j]), objects.beta_s[i] + 1.0, objects.beta_t[i], mean, post_covs[i]))
    dim = objects.means.shape[1]
    new_objects = (
        BetaGaussianMixture(
            np.array([c[0] for c in cand]),
            np.array([c[1] for c in cand]),
            np.array([c[2] for c in cand]),
            np.array([c[3] for c in cand]),
            np.array([c[4] for c in cand]),
        )
        if cand
        else BetaGaussianMixture.empty(dim)
    )

    # Updated clutter intensity: the detected branch collapses over z because
    # the clutter likelihood is flat.
    det_sum = clutter_density * float((1.0 / denom).sum()) if m else 0.0
    new_clutter = BetaMixture(
        np.concatenate([
            clutter.weights * (1.0 - eb) * missed_scale,
            clutter.weights * eb * det_sum,
        ]),
        np.concatenate([clutter.beta_s, clutter.beta_s + 1.0]),
        np.concatenate([clutter.beta_t + 1.0, clutter.beta_t]),
    ) if len(clutter) else clutter

    return CphdState(
        objects=_reduce_objects(new_objects, cfg),
        clutter=_reduce_clutter(new_clutter, cfg),
        cardinality=rho,
        truncation_warnings=state.truncation_warnings,
    )


def _reduce_objects(mix: BetaGaussianMixture, cfg: CphdConfig) -> BetaGaussianMixture:
    """Prune/merge/cap the object intensity, preserving its total mass.

    Components merge when their kinematic parts are close in Mahalanobis
    distance and their detection-probability means nearly coincide; merged
    betas are rebuilt from the mixture's first two moments.
    """
    if len(mix) == 0:
        return mix
    total = mix.mass
    if total <= 0.0:
        return BetaGaussianMixture.empty(mix.means.shape[1])
    keep = np.flatnonzero(mix.weights >= cfg.prune_threshold)
    if keep.size == 0:
        keep = np.array([int(np.argmax(mix.weights))])
    w = mix.weights[keep].copy()
    s, t = mix.beta_s[keep], mix.beta_t[keep]
    means, covs = mix.means[keep], mix.covs[keep]
    bmean = s / (s + t)
    bvar = s * t / ((s + t) ** 2 * (s + t + 1.0))

    out = []
    alive = np.ones(w.size, dtype=bool)
    while alive.any():
        pivot = int(np.flatnonzero(alive)[np.argmax(w[alive])])
        if cfg.merge_threshold > 0:
            chol = cho_factor(covs[pivot], lower=True)
            idx = np.flatnonzero(alive)
            dev = means[idx] - means[pivot]
            d2 = np.einsum("ij,ij->i", dev, cho_solve(chol, dev.T).T)
            member = idx[
                (d2 < cfg.merge_threshold)
                & (np.abs(bmean[idx] - bmean[pivot]) < cfg.beta_merge_tolerance)
            ]
        else:
            member = np.array([pivot])
        if member.size == 0:
            member = np.array([pivot])
        if member.size == 1:
            i = int(member[0])
            out.append((float(w[i]), float(s[i]), float(t[i]), means[i], covs[i]))
        else:
            wm = w[member]
            wsum = wm.sum()
            mean = (wm @ means[member]) / wsum
            dev = means[member] - mean
            cov = np.einsum("k,kij->ij", wm, covs[member]) / wsum + (dev.T * wm) @ dev / wsum
            mb = float(wm @ bmean[member]) / wsum
            vb = float(wm @ (bvar[member] + bmean[member] ** 2)) / wsum - mb * mb
            vb = min(max(vb, 1e-12), 0.999 * mb * (1.0 - mb))
            beta = BetaParams.from_moments(mb, vb)
            out.append((wsum, beta.s, beta.t, mean, symmetrize(cov)))
        alive[member] = False

    out.sort(key=lambda c: -c[0])
    out = out[: cfg.max_components]
    w = np.array([c[0] for c in out])
    scale = total / w.sum()
    return BetaGaussianMixture(
        w * scale,
        np.array([c[1] for c in out]),
        np.array([c[2] for c in out]),
        np.array([c[3] for c in out]),
        np.array([c[4] for c in out]),
    )


def _reduce_clutter(mix: BetaMixture, cfg: CphdConfig) -> BetaMixture:
    """Merge identical beta parameters (the update keeps them on a lattice),
    prune and cap by weight, preserving total mass."""
    if len(mix) == 0:
        return mix
    total = mix.mass
    if total <= 0.0:
        return BetaMixture.empty()
    table: dict[tuple, float] = {}
    for i in range(len(mix)):
        key = (round(float(mix.beta_s[i]), 9), round(float(mix.beta_t[i]), 9))
        table[key] = table.get(key, 0.0) + float(mix.weights[i])
    items = [(wt, key) for key, wt in table.items() if wt >= cfg.prune_threshold]
    if not items:
        items = [(max(table.values()), max(table, key=table.get))]
    items.sort(key=lambda it: -it[0])
    items = items[: cfg.max_components]
    w = np.array([it[0] for it in items])
    scale = total / w.sum()
    return BetaMixture(
        w * scale,
        np.array([it[1][0] for it in items]),
        np.array([it[1][1] for it in items]),
    )


def estimate_clutter_rate(state: CphdState) -> float:
    """Expected clutter measurements per scan: < clutter intensity, p_D >."""
    return state.clutter.detected_mass()


def estimate_mean_pd(
    state: CphdState, default: float = 0.9, floor: float = 0.2, weight_min: float = 0.5
) -> float:
    """Mean detection probability of the extracted actual objects.

    Averages over the consolidated intensity peaks (components above the
    standard extraction weight threshold) rather than the whole intensity:
    unconfirmed births and transient missed-detection lineages otherwise drag
    the mean well below the operating point.  Components whose detection mean
    sits under ``floor`` are vanished-object remnants, not estimatable
    objects; a long miss run parks a component there (missing costs an
    undetectable object nothing), so it would otherwise linger forever.
    Falls back to the single heaviest admissible component, then to the
    configured prior mean, when nothing is consolidated yet.
    """
    objects = state.objects
    if len(objects) == 0:
        return default
    admissible = objects.beta_means >= floor
    idx = np.flatnonzero(admissible & (objects.weights >= weight_min))
    if idx.size == 0:
        idx = np.flatnonzero(admissible)
        if idx.size == 0:
            return default
        idx = idx[np.argsort(-objects.weights[idx])][:1]
    w = objects.weights[idx]
    return float((w * objects.beta_means[idx]).sum() / w.sum())
