"""Generalized labeled multi-Bernoulli filtering core.

The posterior is a weighted set of hypotheses over a shared track table.
Each hypothesis owns a label set and, per label, a reference to a versioned
track entry; association history is folded into the entries (every update
conditions a track's mixture on the measurement it was matched with), so two
hypotheses agreeing on all (label, entry) pairs are the same hypothesis and
are merged by weight.

``joint_predict_update`` performs the combined prediction/update step:
survival and birth factors enter the hypothesis weights together with the
per-track association weights, candidate association maps are drawn by a
systematic-scan Gibbs chain, and the distinct maps visited are re-weighted
exactly before truncation to the hypothesis cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp
from scipy.stats import chi2

from .errors import ContractViolationError, NumericalDegeneracyError
from .gaussian import GaussianMixture, gm_reduce

Label = tuple[int, int]

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Track:
    """A labeled track entry: one state density shared by any hypothesis
    that carries this version of the label."""

    label: Label
    density: GaussianMixture


@dataclass(frozen=True)
class GlmbHypothesis:
    """One (label set, track versions) component with its log weight.

    ``associations`` records, for exactly one step, the measurement index
    each label was matched with (-1 for a missed detection); it feeds the
    unassigned-measurement probabilities of the adaptive birth model.
    """

    labels: tuple[Label, ...]
    entries: tuple[int, ...]
    log_weight: float
    associations: tuple[int, ...] = ()

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    @property
    def cardinality(self) -> int:
        return len(self.labels)


@dataclass
class GlmbDensity:
    hypotheses: list[GlmbHypothesis]
    tracks: dict[int, Track]
    time: int = 0

    @classmethod
    def empty(cls, time: int = 0) -> "GlmbDensity":
        return cls([GlmbHypothesis((), (), 0.0, ())], {}, time)

    def total_weight(self) -> float:
        return float(sum(h.weight for h in self.hypotheses))

    def cardinality_distribution(self) -> np.ndarray:
        n_max = max((h.cardinality for h in self.hypotheses), default=0)
        dist = np.zeros(n_max + 1)
        for h in self.hypotheses:
            dist[h.cardinality] += h.weight
        return dist


@dataclass(frozen=True)
class FilterParams:
    """Measurement-update parameters supplied (or bootstrapped) per step."""

    detection_probability: float
    clutter_rate: float
    clutter_density: float
    max_hypotheses: int = 1000
    gibbs_iterations: int | None = None  # default: max(1000, 10 * max_hypotheses)
    gate_probability: float = 1.0 - 1e-6

    def __post_init__(self):
        if not (0.0 < self.detection_probability < 1.0):
            raise ContractViolationError("detection probability must lie in (0, 1)")
        if self.clutter_rate <= 0 or self.clutter_density <= 0:
            raise ContractViolationError("clutter rate and density must be positive")
        if self.max_hypotheses < 1:
            raise ContractViolationError("max_hypotheses must be at least 1")

    @property
    def scan_budget(self) -> int:
        if self.gibbs_iterations is not None:
            return self.gibbs_iterations
        return max(1000, 10 * self.max_hypotheses)


# ---------------------------------------------------------------------------
# Gibbs sampling over association maps
# ---------------------------------------------------------------------------

# Column convention for association cost matrices:
#   column 0      object leaves (dies / is not born)
#   column 1      object stays, missed detection
#   column 2 + j  object stays, generates measurement j
COL_LEAVE = 0
COL_MISS = 1


def _row_options(cost_row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cols = np.flatnonzero(np.isfinite(cost_row))
    weights = np.exp(cost_row[cols] - cost_row[cols].max())
    return cols, weights


def _gibbs_chain(rows, iterations: int, rng: np.random.Generator) -> dict[tuple, None]:
    """Systematic-scan Gibbs over valid association maps.

    ``rows`` is a list of (columns, sampling weights) per object; columns
    >= 2 are exclusive across rows (a measurement explains at most one
    object).  Starts from the all-miss map and records the map after every
    full scan; returns the distinct maps in visit order.
    """
    n = len(rows)
    current = [COL_MISS] * n
    used: dict[int, int] = {}
    visited: dict[tuple, None] = {tuple(current): None}
    if n == 0:
        return visited
    for _ in range(iterations):
        draws = rng.random(n)
        for i, (cols, weights) in enumerate(rows):
            prev = current[i]
            if prev >= 2:
                used.pop(prev, None)
            total = 0.0
            avail = []
            for k in range(len(cols)):
                c = cols[k]
                if c < 2 or c not in used:
                    avail.append(k)
                    total += weights[k]
            u = draws[i] * total
            acc = 0.0
            choice = cols[avail[-1]]
            for k in avail:
                acc += weights[k]
                if u <= acc:
                    choice = cols[k]
                    break
            current[i] = int(choice)
            if choice >= 2:
                used[int(choice)] = i
        visited[tuple(current)] = None
    return visited


def gibbs_truncate(cost: np.ndarray, iterations: int, rng) -> list[tuple[int, ...]]:
    """Distinct valid association maps visited by the Gibbs chain.

    ``cost`` has one row per predicted object and columns [leave, miss,
    measurement 0, measurement 1, ...] holding log weights (-inf marks an
    inadmissible pairing).  Deterministic given the generator state.
    """
    cost = np.atleast_2d(np.asarray(cost, dtype=float))
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    rows = [_row_options(cost[i]) for i in range(cost.shape[0])]
    if any(cols.size == 0 for cols, _ in rows):
        raise ContractViolationError("every object needs at least one admissible column")
    return list(_gibbs_chain(rows, iterations, rng))


# ---------------------------------------------------------------------------
# Predicted-track bank: shared likelihoods and lazy posterior densities
# ---------------------------------------------------------------------------


class _BankEntry:
    """One predicted track (a birth candidate or a survivor version).

    Carries the association costs shared by every hypothesis containing this
    entry and builds measurement-conditioned child densities on demand.
    """

    __slots__ = (
        "label",
        "mixture",
        "cost_leave",
        "cost_miss",
        "det_costs",
        "_log_weights",
        "_gains",
        "_post_covs",
        "_z_hats",
        "_lls",
        "_children",
    )

    def __init__(self, label, mixture, log_stay, log_leave, measurements, sensor, params, gate):
        self.label = label
        self.mixture = mixture
        self.cost_leave = log_leave
        log_pd = math.log(params.detection_probability)
        log_qd = math.log1p(-params.detection_probability)
        log_kappa = math.log(params.clutter_rate * params.clutter_density)
        self.cost_miss = log_stay + log_qd
        self._children: dict[int, GaussianMixture] = {}

        m = measurements.shape[0]
        k = len(mixture)
        self._log_weights = np.log(np.maximum(mixture.weights, 1e-300))
        self._gains, self._post_covs, self._z_hats = [], [], []
        lls = np.full((k, m), -np.inf)
        for c in range(k):
            z_hat, s, cross = sensor.project(mixture.component(c))
            try:
                chol = cho_factor(s, lower=True)
            except np.linalg.LinAlgError as exc:
                raise NumericalDegeneracyError("innovation covariance not PD") from exc
            gain = cho_solve(chol, cross.T).T
            self._gains.append(gain)
            self._post_covs.append(mixture.covs[c] - gain @ s @ gain.T)
            self._z_hats.append(z_hat)
            if m:
                resid = measurements - z_hat
                white = cho_solve(chol, resid.T)
                quad = np.einsum("ij,ji->i", resid, white)
                logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
                inside = quad <= gate
                lls[c, inside] = -0.5 * (z_hat.size * LOG_2PI + logdet + quad[inside])
        self._lls = lls
        if m:
            with np.errstate(divide="ignore"):
                det_loglik = logsumexp(lls + self._log_weights[:, None], axis=0)
            self.det_costs = log_stay + log_pd + det_loglik - log_kappa
        else:
            self.det_costs = np.empty(0)

    def cost_row(self, num_measurements: int) -> np.ndarray:
        row = np.empty(num_measurements + 2)
        row[COL_LEAVE] = self.cost_leave
        row[COL_MISS] = self.cost_miss
        row[2:] = self.det_costs
        return row

    def cost_of(self, col: int) -> float:
        if col == COL_LEAVE:
            return self.cost_leave
        if col == COL_MISS:
            return self.cost_miss
        return float(self.det_costs[col - 2])

    def child_density(self, col: int, measurements: np.ndarray) -> GaussianMixture:
        """Posterior mixture for this entry under assignment ``col``."""
        if col == COL_MISS:
            return self.mixture
        cached = self._children.get(col)
        if cached is not None:
            return cached
        j = col - 2
        z = measurements[j]
        lw = self._log_weights + self._lls[:, j]
        lw -= lw.max()
        weights = np.exp(lw)
        means = np.array(
            [
                self.mixture.means[c] + self._gains[c] @ (z - self._z_hats[c])
                for c in range(len(self.mixture))
            ]
        )
        covs = np.array(self._post_covs)
        mixture = gm_reduce(
            GaussianMixture(weights / weights.sum(), means, covs),
            prune_threshold=1e-5,
            merge_threshold=4.0,
            max_components=100,
        ).normalized()
        self._children[col] = mixture
        return mixture


# ---------------------------------------------------------------------------
# Joint prediction and update
# ---------------------------------------------------------------------------


def joint_predict_update(
    prior: GlmbDensity,
    measurements,
    births,
    motion,
    sensor,
    params: FilterParams,
    rng: np.random.Generator,
) -> GlmbDensity:
    """One combined predict/update step of the labeled multi-Bernoulli recursion.

    Birth labels must be disjoint from the prior label space.  The returned
    density is normalized, duplicate hypotheses are merged, and at most
    ``params.max_hypotheses`` hypotheses are retained.
    """
    z = np.asarray(measurements, dtype=float)
    if z.size == 0:
        z = np.empty((0, 2))
    z = np.atleast_2d(z)
    num_z = z.shape[0]
    gate = chi2.ppf(params.gate_probability, df=z.shape[1])

    prior_labels = {lbl for h in prior.hypotheses for lbl in h.labels}
    p_s = motion.survival_probability
    log_ps, log_qs = math.log(p_s), math.log1p(-p_s)

    # Predicted bank: birth candidates first, then one entry per distinct
    # surviving (label, track version) pair across the prior hypotheses.
    bank: list[_BankEntry] = []
    birth_rows: list[int] = []
    for entry in births.entries:
        if entry.label in prior_labels:
            raise ContractViolationError(f"birth label {entry.label} already in use")
        if entry.existence <= 1e-12:
            continue
        birth_rows.append(len(bank))
        bank.append(
            _BankEntry(
                entry.label,
                entry.density,
                math.log(entry.existence),
                math.log1p(-entry.existence),
                z,
                sensor,
                params,
                gate,
            )
        )

    survivor_row: dict[int, int] = {}
    for hyp in prior.hypotheses:
        for entry_id in hyp.entries:
            if entry_id in survivor_row:
                continue
            track = prior.tracks[entry_id]
            parts = [motion.predict(track.density.component(c)) for c in range(len(track.density))]
            predicted = GaussianMixture(
                track.density.weights,
                np.array([g.mean for g in parts]),
                np.array([g.cov for g in parts]),
            )
            survivor_row[entry_id] = len(bank)
            bank.append(
                _BankEntry(track.label, predicted, log_ps, log_qs, z, sensor, params, gate)
            )

    row_options = [_row_options(entry.cost_row(num_z)) for entry in bank]

    # Gibbs scan budget split across prior hypotheses by sqrt weight.
    prior_log_w = np.array([h.log_weight for h in prior.hypotheses])
    half = np.exp(0.5 * (prior_log_w - prior_log_w.max()))
    scans = np.maximum(np.rint(params.scan_budget * half / half.sum()).astype(int), 0)
    scans[int(np.argmax(prior_log_w))] = max(scans[int(np.argmax(prior_log_w))], 1)

    candidates: dict[tuple, list[float]] = {}
    for hyp, n_scans, base_log_w in zip(prior.hypotheses, scans, prior_log_w):
        if n_scans <= 0:
            continue
        rows = birth_rows + [survivor_row[eid] for eid in hyp.entries]
        maps = _gibbs_chain([row_options[r] for r in rows], int(n_scans), rng)
        for amap in maps:
            log_w = base_log_w
            alive: list[tuple] = []
            for r, col in zip(rows, amap):
                log_w += bank[r].cost_of(col)
                if col != COL_LEAVE:
                    alive.append((r, col))
            if not math.isfinite(log_w):
                continue
            alive.sort()
            candidates.setdefault(tuple(alive), []).append(log_w)

    if not candidates:  # every map carried zero weight: fall back to empty
        return GlmbDensity.empty(prior.time + 1)

    merged = [(key, float(logsumexp(lws))) for key, lws in candidates.items()]
    merged.sort(key=lambda kv: kv[1], reverse=True)
    merged = merged[: params.max_hypotheses]
    norm = logsumexp(np.array([lw for _, lw in merged]))

    # Materialize child track entries for the retained hypotheses only.
    child_ids: dict[tuple, int] = {}
    tracks: dict[int, Track] = {}
    hypotheses: list[GlmbHypothesis] = []
    for key, log_w in merged:
        labels, entry_ids, assoc = [], [], []
        for r, col in key:
            cid = child_ids.get((r, col))
            if cid is None:
                cid = len(child_ids)
                child_ids[(r, col)] = cid
                tracks[cid] = Track(bank[r].label, bank[r].child_density(col, z))
            labels.append(bank[r].label)
            entry_ids.append(cid)
            assoc.append(col - 2 if col >= 2 else -1)
        order = sorted(range(len(labels)), key=lambda i: labels[i])
        hypotheses.append(
            GlmbHypothesis(
                tuple(labels[i] for i in order),
                tuple(entry_ids[i] for i in order),
                log_w - norm,
                tuple(assoc[i] for i in order),
            )
        )
    return GlmbDensity(hypotheses, tracks, prior.time + 1)


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------


def extract_estimate(posterior: GlmbDensity) -> list[tuple[Label, np.ndarray]]:
    """MAP-cardinality estimate: argmax the cardinality distribution, then the
    heaviest hypothesis of that cardinality (label order breaks ties)."""
    dist = posterior.cardinality_distribution()
    n_star = int(np.argmax(dist))
    best = min(
        (h for h in posterior.hypotheses if h.cardinality == n_star),
        key=lambda h: (-h.log_weight, h.labels),
        default=None,
    )
    if best is None or n_star == 0:
        return []
    return [
        (lbl, posterior.tracks[eid].density.mean())
        for lbl, eid in zip(best.labels, best.entries)
    ]


def association_probability(posterior: GlmbDensity, num_measurements: int) -> np.ndarray:
    """Probability each measurement of the just-processed scan was claimed by
    some track: the summed weight of hypotheses whose association map used it."""
    r_u = np.zeros(num_measurements)
    for h in posterior.hypotheses:
        w = h.weight
        for j in h.associations:
            if j >= 0:
                if j >= num_measurements:
                    raise ContractViolationError("association index outside measurement set")
                r_u[j] += w
    return np.clip(r_u, 0.0, 1.0)
