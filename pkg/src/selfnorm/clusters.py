"""Spectral tail processes, extremal clusters and their moments.

The spectral tail process Theta describes the conditional shape of the series
around a large value at time 0 (``|Theta_0| = 1``). The cluster process is its
l^alpha normalisation ``Q = Theta / ||Theta||_alpha`` and satisfies
``sum_t |Q_t|^alpha = 1`` and ``max_t |Q_t| <= 1``. The tilted cluster is the
max-renormalised version of Q under the ``max_t |Q_t|^alpha`` change of
measure; it is sampled here by rejection, which is valid precisely because
``max|Q| <= 1``.

Three cluster kinds are supported:

* ``iid`` -- a single signed spike at t = 0 (asymptotic independence);
* ``ar1_analytic`` -- the geometric cluster of the AR(1) model, with closed
  forms for all norms, the extremal index ``1 - |phi|^alpha`` and the cluster
  moments;
* ``empirical`` -- clusters extracted as normalised blocks around threshold
  exceedances of a simulated source process (the only route shipped for SRE
  models, whose two-sided tail process has no convenient closed form).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, SamplingError, UnsupportedError
from .processes import ProcessModel, _simulate_rows
from .rng import substream

TRUNCATION_TARGET = 1e-10


@dataclass(frozen=True)
class Estimate:
    """A numeric result with its Monte-Carlo provenance.

    ``stderr`` is 0 and ``method`` is ``"closed_form"`` for analytic values.
    """

    value: float
    stderr: float = 0.0
    reps: int = 0
    method: str = "closed_form"

    def to_json(self) -> dict:
        return {"estimate": self.value, "stderr": self.stderr, "reps": self.reps, "method": self.method}


@dataclass(frozen=True)
class ClusterModel:
    kind: str  # iid | ar1_analytic | empirical
    alpha: float
    tail_balance: tuple[float, float] = (0.5, 0.5)
    phi: Optional[float] = None
    source: Optional[ProcessModel] = None
    threshold_quantile: float = 0.999
    block_half_width: int = 200
    sample_length: int = 2_000_000
    library_seed: int = 0
    floor_rel: float = 0.005
    run_gap: int = 2

    def __post_init__(self):
        if self.kind not in ("iid", "ar1_analytic", "empirical"):
            raise ConfigurationError(f"unknown cluster kind {self.kind!r}")
        if self.alpha <= 0:
            raise ConfigurationError("cluster tail index must be positive")
        qp, qm = self.tail_balance
        if qp < 0 or qm < 0 or abs(qp + qm - 1.0) > 1e-12:
            raise ConfigurationError("tail balance must be nonnegative and sum to 1")
        if self.kind == "ar1_analytic":
            if self.phi is None or not (-1.0 < self.phi < 1.0) or self.phi == 0.0:
                raise ConfigurationError("ar1_analytic requires phi in (-1, 1) \\ {0}")
        if self.kind == "empirical":
            if self.source is None:
                raise ConfigurationError("empirical cluster requires a source ProcessModel")
            if not (0.0 < self.threshold_quantile < 1.0):
                raise ConfigurationError("threshold_quantile must lie in (0, 1)")
            if self.block_half_width < 1:
                raise ConfigurationError("block_half_width must be >= 1")
            if not (0.0 <= self.floor_rel < 1.0) or self.run_gap < 1:
                raise ConfigurationError("need 0 <= floor_rel < 1 and run_gap >= 1")
        object.__setattr__(self, "_library", None)

    @property
    def spike_probs(self) -> tuple[float, float]:
        """Marginal sign probabilities P(Theta_0 = +1), P(Theta_0 = -1)."""
        qp, qm = self.tail_balance
        if self.kind != "ar1_analytic" or self.phi > 0:
            return qp, qm
        r = abs(self.phi) ** self.alpha
        pp = (qp + qm * r) / (1.0 + r)
        return pp, 1.0 - pp

    def _empirical_library(self) -> "_BlockLibrary":
        lib = getattr(self, "_library", None)
        if lib is None:
            lib = _BlockLibrary.build(self)
            object.__setattr__(self, "_library", lib)
        return lib


def iid_cluster(alpha: float, tail_balance=(0.5, 0.5)) -> ClusterModel:
    return ClusterModel(kind="iid", alpha=float(alpha), tail_balance=tuple(tail_balance))


def ar1_cluster(phi: float, alpha: float, tail_balance=(0.5, 0.5)) -> ClusterModel:
    return ClusterModel(
        kind="ar1_analytic", alpha=float(alpha), phi=float(phi), tail_balance=tuple(tail_balance)
    )


def empirical_cluster(
    source: ProcessModel,
    alpha: Optional[float] = None,
    threshold_quantile: float = 0.999,
    block_half_width: int = 200,
    sample_length: int = 2_000_000,
    library_seed: int = 0,
    floor_rel: float = 0.005,
    run_gap: int = 2,
) -> ClusterModel:
    """Cluster model backed by blocks around exceedances of a simulated path.

    A raw block also contains ordinary values and unrelated extreme events,
    whose l^alpha mass does not vanish at finite thresholds; each block is
    therefore restricted to the anchor's own cluster, cutting at the first run
    of ``run_gap`` consecutive entries below ``floor_rel`` (relative to the
    anchor) on either side.

    Normalisation always uses the declared ``alpha`` (defaulting to the source
    model's), never an estimated one, so cluster-shape error is not confounded
    with tail-index estimation error.
    """
    return ClusterModel(
        kind="empirical",
        alpha=float(alpha if alpha is not None else source.alpha),
        source=source,
        threshold_quantile=threshold_quantile,
        block_half_width=block_half_width,
        sample_length=sample_length,
        library_seed=library_seed,
        floor_rel=floor_rel,
        run_gap=run_gap,
    )


@dataclass
class _BlockLibrary:
    segments: np.ndarray  # (chains, seg_len)
    anchor_chain: np.ndarray
    anchor_pos: np.ndarray
    threshold: float
    half_width: int

    @classmethod
    def build(cls, model: ClusterModel) -> "_BlockLibrary":
        h = model.block_half_width
        chains = 64
        seg_len = max(-(-model.sample_length // chains), 4 * h + 4)
        rows = _simulate_rows(model.source, seg_len, model.library_seed, np.arange(chains))
        absrows = np.abs(rows)
        threshold = float(np.quantile(absrows, model.threshold_quantile))
        mask = absrows > threshold
        mask[:, :h] = False
        mask[:, seg_len - h:] = False
        chain_idx, pos_idx = np.nonzero(mask)
        return cls(rows, chain_idx, pos_idx, threshold, h)

    @property
    def n_anchors(self) -> int:
        return len(self.anchor_pos)

    def blocks(self, which: np.ndarray) -> np.ndarray:
        """Blocks (len(which), 2h+1) around the selected anchors."""
        h = self.half_width
        offs = np.arange(-h, h + 1)
        return self.segments[
            self.anchor_chain[which][:, None], self.anchor_pos[which][:, None] + offs[None, :]
        ]

    def require_anchors(self) -> None:
        if self.n_anchors == 0:
            raise SamplingError(
                "no exceedances above the threshold; lower threshold_quantile "
                "or enlarge sample_length"
            )


# ---------------------------------------------------------------------------
# draws


@dataclass(frozen=True)
class TailProcessDraw:
    """Spectral tail process on a finite window; values outside are zero."""

    t_min: int
    t_max: int
    values: np.ndarray
    backward_extent: int  # J; indices below -J carry exact zeros
    truncated: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def value_at(self, t: int) -> float:
        if t < self.t_min or t > self.t_max:
            return 0.0
        return float(self.values[t - self.t_min])

    def window(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.value_at(t) for t in range(lo, hi + 1)])


@dataclass(frozen=True)
class ClusterDraw:
    t_min: int
    t_max: int
    values: np.ndarray
    alpha: float
    truncation_error: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lp_norm(self, p: float) -> float:
        return float(np.sum(np.abs(self.values) ** p) ** (1.0 / p))

    def sum(self) -> float:
        return float(np.sum(self.values))


@dataclass(frozen=True)
class TiltedClusterDraw(ClusterDraw):
    """Cluster renormalised so that ``max_t |values_t| = 1``."""


def default_horizon(model: ClusterModel) -> int:
    """Forward truncation horizon leaving l^alpha mass below 1e-10 (AR(1));
    the block half-width for empirical clusters; 0 for iid."""
    if model.kind == "iid":
        return 0
    if model.kind == "empirical":
        return model.block_half_width
    r = abs(model.phi) ** model.alpha
    h = math.log(TRUNCATION_TARGET * (1.0 - r)) / math.log(r)
    return max(1, math.ceil(h))


def _phi_pow(phi: float, t: np.ndarray) -> np.ndarray:
    # integer exponents keep negative phi exact
    return np.asarray(phi, dtype=float) ** t.astype(np.int64)


def _own_cluster_theta(blocks: np.ndarray, centre: int, floor_rel: float, gap: int) -> np.ndarray:
    """Anchor-normalised blocks restricted to the anchor's own cluster.

    Zeroes everything beyond the first run of ``gap`` consecutive entries with
    ``|X_{s+t}/X_s| <= floor_rel`` on either side of the centre, removing the
    l^alpha mass of ordinary values and unrelated extreme events that a wide
    finite-threshold block inevitably contains.
    """
    theta = blocks / np.abs(blocks[:, centre])[:, None]
    if floor_rel <= 0.0:
        return theta
    m, w = theta.shape
    below = np.abs(theta) <= floor_rel
    cb = np.zeros((m, w + 1))
    np.cumsum(below, axis=1, out=cb[:, 1:])
    runend = np.zeros((m, w), dtype=bool)
    if w > gap:
        runend[:, gap - 1:] = (cb[:, gap:] - cb[:, :-gap]) == gap
    cols = np.arange(w)
    leftcond = runend[:, :centre]
    has_l = leftcond.any(axis=1)
    last_l = centre - 1 - np.argmax(leftcond[:, ::-1], axis=1)
    lcut = np.where(has_l, last_l, -1)
    rightcond = runend[:, centre + gap:]
    if rightcond.shape[1] > 0:
        has_r = rightcond.any(axis=1)
        first_e = centre + gap + np.argmax(rightcond, axis=1)
        rstart = np.where(has_r, first_e - gap + 1, w)
    else:
        rstart = np.full(m, w)
    keep = (cols[None, :] > lcut[:, None]) & (cols[None, :] < rstart[:, None])
    return np.where(keep, theta, 0.0)


def _draw_ar1_tail(model: ClusterModel, rng: np.random.Generator, size: int):
    """(J, Theta_0) for the AR(1) tail process: J geometric with
    P(J = j) = |phi|^(alpha j) (1 - |phi|^alpha); the noise spike sign
    theta_Z (probabilities q+/q-) independent of J; Theta_0 = theta_Z sign(phi)^J.
    The marginal law of Theta_0 is ``spike_probs``."""
    r = abs(model.phi) ** model.alpha
    j = rng.geometric(1.0 - r, size=size) - 1
    theta_z = np.where(rng.random(size) < model.tail_balance[0], 1.0, -1.0)
    if model.phi > 0:
        theta0 = theta_z
    else:
        theta0 = theta_z * np.where(j % 2 == 0, 1.0, -1.0)
    return j, theta0


def _tail_windows(model: ClusterModel, rng: np.random.Generator, reps: int, lo: int, hi: int) -> np.ndarray:
    """Tail-process values on [lo, hi] for ``reps`` draws, shape (reps, hi-lo+1)."""
    t_idx = np.arange(lo, hi + 1)
    if model.kind == "iid":
        vals = np.zeros((reps, len(t_idx)))
        if lo <= 0 <= hi:
            vals[:, -lo] = np.where(rng.random(reps) < model.tail_balance[0], 1.0, -1.0)
        return vals
    j, theta0 = _draw_ar1_tail(model, rng, reps)
    pows = _phi_pow(model.phi, t_idx)
    vals = theta0[:, None] * pows[None, :]
    return np.where(t_idx[None, :] >= -j[:, None], vals, 0.0)


def sample_spectral_tail(model: ClusterModel, horizon: int, seed: int) -> TailProcessDraw:
    """Draw the spectral tail process on the window [-min(J, horizon), horizon].

    A backward extent J beyond the horizon is recorded as truncation, not an
    error.
    """
    if horizon < 0:
        raise ConfigurationError("horizon must be >= 0")
    rng = substream(seed)
    if model.kind == "iid":
        sign = 1.0 if rng.random() < model.tail_balance[0] else -1.0
        return TailProcessDraw(0, 0, np.array([sign]), backward_extent=0)
    if model.kind == "empirical":
        lib = model._empirical_library()
        lib.require_anchors()
        which = rng.integers(0, lib.n_anchors, size=1)
        block = lib.blocks(which)
        centre = lib.half_width
        theta_full = _own_cluster_theta(block, centre, model.floor_rel, model.run_gap)[0]
        h = min(horizon, lib.half_width)
        theta = theta_full[centre - h: centre + h + 1]
        return TailProcessDraw(-h, h, theta, backward_extent=h, truncated=horizon > lib.half_width)
    j, theta0 = _draw_ar1_tail(model, rng, 1)
    j = int(j[0])
    back = min(j, horizon)
    t = np.arange(-back, horizon + 1)
    values = theta0[0] * _phi_pow(model.phi, t)
    return TailProcessDraw(-back, horizon, values, backward_extent=j, truncated=j > horizon)


def _ar1_cluster_from_tail(model: ClusterModel, j: int, theta0: float, horizon: int):
    """Normalised AR(1) cluster on [-min(J, horizon), horizon] with the exact
    geometric norm ``||Theta||_alpha^alpha = |phi|^(-alpha J) / (1 - |phi|^alpha)``
    and the exactly-known discarded l^alpha mass."""
    phi, alpha = model.phi, model.alpha
    r = abs(phi) ** alpha
    norm_pow = abs(phi) ** (-alpha * j) / (1.0 - r)
    back = min(j, horizon)
    t = np.arange(-back, horizon + 1)
    theta = theta0 * _phi_pow(phi, t)
    q = theta / norm_pow ** (1.0 / alpha)
    forward_tail = abs(phi) ** (alpha * (horizon + 1)) / (1.0 - r)
    backward_cut = 0.0
    if j > horizon:
        s = np.arange(horizon + 1, j + 1)
        backward_cut = float(np.sum(abs(phi) ** (-alpha * s)))
    trunc = (forward_tail + backward_cut) / norm_pow
    return int(t[0]), q, trunc


def _cluster_from_rng(model: ClusterModel, horizon: int, rng: np.random.Generator) -> ClusterDraw:
    if model.kind == "iid":
        sign = 1.0 if rng.random() < model.tail_balance[0] else -1.0
        return ClusterDraw(0, 0, np.array([sign]), alpha=model.alpha)
    if model.kind == "ar1_analytic":
        j, theta0 = _draw_ar1_tail(model, rng, 1)
        t0, q, trunc = _ar1_cluster_from_tail(model, int(j[0]), float(theta0[0]), horizon)
        return ClusterDraw(t0, horizon, q, alpha=model.alpha, truncation_error=trunc)
    lib = model._empirical_library()
    lib.require_anchors()
    which = rng.integers(0, lib.n_anchors, size=1)
    block = lib.blocks(which)
    h = lib.half_width
    raw = block[0] / abs(block[0, h])
    theta = _own_cluster_theta(block, h, model.floor_rel, model.run_gap)[0]
    norm_pow = float(np.sum(np.abs(theta) ** model.alpha))
    q = theta / norm_pow ** (1.0 / model.alpha)
    # the measured sub-floor mass that the own-cluster restriction discarded
    # stands in for the unobserved mass outside the kept window
    dropped = (theta == 0.0) & (np.abs(raw) <= model.floor_rel)
    trunc = float(np.sum(np.abs(raw[dropped]) ** model.alpha) / norm_pow)
    return ClusterDraw(-h, h, q, alpha=model.alpha, truncation_error=trunc)


def sample_cluster(model: ClusterModel, horizon: Optional[int] = None, seed: int = 0) -> ClusterDraw:
    """Draw the cluster process Q = Theta / ||Theta||_alpha."""
    if horizon is None:
        horizon = default_horizon(model)
    if horizon < 0:
        raise ConfigurationError("horizon must be >= 0")
    return _cluster_from_rng(model, horizon, substream(seed))


def sample_tilted_cluster(model: ClusterModel, horizon: Optional[int] = None, seed: int = 0) -> TiltedClusterDraw:
    """Rejection sampler for the tilted cluster: propose Q, accept with
    probability ``max_t |Q_t|^alpha`` (valid since ``max|Q| <= 1``), return
    ``Q / max_t |Q_t|``."""
    if horizon is None:
        horizon = default_horizon(model)
    rng = substream(seed)
    for _ in range(100_000):
        draw = _cluster_from_rng(model, horizon, rng)
        m = draw.max_abs
        if rng.random() < m**model.alpha:
            return TiltedClusterDraw(
                draw.t_min, draw.t_max, draw.values / m, alpha=model.alpha,
                truncation_error=draw.truncation_error,
            )
    raise SamplingError("tilted-cluster rejection sampler failed to accept")


def tilted_acceptance(model: ClusterModel, reps: int, seed: int = 0) -> Estimate:
    """Acceptance rate of the tilted-cluster rejection step.

    Its expectation is ``E[max|Q|^alpha]``, i.e. the extremal index, so the
    rate doubles as an estimator of theta.
    """
    f = cluster_functionals(model, reps, p=model.alpha, seed=seed)
    acc = substream(seed, 7).random(reps) < f["max_abs"] ** model.alpha
    rate = float(np.mean(acc))
    se = math.sqrt(max(rate * (1.0 - rate), 1e-300) / reps)
    return Estimate(rate, se, reps, "acceptance_rate")


# ---------------------------------------------------------------------------
# batched cluster functionals (used by the series sampler, the transform
# engine and the moment estimators)


def cluster_functionals(model: ClusterModel, count: int, p: float, seed=0, rng=None, extra_ps=()) -> dict:
    """Arrays of per-draw reductions of Q: ``max_abs``, ``sum_q`` (signed sum),
    ``sum_abs`` (l1 norm) and ``sum_abs_p`` (l^p norm to the p-th power).

    ``extra_ps`` requests further l^q powers on the same draws, returned under
    keys ``sum_abs_p{q:g}``.
    """
    if rng is None:
        rng = substream(seed, 11)
    if model.kind == "iid":
        qp = model.tail_balance[0]
        signs = np.where(rng.random(count) < qp, 1.0, -1.0)
        ones = np.ones(count)
        out = {"max_abs": ones, "sum_q": signs, "sum_abs": ones.copy(), "sum_abs_p": ones.copy()}
        for q in extra_ps:
            out[f"sum_abs_p{q:g}"] = np.ones(count)
        return out
    if model.kind == "ar1_analytic":
        phi, alpha = model.phi, model.alpha
        r = abs(phi) ** alpha
        scale = (1.0 - r) ** (1.0 / alpha)
        signs = np.where(rng.random(count) < model.tail_balance[0], 1.0, -1.0)
        out = {
            "max_abs": np.full(count, scale),
            "sum_q": signs * scale / (1.0 - phi),
            "sum_abs": np.full(count, scale / (1.0 - abs(phi))),
            "sum_abs_p": np.full(count, (1.0 - r) ** (p / alpha) / (1.0 - abs(phi) ** p)),
        }
        for q in extra_ps:
            out[f"sum_abs_p{q:g}"] = np.full(count, (1.0 - r) ** (q / alpha) / (1.0 - abs(phi) ** q))
        return out
    lib = model._empirical_library()
    lib.require_anchors()
    h = lib.half_width
    keys = ["max_abs", "sum_q", "sum_abs", "sum_abs_p"] + [f"sum_abs_p{q:g}" for q in extra_ps]
    out = {k: np.empty(count) for k in keys}
    chunk = max(1, min(count, 2_000_000 // (2 * h + 1)))
    done = 0
    while done < count:
        m = min(chunk, count - done)
        which = rng.integers(0, lib.n_anchors, size=m)
        blocks = lib.blocks(which)
        theta = _own_cluster_theta(blocks, h, model.floor_rel, model.run_gap)
        absth = np.abs(theta)
        norm_pow = np.sum(absth**model.alpha, axis=1)
        scale = norm_pow ** (1.0 / model.alpha)
        sl = slice(done, done + m)
        out["max_abs"][sl] = absth.max(axis=1) / scale
        out["sum_q"][sl] = theta.sum(axis=1) / scale
        out["sum_abs"][sl] = absth.sum(axis=1) / scale
        out["sum_abs_p"][sl] = np.sum(absth**p, axis=1) / scale**p
        for q in extra_ps:
            out[f"sum_abs_p{q:g}"][sl] = np.sum(absth**q, axis=1) / scale**q
        done += m
    return out


def tilted_functionals(model: ClusterModel, count: int, p: float, seed=0) -> dict:
    """Per-draw reductions of the tilted cluster, by vectorised rejection;
    exact two-atom laws for the analytic kinds (their norms are deterministic,
    so the tilt does not reweight)."""
    rng = substream(seed, 13)
    if model.kind == "iid":
        signs = np.where(rng.random(count) < model.tail_balance[0], 1.0, -1.0)
        ones = np.ones(count)
        return {"sum_q": signs, "sum_abs": ones, "sum_abs_p": ones.copy()}
    if model.kind == "ar1_analytic":
        phi = model.phi
        signs = np.where(rng.random(count) < model.tail_balance[0], 1.0, -1.0)
        return {
            "sum_q": signs / (1.0 - phi),
            "sum_abs": np.full(count, 1.0 / (1.0 - abs(phi))),
            "sum_abs_p": np.full(count, 1.0 / (1.0 - abs(phi) ** p)),
        }
    out = {k: np.empty(count) for k in ("sum_q", "sum_abs", "sum_abs_p")}
    done = 0
    alpha = model.alpha
    while done < count:
        need = count - done
        propose = max(64, int(1.5 * need))
        f = cluster_functionals(model, propose, p, rng=rng)
        accept = rng.random(propose) < f["max_abs"] ** alpha
        idx = np.nonzero(accept)[0][:need]
        if idx.size == 0:
            continue
        m = f["max_abs"][idx]
        take = idx.size
        out["sum_q"][done: done + take] = f["sum_q"][idx] / m
        out["sum_abs"][done: done + take] = f["sum_abs"][idx] / m
        out["sum_abs_p"][done: done + take] = f["sum_abs_p"][idx] / m**p
        done += take
    return out


# ---------------------------------------------------------------------------
# atoms: a discrete view of the cluster law for the transform engine


@dataclass(frozen=True)
class ClusterAtoms:
    """Weighted atoms of (sum Q, max|Q|, ||Q||_p^p, ||Q||_1).

    Exact two-atom laws for iid / ar1_analytic kinds; a Monte-Carlo sample of
    size ``reps`` for empirical kinds.
    """

    alpha: float
    p: Optional[float]
    weights: np.ndarray
    sum_q: np.ndarray
    max_abs: np.ndarray
    norm_p_p: np.ndarray
    sum_abs: np.ndarray
    exact: bool
    reps: int = 0


def cluster_atoms(model: ClusterModel, p: Optional[float] = None, n_mc: int = 10_000, seed: int = 0) -> ClusterAtoms:
    pp = model.alpha + 1.0 if p is None else float(p)
    qp, qm = model.tail_balance
    if model.kind == "iid":
        return ClusterAtoms(
            alpha=model.alpha, p=p, weights=np.array([qp, qm]),
            sum_q=np.array([1.0, -1.0]), max_abs=np.ones(2),
            norm_p_p=np.ones(2), sum_abs=np.ones(2), exact=True,
        )
    if model.kind == "ar1_analytic":
        phi, alpha = model.phi, model.alpha
        r = abs(phi) ** alpha
        scale = (1.0 - r) ** (1.0 / alpha)
        mag = scale / (1.0 - phi)
        return ClusterAtoms(
            alpha=alpha, p=p, weights=np.array([qp, qm]),
            sum_q=np.array([mag, -mag]), max_abs=np.full(2, scale),
            norm_p_p=np.full(2, (1.0 - r) ** (pp / alpha) / (1.0 - abs(phi) ** pp)),
            sum_abs=np.full(2, scale / (1.0 - abs(phi))), exact=True,
        )
    f = cluster_functionals(model, n_mc, pp, seed=seed)
    return ClusterAtoms(
        alpha=model.alpha, p=p, weights=np.full(n_mc, 1.0 / n_mc),
        sum_q=f["sum_q"], max_abs=f["max_abs"], norm_p_p=f["sum_abs_p"], sum_abs=f["sum_abs"],
        exact=False, reps=n_mc,
    )


def tilted_atoms(model: ClusterModel, p: Optional[float] = None, n_mc: int = 10_000, seed: int = 0) -> ClusterAtoms:
    pp = model.alpha + 1.0 if p is None else float(p)
    qp, qm = model.tail_balance
    if model.kind in ("iid", "ar1_analytic"):
        if model.kind == "iid":
            mag, l1, lpp = 1.0, 1.0, 1.0
        else:
            phi = model.phi
            mag = 1.0 / (1.0 - phi)
            l1 = 1.0 / (1.0 - abs(phi))
            lpp = 1.0 / (1.0 - abs(phi) ** pp)
        return ClusterAtoms(
            alpha=model.alpha, p=p, weights=np.array([qp, qm]),
            sum_q=np.array([mag, -mag]), max_abs=np.ones(2),
            norm_p_p=np.full(2, lpp), sum_abs=np.full(2, l1), exact=True,
        )
    f = tilted_functionals(model, n_mc, pp, seed=seed)
    return ClusterAtoms(
        alpha=model.alpha, p=p, weights=np.full(n_mc, 1.0 / n_mc),
        sum_q=f["sum_q"], max_abs=np.ones(n_mc), norm_p_p=f["sum_abs_p"], sum_abs=f["sum_abs"],
        exact=False, reps=n_mc,
    )


# ---------------------------------------------------------------------------
# extremal index and cluster moments


def extremal_index(model: ClusterModel, reps: int = 100_000, seed: int = 0, method: str = "auto") -> Estimate:
    """Extremal index theta = E[max_t |Q_t|^alpha].

    Closed form for the analytic kinds (1 for iid, ``1 - |phi|^alpha`` for
    AR(1)). Empirical kinds use the running supremum of the multiplier
    products when the source is an SRE,
    ``theta = E[(1 - sup_{t>=1} |A_1...A_t|^alpha)_+]``, or the Monte-Carlo
    mean of ``max|Q|^alpha`` over extracted clusters (``method="cluster_max"``,
    always available as a cross-check).
    """
    if method in ("auto", "closed_form"):
        if model.kind == "iid":
            return Estimate(1.0)
        if model.kind == "ar1_analytic":
            return Estimate(1.0 - abs(model.phi) ** model.alpha)
    if method == "sre_products" or (method == "auto" and model.source is not None and model.source.kind == "sre"):
        if model.kind != "empirical" or model.source.kind != "sre":
            raise ConfigurationError("the product estimator requires an empirical SRE cluster")
        rng = substream(seed, 17)
        t_len = max(200, math.ceil(80.0 / model.alpha))
        vals = np.empty(reps)
        chunk = max(1, 4_000_000 // t_len)
        done = 0
        while done < reps:
            m = min(chunk, reps - done)
            a, _ = model.source.sre_law.sample_ab(rng, m * t_len)
            prods = np.cumprod(np.abs(a).reshape(m, t_len), axis=1)
            sup = np.max(prods**model.alpha, axis=1)
            vals[done: done + m] = np.clip(1.0 - sup, 0.0, None)
            done += m
        return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)), reps, "sre_products")
    f = cluster_functionals(model, reps, p=model.alpha, seed=seed)
    vals = f["max_abs"] ** model.alpha
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)), reps, "cluster_max")


def cluster_moment(model: ClusterModel, p: float, reps: int = 10_000, seed: int = 0) -> Estimate:
    """E[||Q||_p^alpha]; equals 1 at p = alpha by the cluster normalisation."""
    if p <= 0:
        raise ConfigurationError("p must be positive")
    alpha = model.alpha
    if model.kind == "iid":
        return Estimate(1.0)
    if model.kind == "ar1_analytic":
        r = abs(model.phi) ** alpha
        return Estimate((1.0 - r) / (1.0 - abs(model.phi) ** p) ** (alpha / p))
    if p <= alpha:
        raise UnsupportedError("Monte-Carlo cluster moments need p > alpha")
    f = cluster_functionals(model, reps, p, seed=seed)
    vals = f["sum_abs_p"] ** (alpha / p)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)), reps, "monte_carlo")


def truncated_abs_mean_series(model: ClusterModel, lags, reps: int = 20_000, seed: int = 0) -> np.ndarray:
    """Monte-Carlo series E[|Theta_j| ^ 1] over ``lags = (lo, hi)``; the partial
    sums of this series being numerically Cauchy is the summability probe that
    backs the anti-clustering hypothesis for the shipped models."""
    lo, hi = lags
    wins = _tail_windows(model, substream(seed, 19), reps, lo, hi)
    return np.minimum(np.abs(wins), 1.0).mean(axis=0)


# ---------------------------------------------------------------------------
# time-change diagnostics


@dataclass(frozen=True)
class BoundedFunctional:
    """A bounded test functional of a (2h+1)-window of tail-process values."""

    fn: Callable[[np.ndarray], float]
    bound: float
    name: str
    half_width: int = 1


def standard_functionals(h: int = 1) -> list[BoundedFunctional]:
    return [
        BoundedFunctional(lambda w: float(w[0] > 0), 1.0, "left_positive", h),
        BoundedFunctional(lambda w: min(abs(float(w[-1])), 1.0), 1.0, "right_clipped_abs", h),
        BoundedFunctional(lambda w: math.cos(float(np.sum(w))), 1.0, "cos_window_sum", h),
    ]


@dataclass(frozen=True)
class TimeChangeRow:
    name: str
    lhs: float
    rhs: float
    stderr: float
    z: float
    vacuous: bool


@dataclass(frozen=True)
class TimeChangeReport:
    t: int
    reps: int
    rows: tuple

    def to_json(self) -> dict:
        return {"t": self.t, "reps": self.reps, "rows": [row.__dict__ for row in self.rows]}

    def max_abs_z(self) -> float:
        zs = [abs(r.z) for r in self.rows if not r.vacuous]
        return max(zs) if zs else 0.0


def verify_time_change(
    model: ClusterModel,
    t: int,
    test_functionals: Sequence[BoundedFunctional],
    reps: int = 100_000,
    seed: int = 0,
) -> TimeChangeReport:
    """Monte-Carlo check of the identity relating the law of the tail-process
    window conditional on ``Theta_{-t} != 0`` to the ``|Theta_t|^alpha``-tilted
    law of the window around t rescaled by ``|Theta_t|``.

    Both sides are estimated on independent streams and compared in combined
    standard-error units. Cases with ``P(Theta_{-t} != 0) = 0`` are reported as
    vacuous rather than failed.
    """
    if model.kind == "empirical":
        raise UnsupportedError("time-change verification needs two-sided analytic draws")
    for f in test_functionals:
        if not isinstance(f, BoundedFunctional):
            raise ConfigurationError("test functionals must be BoundedFunctional instances")
        if not (np.isfinite(f.bound) and f.bound > 0):
            raise ConfigurationError(f"functional {f.name!r} must declare a finite positive bound")

    alpha = model.alpha
    rows = []
    for k, f in enumerate(test_functionals):
        hw = f.half_width
        rng_l = substream(seed, 31, k)
        rng_r = substream(seed, 32, k)
        lo_l, hi_l = min(-hw, -t), max(hw, -t)
        win_l = _tail_windows(model, rng_l, reps, lo_l, hi_l)
        cond = win_l[:, -t - lo_l] != 0.0
        sub = win_l[cond][:, (-hw - lo_l): (hw - lo_l) + 1]
        lo_r, hi_r = min(t - hw, t), max(t + hw, t)
        win_r = _tail_windows(model, rng_r, reps, lo_r, hi_r)
        theta_t = win_r[:, t - lo_r]
        wts = np.abs(theta_t) ** alpha
        nz = wts > 0.0
        if not np.any(cond) or not np.any(nz):
            rows.append(TimeChangeRow(f.name, math.nan, math.nan, math.nan, 0.0, True))
            continue
        lhs_vals = np.fromiter((f.fn(w) for w in sub), dtype=float, count=len(sub))
        _check_bound(lhs_vals, f)
        lhs = float(lhs_vals.mean())
        se_l = float(lhs_vals.std(ddof=1) / math.sqrt(len(sub))) if len(sub) > 1 else 0.0
        scaled = win_r[nz, (t - hw - lo_r):(t + hw - lo_r) + 1] / np.abs(theta_t[nz])[:, None]
        fvals = np.zeros(reps)
        fvals[nz] = np.fromiter((f.fn(w) for w in scaled), dtype=float, count=int(nz.sum()))
        _check_bound(fvals, f)
        wbar = float(wts.mean())
        rhs = float(np.mean(wts * fvals) / wbar)
        resid = wts * (fvals - rhs)
        se_r = float(np.sqrt(np.mean(resid**2) / reps) / wbar)
        se = math.hypot(se_l, se_r)
        diff = lhs - rhs
        scale = max(1.0, abs(lhs), abs(rhs))
        if se < 1e-10 * scale:
            # both sides degenerate (the functional is constant here): compare exactly
            z = 0.0 if abs(diff) <= 1e-9 * scale else math.inf
        else:
            z = diff / se
        rows.append(TimeChangeRow(f.name, lhs, rhs, se, z, False))
    return TimeChangeReport(t, reps, tuple(rows))


def _check_bound(vals: np.ndarray, f: BoundedFunctional) -> None:
    if np.any(np.abs(vals) > f.bound + 1e-12):
        raise ConfigurationError(f"functional {f.name!r} exceeded its declared bound {f.bound}")


# ---------------------------------------------------------------------------
# export


def cluster_to_csv(draw: ClusterDraw, target) -> None:
    """Write a cluster draw as CSV rows (t, value)."""
    if hasattr(target, "write"):
        target.write("t,value\n")
        for t, v in zip(range(draw.t_min, draw.t_max + 1), draw.values):
            target.write("%d,%.17g\n" % (t, v))
    else:
        with open(target, "w") as fh:
            cluster_to_csv(draw, fh)


def estimate_to_json(est: Estimate, target) -> None:
    if hasattr(target, "write"):
        json.dump(est.to_json(), target, indent=2)
    else:
        with open(target, "w") as fh:
            json.dump(est.to_json(), fh, indent=2)
