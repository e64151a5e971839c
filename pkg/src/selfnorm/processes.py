"""Stationary heavy-tailed example processes.

Three model families are shipped, all univariate:

* ``iid`` -- independent regularly varying noise (two-sided Pareto with
  tail-balance probabilities, or symmetric alpha-stable via the
  Chambers-Mallows-Stuck transform);
* ``ar1`` -- the causal AR(1) recursion ``X_t = phi X_{t-1} + Z_t`` driven by
  such noise;
* ``sre`` -- the causal solution of the affine stochastic recurrence
  ``X_t = A_t X_{t-1} + B_t`` under the Kesten moment condition
  ``E|A|^alpha = 1``.

All samplers are pure functions of ``(model, n, seed)``: identical arguments
produce bit-identical paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.signal import lfilter
from scipy.special import gamma as gamma_fn

from .errors import ConfigurationError, ModelError, UnsupportedError
from .rng import substream

PARETO = "pareto"
SYMMETRIC_STABLE = "symmetric_stable"

AR1_BURN_IN = 1_000
SRE_BURN_IN = 10_000
SRE_PRESAMPLE = 10_000_000

# internal seeds for construction-time moment checks (independent of user seeds)
_KESTEN_SEED = 0x5EEDC0DE
_KESTEN_DRAWS = 2_000_000


def _validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 2.0) or alpha == 1.0:
        raise ConfigurationError(
            f"tail index alpha must lie in (0,1) or (1,2), got {alpha!r}"
        )
    return alpha


@dataclass(frozen=True)
class NoiseSpec:
    """Regularly varying iid noise.

    ``pareto`` draws ``|Z| = U^(-1/alpha)`` (so ``P(|Z| > z) = z^-alpha`` for
    ``z > 1`` exactly) with sign ``+`` with probability ``q_plus``;
    ``symmetric_stable`` draws a standard symmetric alpha-stable variable.
    """

    kind: str
    alpha: float
    tail_balance: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if self.kind not in (PARETO, SYMMETRIC_STABLE):
            raise ConfigurationError(f"unknown noise kind {self.kind!r}")
        _validate_alpha(self.alpha)
        qp, qm = self.tail_balance
        if qp < 0 or qm < 0 or abs(qp + qm - 1.0) > 1e-12:
            raise ConfigurationError(
                f"tail balance must satisfy q+ , q- >= 0 and q+ + q- = 1, got {self.tail_balance!r}"
            )
        if self.kind == SYMMETRIC_STABLE and self.tail_balance != (0.5, 0.5):
            raise ConfigurationError("symmetric stable noise is symmetric; tail_balance must be (0.5, 0.5)")

    @property
    def q_plus(self) -> float:
        return self.tail_balance[0]

    @property
    def q_minus(self) -> float:
        return self.tail_balance[1]

    def tail_constant(self) -> float:
        """c with P(|Z| > z) ~ c z^-alpha; exactly 1 for the Pareto kind."""
        if self.kind == PARETO:
            return 1.0
        return stable_tail_constant(self.alpha)

    def mean(self) -> float:
        if self.alpha <= 1.0:
            raise UnsupportedError("noise mean requires alpha > 1")
        if self.kind == PARETO:
            return (self.q_plus - self.q_minus) * self.alpha / (self.alpha - 1.0)
        return 0.0


def stable_tail_constant(alpha: float) -> float:
    """c_alpha with P(|Z| > z) ~ c_alpha z^-alpha for a standard symmetric
    alpha-stable Z, alpha in (0,2)\\{1}."""
    return (1.0 - alpha) / (gamma_fn(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))


@dataclass(frozen=True)
class SRELaw:
    """Law of the iid pairs (A, B) in ``X_t = A_t X_{t-1} + B_t``.

    ``lognormal``: ``|A| = exp(N(mu, sigma^2))`` with ``mu = -alpha sigma^2/2``
    so that ``E|A|^alpha = 1`` holds exactly; ``A`` is negated with probability
    ``neg_prob``. ``constant``: ``A = a_const`` (a degenerate test law for
    which the Kesten condition cannot hold; construct the model with
    ``kesten_check=False``). ``B ~ N(b_mean, b_sd^2)`` in both cases, unless a
    user ``sampler(rng, size) -> (A, B)`` is supplied.

    Two distributional requirements (non-arithmetic log|A| given A != 0, and
    P(Ax + B = x) < 1 for all x) cannot be verified numerically and remain
    user obligations.
    """

    alpha: float
    kind: str = "lognormal"
    sigma: float = 1.0
    neg_prob: float = 0.0
    a_const: float = 0.0
    b_mean: float = 0.0
    b_sd: float = 1.0
    sampler: Optional[Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]] = None

    def __post_init__(self):
        if self.kind not in ("lognormal", "constant", "custom"):
            raise ConfigurationError(f"unknown SRE law kind {self.kind!r}")
        if self.kind == "custom" and self.sampler is None:
            raise ConfigurationError("custom SRE law requires a sampler")
        if float(self.alpha) <= 0:
            raise ConfigurationError("SRE tail index must be positive")
        if not (0.0 <= self.neg_prob <= 1.0):
            raise ConfigurationError("neg_prob must lie in [0, 1]")

    @property
    def mu(self) -> float:
        return -self.alpha * self.sigma**2 / 2.0

    def sample_ab(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "custom":
            a, b = self.sampler(rng, size)
            return np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if self.kind == "constant":
            a = np.full(size, self.a_const)
        else:
            a = np.exp(self.mu + self.sigma * rng.standard_normal(size))
            if self.neg_prob > 0:
                a = np.where(rng.random(size) < self.neg_prob, -a, a)
        b = self.b_mean + self.b_sd * rng.standard_normal(size)
        return a, b

    def abs_a_moment(self, q: float) -> Optional[float]:
        """E|A|^q in closed form where available, else None."""
        if self.kind == "lognormal":
            return math.exp(q * self.mu + q**2 * self.sigma**2 / 2.0)
        if self.kind == "constant":
            return abs(self.a_const) ** q if self.a_const != 0 else (0.0 if q > 0 else 1.0)
        return None

    def mean_a(self) -> Optional[float]:
        if self.kind == "lognormal":
            return (1.0 - 2.0 * self.neg_prob) * math.exp(self.mu + self.sigma**2 / 2.0)
        if self.kind == "constant":
            return self.a_const
        return None

    def mean_b(self) -> Optional[float]:
        if self.kind == "custom":
            return None
        return self.b_mean


@dataclass(frozen=True)
class ProcessModel:
    kind: str
    noise: Optional[NoiseSpec] = None
    phi: Optional[float] = None
    sre_law: Optional[SRELaw] = None
    burn_in: int = 0
    kesten_check: bool = True

    @property
    def alpha(self) -> float:
        if self.kind == "sre":
            return self.sre_law.alpha
        return self.noise.alpha

    def __post_init__(self):
        if self.kind not in ("iid", "ar1", "sre"):
            raise ConfigurationError(f"unknown process kind {self.kind!r}")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be >= 0")
        if self.kind in ("iid", "ar1") and self.noise is None:
            raise ConfigurationError(f"{self.kind} model requires a NoiseSpec")
        if self.kind == "ar1":
            if self.phi is None or not (-1.0 < self.phi < 1.0) or self.phi == 0.0:
                raise ConfigurationError("ar1 requires phi in (-1, 1) \\ {0}")
        if self.kind == "sre":
            if self.sre_law is None:
                raise ConfigurationError("sre model requires an SRELaw")
            _check_sre_law(self.sre_law, self.kesten_check)


def iid_model(noise: NoiseSpec) -> ProcessModel:
    return ProcessModel(kind="iid", noise=noise)


def ar1_model(phi: float, noise: NoiseSpec, burn_in: int = AR1_BURN_IN) -> ProcessModel:
    return ProcessModel(kind="ar1", noise=noise, phi=float(phi), burn_in=burn_in)


def sre_model(law: SRELaw, burn_in: int = SRE_BURN_IN, kesten_check: bool = True) -> ProcessModel:
    return ProcessModel(kind="sre", sre_law=law, burn_in=burn_in, kesten_check=kesten_check)


def _check_sre_law(law: SRELaw, kesten_check: bool) -> None:
    # contractivity probe: some q < alpha must have E|A|^q < 1
    probes = [law.alpha * f for f in (0.125, 0.25, 0.5, 0.75, 0.875)]
    moments = []
    rng = None
    for q in probes:
        m = law.abs_a_moment(q)
        if m is None:
            if rng is None:
                rng = substream(_KESTEN_SEED, 1)
                a, _ = law.sample_ab(rng, _KESTEN_DRAWS)
                absa = np.abs(a)
            m = float(np.mean(absa**q))
        moments.append(m)
    if all(m >= 1.0 for m in moments):
        raise ModelError(
            "non-contractive SRE law: estimated E|A|^q >= 1 for all probed q < alpha"
        )
    if not kesten_check:
        return
    analytic = law.abs_a_moment(law.alpha)
    if analytic is not None and law.kind == "lognormal":
        est, se = analytic, 0.0
    else:
        rng = substream(_KESTEN_SEED, 2)
        a, _ = law.sample_ab(rng, _KESTEN_DRAWS)
        vals = np.abs(a) ** law.alpha
        est = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(vals.size))
    if abs(est - 1.0) > 1e-3 + 4.0 * se:
        raise ModelError(
            f"Kesten condition fails: E|A|^alpha = {est:.6f} (se {se:.2g}), expected 1 within 1e-3"
        )


@dataclass(frozen=True)
class Path:
    """One simulated sample path (post burn-in, stationary regime)."""

    values: np.ndarray
    model: ProcessModel
    seed: int
    initial: Optional[float] = None  # state just before the first observation

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


# ---------------------------------------------------------------------------
# noise and recursions


def pareto_quantile(u, alpha: float):
    """Inverse CDF of the standard Pareto modulus: ``|Z| = u^(-1/alpha)`` maps
    Uniform(0,1) to ``P(|Z| > z) = z^-alpha``, z > 1."""
    return np.asarray(u, dtype=float) ** (-1.0 / alpha)


def _draw_noise(spec: NoiseSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if spec.kind == PARETO:
        z = pareto_quantile(rng.random(size), spec.alpha)
        signs = np.where(rng.random(size) < spec.q_plus, 1.0, -1.0)
        return z * signs
    # Chambers-Mallows-Stuck, symmetric case
    a = spec.alpha
    v = math.pi * (rng.random(size) - 0.5)
    w = rng.standard_exponential(size)
    return (
        np.sin(a * v)
        / np.cos(v) ** (1.0 / a)
        * (np.cos((1.0 - a) * v) / w) ** ((1.0 - a) / a)
    )


def sample_noise(spec: NoiseSpec, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` iid noise variables, deterministically from ``seed``.

    Uses the replica-0 stream, so an iid path with the same seed reproduces
    these draws exactly.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    return _draw_noise(spec, substream(seed, 0), count)


def ar1_recursion(phi: float, noise: np.ndarray, x0: float = 0.0) -> np.ndarray:
    """Run ``X_t = phi X_{t-1} + Z_t`` from state ``x0`` over a noise array.

    Batched over the leading axes of ``noise`` (recursion along the last).
    """
    noise = np.asarray(noise, dtype=float)
    out = lfilter([1.0], [1.0, -phi], noise, axis=-1)
    if x0 != 0.0:
        t = np.arange(1, noise.shape[-1] + 1)
        out = out + x0 * phi**t
    return out


def sre_recursion(a: np.ndarray, b: np.ndarray, x0=0.0) -> np.ndarray:
    """Run ``X_t = A_t X_{t-1} + B_t`` along the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty_like(b)
    state = np.broadcast_to(np.asarray(x0, dtype=float), a.shape[:-1]).copy()
    for t in range(a.shape[-1]):
        state = a[..., t] * state + b[..., t]
        out[..., t] = state
    return out


def _simulate_rows(model: ProcessModel, n: int, seed: int, indices: np.ndarray) -> np.ndarray:
    """Stationary-regime paths for the given replica indices, one Philox
    substream per replica; rows are independent of how they are batched."""
    reps = len(indices)
    total = n + model.burn_in
    if model.kind == "iid":
        out = np.empty((reps, n))
        for r, idx in enumerate(indices):
            out[r] = _draw_noise(model.noise, substream(seed, int(idx)), n)
        return out
    if model.kind == "ar1":
        z = np.empty((reps, total))
        for r, idx in enumerate(indices):
            z[r] = _draw_noise(model.noise, substream(seed, int(idx)), total)
        x = ar1_recursion(model.phi, z)
        return x[:, model.burn_in:]
    # sre: draw all (A, B) per replica, then iterate jointly across rows
    a = np.empty((reps, total))
    b = np.empty((reps, total))
    for r, idx in enumerate(indices):
        rng = substream(seed, int(idx))
        a[r], b[r] = model.sre_law.sample_ab(rng, total)
    x = sre_recursion(a, b)
    return x[:, model.burn_in:]


def sample_path(model: ProcessModel, n: int, seed: int, index: int = 0) -> Path:
    """One stationary-regime path of length ``n``.

    ``index`` selects the replica substream; the default matches replica 0 of
    any batched run with the same seed.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    values = _simulate_rows(model, n, seed, np.array([index]))[0]
    return Path(values=values, model=model, seed=seed)


def _coupled_rows(model: ProcessModel, n: int, seed: int, indices: np.ndarray):
    """Coupled pairs sharing innovations on the observation window but with
    independent stationary initial states. Returns (x, x_star, x0, x0_star)."""
    reps = len(indices)
    burn = model.burn_in
    x = np.empty((reps, n))
    xs = np.empty((reps, n))
    x0 = np.empty(reps)
    x0s = np.empty(reps)
    for r, idx in enumerate(indices):
        shared = substream(seed, int(idx), 0)
        init_a = substream(seed, int(idx), 1)
        init_b = substream(seed, int(idx), 2)
        if model.kind == "ar1":
            za = _draw_noise(model.noise, init_a, burn)
            zb = _draw_noise(model.noise, init_b, burn)
            z = _draw_noise(model.noise, shared, n)
            s_a = ar1_recursion(model.phi, za)[-1] if burn else 0.0
            s_b = ar1_recursion(model.phi, zb)[-1] if burn else 0.0
            x[r] = ar1_recursion(model.phi, z, x0=s_a)
            xs[r] = ar1_recursion(model.phi, z, x0=s_b)
        else:
            aa, ba = model.sre_law.sample_ab(init_a, burn)
            ab, bb = model.sre_law.sample_ab(init_b, burn)
            a, b = model.sre_law.sample_ab(shared, n)
            s_a = sre_recursion(aa, ba)[-1] if burn else 0.0
            s_b = sre_recursion(ab, bb)[-1] if burn else 0.0
            x[r] = sre_recursion(a, b, x0=s_a)
            xs[r] = sre_recursion(a, b, x0=s_b)
        x0[r], x0s[r] = s_a, s_b
    return x, xs, x0, x0s


def sample_coupled_paths(model: ProcessModel, n: int, seed: int, index: int = 0) -> tuple[Path, Path]:
    """A path and a coupled copy: identical innovations for t >= 1, the copy
    initialised from an independent stationary start.

    Both paths carry their pre-observation state in ``.initial``.
    """
    if model.kind == "iid":
        raise UnsupportedError("coupling an iid model is trivial and not supported")
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    x, xs, x0, x0s = _coupled_rows(model, n, seed, np.array([index]))
    return (
        Path(values=x[0], model=model, seed=seed, initial=float(x0[0])),
        Path(values=xs[0], model=model, seed=seed, initial=float(x0s[0])),
    )


# ---------------------------------------------------------------------------
# scale constants and means


def normalizing_an(model: ProcessModel, n: int, presample: int = SRE_PRESAMPLE, seed: int = 0) -> float:
    """Scale constant a_n with ``n P(|X| > a_n) -> 1``.

    Closed form for iid/AR(1) models (the AR(1) tail constant comes from the
    geometric moving-average representation); for SRE models the empirical
    (1 - 1/n) quantile of a long stationary presample, since the Goldie tail
    constant has no closed form.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if model.kind == "iid":
        c = model.noise.tail_constant()
        return float((n * c) ** (1.0 / model.alpha))
    if model.kind == "ar1":
        c = model.noise.tail_constant() / (1.0 - abs(model.phi) ** model.alpha)
        return float((n * c) ** (1.0 / model.alpha))
    if n > presample // 100:
        raise ConfigurationError(
            f"presample of {presample} too small for the (1 - 1/{n}) quantile; increase presample"
        )
    chains = 4096
    keep = -(-presample // chains)
    block = max(1, 16_000_000 // (keep + model.burn_in))
    pieces = []
    for lo in range(0, chains, block):
        rows = _simulate_rows(model, keep, seed, np.arange(lo, min(lo + block, chains)))
        pieces.append(np.abs(rows).ravel())
    return float(np.quantile(np.concatenate(pieces), 1.0 - 1.0 / n))


def stationary_mean(model: ProcessModel, mc_draws: int = 10**6, seed: int = 0) -> float:
    """Analytic stationary mean, for centering when alpha > 1."""
    if model.alpha <= 1.0:
        raise UnsupportedError("stationary mean requires alpha > 1 (no centering below)")
    if model.kind == "iid":
        return model.noise.mean()
    if model.kind == "ar1":
        return model.noise.mean() / (1.0 - model.phi)
    law = model.sre_law
    ma, mb = law.mean_a(), law.mean_b()
    if ma is None or mb is None:
        rng = substream(seed, 3)
        a, b = law.sample_ab(rng, mc_draws)
        ma = float(a.mean()) if ma is None else ma
        mb = float(b.mean()) if mb is None else mb
    if abs(ma) >= 1.0:
        raise ModelError("E[A] must have modulus < 1 for a finite stationary mean")
    return mb / (1.0 - ma)


# ---------------------------------------------------------------------------
# configuration and export


def model_to_dict(model: ProcessModel) -> dict:
    d: dict = {"kind": model.kind, "burn_in": model.burn_in}
    if model.noise is not None:
        d["noise"] = {
            "kind": model.noise.kind,
            "alpha": model.noise.alpha,
            "q_plus": model.noise.q_plus,
            "q_minus": model.noise.q_minus,
        }
    if model.phi is not None:
        d["phi"] = model.phi
    if model.sre_law is not None:
        law = model.sre_law
        if law.kind == "custom":
            raise ConfigurationError("custom SRE samplers cannot be serialised")
        d["sre_law"] = {
            "kind": law.kind,
            "alpha": law.alpha,
            "sigma": law.sigma,
            "neg_prob": law.neg_prob,
            "a_const": law.a_const,
            "b_mean": law.b_mean,
            "b_sd": law.b_sd,
        }
        d["kesten_check"] = model.kesten_check
    return d


def model_from_dict(d: dict) -> ProcessModel:
    kind = d.get("kind")
    noise = None
    if "noise" in d:
        nd = d["noise"]
        noise = NoiseSpec(
            kind=nd["kind"],
            alpha=float(nd["alpha"]),
            tail_balance=(float(nd.get("q_plus", 0.5)), float(nd.get("q_minus", 0.5))),
        )
    law = None
    if "sre_law" in d:
        ld = dict(d["sre_law"])
        law = SRELaw(
            alpha=float(ld["alpha"]),
            kind=ld.get("kind", "lognormal"),
            sigma=float(ld.get("sigma", 1.0)),
            neg_prob=float(ld.get("neg_prob", 0.0)),
            a_const=float(ld.get("a_const", 0.0)),
            b_mean=float(ld.get("b_mean", 0.0)),
            b_sd=float(ld.get("b_sd", 1.0)),
        )
    default_burn = {"iid": 0, "ar1": AR1_BURN_IN, "sre": SRE_BURN_IN}.get(kind, 0)
    return ProcessModel(
        kind=kind,
        noise=noise,
        phi=float(d["phi"]) if "phi" in d else None,
        sre_law=law,
        burn_in=int(d.get("burn_in", default_burn)),
        kesten_check=bool(d.get("kesten_check", True)),
    )


def path_to_csv(path: Path, target) -> None:
    """Write a path as a single-column CSV with header ``value``."""
    if hasattr(target, "write"):
        target.write("value\n")
        for v in np.asarray(path.values):
            target.write("%.17g\n" % v)
    else:
        with open(target, "w") as fh:
            path_to_csv(path, fh)
