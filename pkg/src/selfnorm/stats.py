"""Self-normalised sample functionals of one path.

All ratio statistics are scale equivariant by construction: the moduli are
accumulated in max-rescaled form (factor out ``max|X_t|`` before taking
powers), which keeps ``sum |X_t|^p`` inside double range even when the raw
powers would overflow at small tail indices, and makes the ratios exactly
invariant under ``X -> c X``. Single-path reductions use exact (fsum)
accumulation; batched reductions rely on numpy's pairwise summation after the
same rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, DegeneratePathError
from .processes import Path, stationary_mean


@dataclass(frozen=True)
class PathStats:
    """The triple (sum, max, moduli) of one path plus the centering policy.

    ``moduli`` maps p to ``gamma_p = (sum_t |X_t|^p)^(1/p)``.
    """

    sum: float
    max_abs: float
    moduli: Mapping[float, float]
    n: int
    centering: str = "none"

    @property
    def degenerate(self) -> bool:
        return self.max_abs == 0.0

    def modulus(self, p: float) -> float:
        try:
            return self.moduli[float(p)]
        except KeyError:
            raise ConfigurationError(f"gamma_{p} was not computed for this path") from None


def _values_of(path: Union[Path, np.ndarray]) -> np.ndarray:
    if isinstance(path, Path):
        return np.asarray(path.values, dtype=float)
    return np.asarray(path, dtype=float)


def _abs_of(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return np.abs(values)
    return np.sqrt(np.sum(values**2, axis=-1))


def _centering_value(path, values, centering, mean):
    if centering == "none":
        return 0.0
    if centering == "empirical":
        return values.mean(axis=0)
    if centering == "analytic":
        if mean is not None:
            return mean
        if isinstance(path, Path):
            return stationary_mean(path.model)
        raise ConfigurationError("analytic centering needs a Path with a model, or an explicit mean")
    raise ConfigurationError(f"unknown centering policy {centering!r}")


def compute_stats(
    path: Union[Path, np.ndarray],
    ps: Sequence[float],
    centering: str = "none",
    mean: Optional[float] = None,
) -> PathStats:
    """Sum, maximum modulus and the gamma_p moduli of one path.

    Under ``analytic`` or ``empirical`` centering the same centered series
    feeds both the sum and the moduli.
    """
    if len(ps) == 0:
        raise ConfigurationError("ps must be non-empty")
    if any(p <= 0 for p in ps):
        raise ConfigurationError("every p must be positive")
    values = _values_of(path)
    if values.size == 0:
        raise ConfigurationError("empty path")
    c = _centering_value(path, values, centering, mean)
    centered = values - c
    a = _abs_of(centered)
    m = float(a.max())
    total = math.fsum(centered) if centered.ndim == 1 else centered.sum(axis=0)
    moduli = {}
    if m == 0.0:
        for p in ps:
            moduli[float(p)] = 0.0
    else:
        scaled = a / m
        for p in ps:
            moduli[float(p)] = m * math.fsum(scaled**p) ** (1.0 / p)
    return PathStats(sum=total, max_abs=m, moduli=moduli, n=len(a), centering=centering)


def batch_stats(values: np.ndarray, ps: Sequence[float], center: float = 0.0) -> dict:
    """Vectorised sums, maxima and moduli for a (reps, n) matrix of paths.

    Returns arrays ``sum`` and ``max_abs`` plus one ``gamma_p`` array per p,
    using the same max-rescaled accumulation as :func:`compute_stats`.
    """
    v = np.asarray(values, dtype=float) - center
    a = np.abs(v)
    m = a.max(axis=1)
    out = {"sum": v.sum(axis=1), "max_abs": m}
    safe = np.where(m > 0, m, 1.0)
    scaled = a / safe[:, None]
    for p in ps:
        g = safe * np.sum(scaled**p, axis=1) ** (1.0 / p)
        out[f"gamma_{p:g}"] = np.where(m > 0, g, 0.0)
    return out


def ratio_max(stats: PathStats) -> float:
    """Sum over maximum, S_n / M_n."""
    if stats.degenerate:
        raise DegeneratePathError("ratio of a degenerate (all-zero) path")
    return stats.sum / stats.max_abs


def studentized(stats: PathStats, p: float) -> float:
    """Sum over the l^p modulus, S_n / gamma_p."""
    g = stats.modulus(p)
    if g <= 0.0:
        raise DegeneratePathError("studentizing by a vanishing modulus")
    return stats.sum / g


def greenwood(path: Union[Path, np.ndarray], p: float, alpha: Optional[float] = None) -> float:
    """Ratio statistic ``sum X^p / (sum X)^p`` on strictly positive data.

    Requires a declared tail index ``alpha < min(p, 1)``; taken from the
    path's model when available.
    """
    values = _values_of(path)
    if values.ndim != 1:
        raise ConfigurationError("the ratio statistic is univariate")
    if values.size == 0 or np.any(values <= 0.0):
        raise ConfigurationError("the ratio statistic needs strictly positive data")
    if alpha is None and isinstance(path, Path):
        alpha = path.model.alpha
    if alpha is None:
        raise ConfigurationError("declare the tail index alpha")
    if not (alpha < 1.0 and alpha < p):
        raise ConfigurationError("the ratio statistic needs alpha < min(p, 1)")
    m = float(values.max())
    scaled = values / m
    return math.fsum(scaled**p) / math.fsum(scaled) ** p


def norm_ratio(path: Union[Path, np.ndarray], q: float, r: float) -> float:
    """gamma_q / gamma_r; at most 1 when q >= r."""
    if q <= 0 or r <= 0:
        raise ConfigurationError("norm orders must be positive")
    stats = compute_stats(path, ps=(q, r))
    if stats.degenerate:
        raise DegeneratePathError("norm ratio of a degenerate path")
    return stats.modulus(q) / stats.modulus(r)


def kurtosis_ratio(path: Union[Path, np.ndarray]) -> float:
    """Scaled sample kurtosis ``||X||_4^4 / ||X||_2^4``, always in (0, 1]."""
    return norm_ratio(path, 4.0, 2.0) ** 4


def stats_rows_to_csv(rows, target) -> None:
    """Batch output rows (seed, n, statistic, p, value) as CSV."""
    if hasattr(target, "write"):
        target.write("seed,n,statistic,p,value\n")
        for seed, n, name, p, value in rows:
            ptxt = "" if p is None else "%g" % p
            target.write("%d,%d,%s,%s,%.17g\n" % (seed, n, name, ptxt, value))
    else:
        with open(target, "w") as fh:
            stats_rows_to_csv(rows, fh)
