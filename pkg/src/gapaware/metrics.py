"""Optimality gaps, a Fréchet distance between fitted Gaussians, and study statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .losses import ideal_gen_loss


def optimality_gap(v_hat: float, v_star: float) -> float:
    return abs(v_hat - v_star)


def generator_gap(gen_loss_hat: float, variant) -> float:
    return abs(gen_loss_hat - ideal_gen_loss(variant))


@dataclass(frozen=True)
class GaussianSummary:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance must be d x d for a d-dimensional mean")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-12:
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def fit_gaussian(samples) -> GaussianSummary:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least two samples in an (n, d) array")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / (x.shape[0] - 1)
    return GaussianSummary(mean, 0.5 * (cov + cov.T))


def _trace_sqrt_product(a: np.ndarray, b: np.ndarray) -> float:
    """tr((A B)^{1/2}) for PSD A, B."""
    if a.shape == (2, 2):
        # A B has real nonnegative eigenvalues l1, l2 and
        # (sqrt(l1) + sqrt(l2))^2 = tr(AB) + 2 sqrt(det(AB))
        m = a @ b
        tr = m[0, 0] + m[1, 1]
        det = np.linalg.det(a) * np.linalg.det(b)
        return math.sqrt(max(tr + 2.0 * math.sqrt(max(det, 0.0)), 0.0))
    w, v = np.linalg.eigh(a)
    root_a = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    inner = root_a @ b @ root_a
    return float(np.sqrt(np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.T)), 0, None)).sum())


def frechet_gaussian_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    if a.mean.shape != b.mean.shape:
        raise ValueError("dimension mismatch")
    diff = a.mean - b.mean
    tr = np.trace(a.covariance) + np.trace(b.covariance)
    value = float(diff @ diff + tr - 2.0 * _trace_sqrt_product(a.covariance, b.covariance))
    return max(value, 0.0)


def frechet_distance_samples(x, y) -> float:
    return frechet_gaussian_distance(fit_gaussian(x), fit_gaussian(y))


class UndefinedCorrelation(ValueError):
    """Rank correlation is undefined, e.g. one input is constant."""


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float
    n: int


def spearman(xs, ys) -> SpearmanResult:
    """Spearman's rho with average ranks for ties; two-sided p from the t approximation."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and of equal length")
    n = x.size
    if n < 3:
        raise UndefinedCorrelation(f"need at least 3 pairs, got {n}")
    rx = stats.rankdata(x) - (n + 1) / 2
    ry = stats.rankdata(y) - (n + 1) / 2
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        raise UndefinedCorrelation("rank correlation undefined for a constant input")
    rho = float(np.clip(rx @ ry / denom, -1.0, 1.0))
    if abs(rho) == 1.0:
        return SpearmanResult(rho, 0.0, n)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return SpearmanResult(rho, float(2 * stats.t.sf(abs(t), n - 2)), n)


@dataclass(frozen=True)
class CurvePoint:
    k: int
    mean: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class BootstrapCurve:
    points: list[CurvePoint]
    n_boot: int
    confidence: float

    def means(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["k", "mean", "ci_low", "ci_high"])
            for p in self.points:
                w.writerow([p.k, repr(p.mean), repr(p.ci_low), repr(p.ci_high)])

    @classmethod
    def from_csv(cls, path, n_boot: int = 5000, confidence: float = 0.99) -> "BootstrapCurve":
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        pts = [CurvePoint(int(r["k"]), float(r["mean"]), float(r["ci_low"]), float(r["ci_high"]))
               for r in rows]
        return cls(pts, n_boot, confidence)


def bootstrap_best_curve(
    trial_metrics,
    budgets: Sequence[int],
    n_boot: int = 5000,
    confidence: float = 0.99,
    direction: str = "min",
    seed: int | np.random.Generator = 0,
) -> BootstrapCurve:
    """Best-of-k statistics over resamples (with replacement) of tuning trials.

    For every budget ``k`` draw ``n_boot`` resamples of size ``k``, keep the
    best value of each, and report the mean with a central percentile
    interval at the given confidence.
    """
    values = np.asarray(trial_metrics, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise ValueError("no trial metrics")
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    rng = np.random.default_rng(seed)
    tail = 100 * (1 - confidence) / 2
    best = np.min if direction == "min" else np.max
    points = []
    for k in budgets:
        if k < 1:
            raise ValueError("budgets must be >= 1")
        idx = rng.integers(0, values.size, size=(n_boot, k))
        b = best(values[idx], axis=1)
        # order statistics rather than interpolation, so +inf (diverged) entries stay well defined
        lo = np.percentile(b, tail, method="lower")
        hi = np.percentile(b, 100 - tail, method="higher")
        # centring on the smallest value keeps a constant column exactly constant
        ref = b.min()
        mean = float(ref + (b - ref).mean()) if np.isfinite(ref) else float(b.mean())
        points.append(CurvePoint(int(k), mean, float(min(lo, mean)), float(max(hi, mean))))
    return BootstrapCurve(points, n_boot, confidence)


def mean_stderr(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def two_sample_ttest(a, b, alternative: str = "two-sided") -> tuple[float, float]:
    res = stats.ttest_ind(np.asarray(a, float), np.asarray(b, float), alternative=alternative)
    return float(res.statistic), float(res.pvalue)


def sign_test(a, b) -> tuple[int, int, float]:
    """One-sided paired sign test of ``a < b``; ties are dropped.

    Returns (wins for a, non-tied pairs, p-value).
    """
    d = np.asarray(a, float) - np.asarray(b, float)
    wins = int(np.sum(d < 0))
    n = int(np.sum(d != 0))
    if n == 0:
        return 0, 0, 1.0
    return wins, n, float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)


def write_rows(path, header: Sequence[str], rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
