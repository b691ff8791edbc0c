"""Post-hoc quality metrics: RMSE, global SSIM with its three factors,
and rank histograms with binomial confidence intervals."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .stochastic import rng_stream


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class SsimReport:
    luminance: float
    contrast: float
    structure: float
    ssim: float


def ssim(a: np.ndarray, b: np.ndarray,
         constants: tuple[float, float, float] | None = None) -> SsimReport:
    """Global (non-windowed) SSIM from whole-signal statistics.

    Factors use sample means, standard deviations (ddof=1) and
    cross-covariance. Default constants follow the conventional choice
    c1=(0.01 L)^2, c2=(0.03 L)^2, c3=c2/2 with L the joint data range.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    if a.size < 2:
        raise ValueError("ssim needs at least 2 entries")
    if constants is None:
        joint = np.concatenate([a, b])
        rng_width = float(np.max(joint) - np.min(joint))
        c1 = (0.01 * rng_width) ** 2
        c2 = (0.03 * rng_width) ** 2
        c3 = c2 / 2.0
    else:
        c1, c2, c3 = constants

    mu_a, mu_b = float(np.mean(a)), float(np.mean(b))
    sd_a = float(np.std(a, ddof=1))
    sd_b = float(np.std(b, ddof=1))
    cov = float(np.sum((a - mu_a) * (b - mu_b)) / (a.size - 1))

    denom_l = mu_a**2 + mu_b**2 + c1
    denom_c = sd_a**2 + sd_b**2 + c2
    denom_s = sd_a * sd_b + c3
    if denom_l == 0.0 or denom_c == 0.0 or denom_s == 0.0:
        raise ValueError("degenerate SSIM: zero denominator (constant inputs with zero constants)")
    lum = (2 * mu_a * mu_b + c1) / denom_l
    con = (2 * sd_a * sd_b + c2) / denom_c
    struct = (cov + c3) / denom_s
    return SsimReport(luminance=lum, contrast=con, structure=struct,
                      ssim=lum * con * struct)


@dataclass
class RankHistogram:
    counts: np.ndarray     # (Ns+1,) integer bin counts
    ci_low: np.ndarray     # per-bin 95% binomial interval
    ci_high: np.ndarray
    n_ranked: int
    ensemble_size: int


def rank_histogram(ens_batches, obs_batches, seed: int = 0) -> RankHistogram:
    """Histogram of observation ranks within their ensembles.

    Every observed scalar component is ranked among the Ns ensemble values
    for that component; ties are broken uniformly at random with the
    seeded generator. Ns+1 bins; per-bin 95% confidence interval from the
    binomial law with success probability 1/(Ns+1).
    """
    ens_batches = [np.asarray(e, dtype=float) for e in ens_batches]
    obs_batches = [np.asarray(o, dtype=float).ravel() for o in obs_batches]
    if len(ens_batches) != len(obs_batches) or not ens_batches:
        raise ValueError("need matching, nonempty ensemble/observation batches")
    ns = ens_batches[0].shape[1]
    for e in ens_batches:
        if e.shape[1] != ns:
            raise ValueError("all ensembles must share the same Ns")
    gen = rng_stream(seed, 0)
    counts = np.zeros(ns + 1, dtype=int)
    total = 0
    for ens, obs in zip(ens_batches, obs_batches):
        if ens.shape[0] != obs.shape[0]:
            raise ValueError("ensemble/observation dimension mismatch")
        less = np.sum(ens < obs[:, None], axis=1)
        equal = np.sum(ens == obs[:, None], axis=1)
        ranks = less + gen.integers(0, equal + 1)
        counts += np.bincount(ranks, minlength=ns + 1)
        total += obs.shape[0]
    lo, hi = stats.binom.interval(0.95, total, 1.0 / (ns + 1))
    return RankHistogram(counts=counts,
                         ci_low=np.full(ns + 1, lo),
                         ci_high=np.full(ns + 1, hi),
                         n_ranked=total, ensemble_size=ns)


def chi2_uniformity(hist: RankHistogram | np.ndarray) -> float:
    """Chi-square statistic of the counts against the uniform histogram."""
    counts = hist.counts if isinstance(hist, RankHistogram) else np.asarray(hist)
    n = counts.sum()
    if n == 0:
        raise ValueError("empty histogram")
    expected = n / counts.size
    return float(np.sum((counts - expected) ** 2 / expected))


def write_metrics_table(rows, path: str | Path) -> None:
    """CSV shaped (model, samples, luminance, contrast, structure, ssim, rmse)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "samples", "luminance", "contrast",
                         "structure", "ssim", "rmse"])
        for row in rows:
            model, samples, rep, err = row
            writer.writerow([model, samples, f"{rep.luminance:.17g}",
                             f"{rep.contrast:.17g}", f"{rep.structure:.17g}",
                             f"{rep.ssim:.17g}", f"{err:.17g}"])
