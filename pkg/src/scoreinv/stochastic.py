"""Gaussian-process forcing fields and time series.

Covariance construction, dense-Cholesky sampling, and a counter-based
seeded random source. Scenario draws are indexed streams: sample i is
generated from its own Philox key, so the draw for scenario i does not
depend on how many scenarios precede it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy.linalg import lapack


class CovarianceError(Exception):
    """Covariance matrix failed the SPD (Cholesky) check."""


_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, tag: int = 0) -> np.random.Generator:
    """Independent generator for (seed, tag); counter-based (Philox)."""
    key = np.array([seed & _MASK64, tag & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SpatialKernel:
    """Anisotropic squared-exponential kernel on R^2 with diagonal nugget."""

    sigma: float = 0.7
    len_x: float = 0.1875
    len_y: float = 0.1406
    nugget: float = 1e-4

    def __post_init__(self):
        if self.sigma <= 0 or self.len_x <= 0 or self.len_y <= 0:
            raise ValueError("kernel scales must be positive")
        if self.nugget < 0:
            raise ValueError("nugget must be nonnegative")


@dataclass(frozen=True)
class TemporalKernel:
    """Stationary squared-exponential-plus-floor kernel on a time grid.

    Covariance is variance * (exp(-h^2/length_sq) + floor). The jitter is
    a small diagonal addition (relative to variance) required because the
    squared-exponential Gram matrix over a fine time grid is numerically
    singular at float64.
    """

    variance: float
    length_sq: float = 0.002
    floor: float = 0.1
    jitter: float = 1e-8

    def __post_init__(self):
        if self.variance <= 0 or self.length_sq <= 0:
            raise ValueError("variance and length_sq must be positive")
        if self.floor < 0 or self.jitter < 0:
            raise ValueError("floor and jitter must be nonnegative")


@dataclass(frozen=True)
class GpSpec:
    """Mean plus covariance kernel; the full description of one process."""

    mean: float
    kernel: SpatialKernel | TemporalKernel


@dataclass
class SampleBatch:
    """K i.i.d. draws of a GP at N points; reproducible from (spec, seed)."""

    samples: np.ndarray  # (K, N)
    seed: int
    stream_offset: int
    points: np.ndarray
    spec: GpSpec


def build_covariance(points: np.ndarray, spec: GpSpec) -> np.ndarray:
    """Dense covariance matrix of the process at the given points."""
    k = spec.kernel
    if isinstance(k, SpatialKernel):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != 2:
            raise ValueError("spatial kernel needs (N, 2) points")
        hx = pts[:, 0][:, None] - pts[:, 0][None, :]
        hy = pts[:, 1][:, None] - pts[:, 1][None, :]
        cov = k.sigma**2 * np.exp(-((hx / k.len_x) ** 2) - (hy / k.len_y) ** 2)
        cov[np.diag_indices_from(cov)] += k.nugget
        return cov
    if isinstance(k, TemporalKernel):
        t = np.asarray(points, dtype=float).ravel()
        h = t[:, None] - t[None, :]
        cov = k.variance * (np.exp(-(h**2) / k.length_sq) + k.floor)
        cov[np.diag_indices_from(cov)] += k.jitter * k.variance
        return cov
    raise TypeError(f"unknown kernel type {type(k).__name__}")


def cholesky_factor(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises CovarianceError with the failing minor."""
    c, info = lapack.dpotrf(cov, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise CovarianceError(f"covariance not SPD: leading minor {info} not positive")
    if info < 0:
        raise CovarianceError(f"covariance not SPD: illegal value in argument {-info}")
    return c


def sample(spec: GpSpec, points: np.ndarray, count: int, seed: int,
           stream_offset: int = 0) -> SampleBatch:
    """Draw `count` i.i.d. realizations, one indexed stream per sample.

    Sample i uses the Philox stream (seed, stream_offset + i); batches are
    bit-identical under regeneration and independent of batch size.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cov = build_covariance(points, spec)
    chol = cholesky_factor(cov)
    n = cov.shape[0]
    out = np.empty((count, n))
    for i in range(count):
        z = rng_stream(seed, stream_offset + i).standard_normal(n)
        out[i] = spec.mean + chol @ z
    return SampleBatch(samples=out, seed=seed, stream_offset=stream_offset,
                       points=np.asarray(points, dtype=float), spec=spec)


def _spec_to_json(spec: GpSpec) -> dict:
    kind = "spatial" if isinstance(spec.kernel, SpatialKernel) else "temporal"
    return {"mean": spec.mean, "kernel_kind": kind, "kernel": asdict(spec.kernel)}


def _spec_from_json(doc: dict) -> GpSpec:
    cls = SpatialKernel if doc["kernel_kind"] == "spatial" else TemporalKernel
    return GpSpec(mean=doc["mean"], kernel=cls(**doc["kernel"]))


def save_batch(batch: SampleBatch, path: str | Path) -> None:
    """Write samples as CSV plus a JSON sidecar pinning spec and seed."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in batch.samples:
            writer.writerow([f"{v:.17g}" for v in row])
    sidecar = {
        "seed": batch.seed,
        "stream_offset": batch.stream_offset,
        "points": [[f"{v:.17g}" for v in np.atleast_1d(p)] for p in batch.points],
        "spec": _spec_to_json(batch.spec),
    }
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=1)


def load_batch(path: str | Path) -> SampleBatch:
    path = Path(path)
    samples = np.loadtxt(path, delimiter=",", ndmin=2)
    with open(path.with_suffix(path.suffix + ".json")) as fh:
        sidecar = json.load(fh)
    points = np.array([[float(v) for v in p] for p in sidecar["points"]])
    if points.shape[1] == 1:
        points = points.ravel()
    return SampleBatch(
        samples=samples,
        seed=sidecar["seed"],
        stream_offset=sidecar["stream_offset"],
        points=points,
        spec=_spec_from_json(sidecar["spec"]),
    )
