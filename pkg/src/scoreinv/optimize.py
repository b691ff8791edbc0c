"""Limited-memory BFGS with Armijo backtracking, finite-difference
gradients, and a projected quasi-Newton search for bounded scalars."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class LbfgsConfig:
    memory: int = 10
    max_iters: int = 300
    grad_tol: float = 1e-6      # relative to the initial gradient norm
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if not 0 < self.armijo_c1 < 1:
            raise ValueError("armijo_c1 must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.memory < 1:
            raise ValueError("memory must be positive")


@dataclass
class IterTrace:
    """Per-iteration record of an L-BFGS run; objective is nonincreasing
    across accepted iterates."""

    objective: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    step: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    resets: int = 0
    status: str = "running"

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "objective", "grad_norm", "step_length", "backtracks"])
            for k in range(len(self.objective)):
                writer.writerow([k, f"{self.objective[k]:.17g}", f"{self.grad_norm[k]:.17g}",
                                 f"{self.step[k]:.17g}", self.backtracks[k]])


def _two_loop(grad, s_list, y_list):
    """H*grad by the two-loop recursion; newest-pair scaling of H0."""
    q = grad.copy()
    alphas = []
    rhos = [1.0 / float(np.dot(y, s)) for s, y in zip(s_list, y_list)]
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rhos)):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= float(np.dot(s, y)) / float(np.dot(y, y))
    for (s, y, rho), a in zip(zip(s_list, y_list, rhos), reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return q


def lbfgs_minimize(f_and_g, m0: np.ndarray, cfg: LbfgsConfig | None = None,
                   metric=None) -> tuple[np.ndarray, IterTrace]:
    """Minimize with limited-memory BFGS.

    f_and_g(m) must return (value, gradient) and be deterministic during
    the solve (any stochastic scenarios pinned by the caller). `metric`,
    when given, maps a gradient to the norm used in the stopping test
    (e.g. a mass-weighted norm); Euclidean otherwise.
    """
    cfg = cfg or LbfgsConfig()
    norm = metric if metric is not None else lambda g: float(np.linalg.norm(g))
    m = np.asarray(m0, dtype=float).copy()
    f, g = f_and_g(m)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise ValueError("non-finite objective or gradient at the starting point")
    g = np.asarray(g, dtype=float)
    trace = IterTrace()
    gnorm0 = norm(g)
    best_m, best_f = m.copy(), f
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []

    trace.objective.append(f)
    trace.grad_norm.append(norm(g))
    trace.step.append(0.0)
    trace.backtracks.append(0)

    skipped_pairs = 0
    for _ in range(cfg.max_iters):
        if norm(g) <= cfg.grad_tol * gnorm0:
            trace.status = "converged"
            return m, trace

        d = -_two_loop(g, s_list, y_list)
        gd = float(np.dot(g, d))
        if gd >= 0.0:
            # not a descent direction: fall back to steepest descent
            d = -g
            gd = float(np.dot(g, d))
            s_list.clear()
            y_list.clear()
            trace.resets += 1

        accepted = None
        halved_memory = False
        while True:
            alpha = 1.0
            n_back = 0
            for _bt in range(cfg.max_backtracks + 1):
                trial = m + alpha * d
                ft, gt = f_and_g(trial)
                if np.isfinite(ft) and ft <= f + cfg.armijo_c1 * alpha * gd:
                    accepted = (trial, float(ft), np.asarray(gt, dtype=float), alpha, n_back)
                    break
                alpha *= cfg.backtrack
                n_back += 1
            if accepted is not None:
                break
            if not halved_memory and len(s_list) > 1:
                # drop the older half of the curvature pairs and retry once
                keep = max(1, len(s_list) // 2)
                del s_list[:-keep]
                del y_list[:-keep]
                d = -_two_loop(g, s_list, y_list)
                gd = float(np.dot(g, d))
                if gd >= 0.0:
                    d, gd = -g, -float(np.dot(g, g))
                    trace.resets += 1
                halved_memory = True
                continue
            trace.status = "line_search_failure"
            return best_m, trace

        trial, ft, gt, alpha, n_back = accepted
        if not np.all(np.isfinite(gt)):
            raise ValueError("non-finite gradient at an accepted iterate")
        s = trial - m
        y = gt - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > cfg.memory:
                s_list.pop(0)
                y_list.pop(0)
            skipped_pairs = 0
        else:
            # indefinite curvature along the step: skip the pair; stale
            # memory stalls Armijo-only searches, so flush it after two
            # consecutive skips and rebuild
            skipped_pairs += 1
            if skipped_pairs >= 2:
                s_list.clear()
                y_list.clear()
                skipped_pairs = 0
                trace.resets += 1

        m, f, g = trial, ft, gt
        if f < best_f:
            best_m, best_f = m.copy(), f
        trace.objective.append(f)
        trace.grad_norm.append(norm(g))
        trace.step.append(alpha)
        trace.backtracks.append(n_back)

    trace.status = "converged" if norm(g) <= cfg.grad_tol * gnorm0 else "max_iters"
    return m, trace


def fd_gradient(f, m: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite differences, step rel_step * (1 + |m_i|) per coordinate."""
    m = np.asarray(m, dtype=float)
    grad = np.empty_like(m)
    for i in range(m.size):
        h = rel_step * (1.0 + abs(m[i]))
        mp, mm = m.copy(), m.copy()
        mp[i] += h
        mm[i] -= h
        fp, fm = f(mp), f(mm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite evaluation while differencing coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


@dataclass
class ScalarTrace:
    """Every objective evaluation of a bounded scalar search, in call order,
    plus the accepted (monotone) iterates."""

    evals: list = field(default_factory=list)      # (m, f) per evaluation
    accepted: list = field(default_factory=list)   # (m, f) per accepted iterate
    status: str = "running"

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eval", "m", "objective"])
            for k, (m, fv) in enumerate(self.evals):
                writer.writerow([k, f"{m:.17g}", f"{fv:.17g}"])


def _scalar_fd(f, x, rel_step, scheme, f_x=None):
    h = rel_step * (1.0 + abs(x))
    if scheme == "forward":
        f0 = f(x) if f_x is None else f_x
        return (f(x + h) - f0) / h
    if scheme == "central":
        return (f(x + h) - f(x - h)) / (2.0 * h)
    raise ValueError(f"unknown finite-difference scheme {scheme!r}")


def bounded_scalar_minimize(f, lo: float, hi: float, cfg: LbfgsConfig | None = None,
                            x0: float | None = None, rel_step: float = 1e-6,
                            fd_scheme: str = "central",
                            xtol: float = 1e-9) -> tuple[float, ScalarTrace]:
    """Projected quasi-Newton on one variable with finite-difference slopes.

    Iterates are clamped to [lo, hi]; returns the best evaluated point.
    """
    if not lo < hi:
        raise ValueError(f"infeasible bounds [{lo}, {hi}]")
    cfg = cfg or LbfgsConfig()
    trace = ScalarTrace()

    def fr(x):
        v = float(f(x))
        trace.evals.append((x, v))
        return v

    x = float(np.clip(lo if x0 is None else x0, lo, hi))
    fx = fr(x)
    if not np.isfinite(fx):
        raise ValueError("non-finite objective at the starting point")
    best_x, best_f = x, fx
    trace.accepted.append((x, fx))
    h_inv = None  # scalar inverse-curvature estimate

    for _ in range(cfg.max_iters):
        g = _scalar_fd(fr, x, rel_step, fd_scheme, f_x=fx)
        if not np.isfinite(g):
            trace.status = "aborted"
            break
        # projected-gradient stationarity test
        if abs(x - np.clip(x - g, lo, hi)) <= xtol * (1.0 + abs(x)):
            trace.status = "converged"
            # clinging to a bound within rounding noise: prefer the bound
            for bound in (lo, hi):
                if 0.0 < abs(x - bound) <= 1e-6 * (1.0 + abs(bound)):
                    fb = fr(bound)
                    if np.isfinite(fb) and fb <= fx:
                        x, fx = bound, fb
                        if fx < best_f:
                            best_x, best_f = x, fx
            break
        scale = h_inv if (h_inv is not None and h_inv > 0) else 1.0 / max(abs(g), 1.0)
        d = -scale * g
        alpha = 1.0
        moved = False
        for _bt in range(cfg.max_backtracks + 1):
            xt = float(np.clip(x + alpha * d, lo, hi))
            if xt == x:
                break
            ft = fr(xt)
            if np.isfinite(ft) and ft <= fx + cfg.armijo_c1 * g * (xt - x):
                gt = _scalar_fd(fr, xt, rel_step, fd_scheme, f_x=ft)
                s, ydiff = xt - x, gt - g
                if s * ydiff > 0:
                    h_inv = s / ydiff
                x, fx = xt, ft
                moved = True
                break
            alpha *= cfg.backtrack
        if not moved:
            trace.status = "line_search_failure"
            break
        trace.accepted.append((x, fx))
        if fx < best_f:
            best_x, best_f = x, fx
    else:
        trace.status = "max_iters"

    if not trace.evals:
        raise ValueError("no finite objective evaluations")
    return best_x, trace
