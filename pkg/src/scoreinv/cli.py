"""Experiment runner: configuration-driven reproduction of the elliptic
coefficient inversion and the power-grid inertia study, plus one-shot
score evaluation and the finite-difference gradient check suite.

Exit codes: 0 success, 1 solver failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, powergrid
from .config import (
    ConfigError,
    DEFAULT_CONFIG,
    apply_seed_override,
    load_config,
    validate,
    write_metadata,
)
from .elliptic import (
    Mesh,
    ObservationOperator,
    build_prior,
    lattice_points,
    make_objective,
    make_observations,
    objective_and_gradient,
    PriorSpec,
    save_field,
    volume_load,
)
from .optimize import LbfgsConfig, lbfgs_minimize
from .scores import (
    HybridCoeffs,
    ScoreKind,
    banded_time_weights,
    constant_weights,
    energy_score,
    energy_score_grad,
    hybrid_score,
    hybrid_score_grad,
    inverse_distance_weights,
    score,
    variogram_score,
    variogram_score_grad,
)
from .stochastic import CovarianceError, GpSpec, SpatialKernel, sample, save_batch
from .verify import rmse, ssim, write_metrics_table


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def build_score_kind(name: str, score_cfg: dict, n_obs_points: int | None = None,
                     obs_points: np.ndarray | None = None,
                     steps_per_channel: int | None = None) -> ScoreKind:
    """Materialize a ScoreKind once the observable layout is known."""
    if name in ("es", "crps"):
        return ScoreKind(name)
    hybrid = HybridCoeffs(alpha=score_cfg["alpha"], beta=score_cfg["beta"])
    scheme = score_cfg["weights"]
    p = score_cfg["exponent"]
    if scheme == "constant":
        weights = constant_weights(n_obs_points, p=p)
    elif scheme == "inverse-distance":
        if obs_points is None:
            raise ConfigError(["inverse-distance weights need site coordinates"])
        weights = inverse_distance_weights(obs_points, p=p)
    else:  # banded
        if steps_per_channel is None:
            raise ConfigError(["banded weights need a time-series layout"])
        weights = banded_time_weights(steps_per_channel, channels=2,
                                      band=score_cfg["band"], p=p)
    return ScoreKind(name, weights=weights, hybrid=hybrid)


def _prepare_out_dir(out_dir: Path, force: bool) -> None:
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise ConfigError([f"output directory {out_dir} exists and is not empty "
                           "(use --force to overwrite)"])
    out_dir.mkdir(parents=True, exist_ok=True)


def run_elliptic(cfg: dict, out_dir: Path) -> None:
    ell = cfg["elliptic"]
    seeds = cfg["seeds"]
    mesh = Mesh(ell["mesh"])
    forcing_spec = GpSpec(mean=0.0, kernel=SpatialKernel(**ell["forcing"]))

    prior_specs = {
        "standard": PriorSpec(kind="standard", gamma=ell["gamma"],
                              delta=ell["delta"], theta=tuple(map(tuple, ell["theta"]))),
        "informed": PriorSpec(kind="informed", gamma=ell["gamma"],
                              delta=ell["delta"], penalty=ell["penalty"],
                              theta=tuple(map(tuple, ell["theta"]))),
    }
    prior_std = build_prior(mesh, prior_specs["standard"])
    m_true = prior_std.sample(seeds["truth"])
    save_field(mesh, m_true, out_dir / "m_true.csv")

    truth_forcing = sample(forcing_spec, mesh.nodes, 1,
                           seeds["truth_forcing"]).samples[0]
    obs_points = lattice_points(ell["obs_grid"])
    obs_op = ObservationOperator(mesh, obs_points)
    d_obs = make_observations(mesh, obs_op, m_true, truth_forcing,
                              ell["noise_sigma"], seeds["obs_noise"])
    with open(out_dir / "d_obs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        for v in d_obs:
            writer.writerow([_fmt(v)])

    ns_max = max(ell["sample_counts"])
    scenarios = sample(forcing_spec, mesh.nodes, ns_max, seeds["scenarios"])
    save_batch(scenarios, out_dir / "scenarios.csv")

    lumped = mesh.lumped_mass
    metric = lambda g: float(np.sqrt(np.sum(g * g / lumped)))
    lbfgs_cfg = LbfgsConfig(**ell["lbfgs"])

    priors = {}
    for prior_name in ell["priors"]:
        prior = (prior_std if prior_name == "standard"
                 else build_prior(mesh, prior_specs["informed"], m_true=m_true))
        priors[prior_name] = prior
        save_field(mesh, prior.m_prior, out_dir / f"m_prior_{prior_name}.csv")

    for prior_name in ell["priors"]:
        prior = priors[prior_name]
        rows = []
        for kind_name in cfg["score"]["kinds"]:
            kind = build_score_kind(kind_name, cfg["score"],
                                    n_obs_points=obs_op.n_points,
                                    obs_points=obs_points)
            for ns in ell["sample_counts"]:
                tag = f"{kind_name}_{prior_name}_ns{ns}"
                f_and_g = make_objective(mesh, scenarios.samples[:ns], obs_op,
                                         d_obs, kind, prior,
                                         score_weight=ell["score_weight"])
                m_map, trace = lbfgs_minimize(f_and_g, prior.m_prior.copy(),
                                              lbfgs_cfg, metric=metric)
                save_field(mesh, m_map, out_dir / f"m_map_{tag}.csv")
                trace.write_csv(out_dir / f"iterations_{tag}.csv")
                rows.append((kind_name, ns, ssim(m_map, m_true),
                             rmse(m_map, m_true)))
                print(f"elliptic {tag}: iters={len(trace.objective) - 1} "
                      f"status={trace.status} rmse={rows[-1][3]:.4f}")
        write_metrics_table(rows, out_dir / f"metrics_{prior_name}.csv")


def _window_channel_steps(grid_cfg: dict) -> int:
    lo, hi = powergrid._window_steps(grid_cfg["steps"], grid_cfg["dt"],
                                     tuple(grid_cfg["window"]))
    return hi - lo + 1


def run_powergrid(cfg: dict, out_dir: Path) -> None:
    grid = cfg["powergrid"]
    seeds = cfg["seeds"]
    window = tuple(grid["window"])
    steps_per_channel = _window_channel_steps(grid)
    m_lo, m_hi = grid["m_grid"]
    m_values = list(range(int(m_lo), int(m_hi) + 1))
    estimates = []

    for truth in grid["truths"]:
        obs = powergrid.make_observation_batches(
            truth, grid["n_obs"], seeds["observations"],
            n_steps=grid["steps"], dt=grid["dt"], window=window)
        for kind_name in cfg["score"]["kinds"]:
            kind = build_score_kind(kind_name, cfg["score"],
                                    n_obs_points=2 * steps_per_channel,
                                    steps_per_channel=steps_per_channel)
            inst = powergrid.score_curve(m_values, obs, grid["ns"],
                                         seeds["scenarios"], kind,
                                         n_steps=grid["steps"], dt=grid["dt"],
                                         window=window)
            cum = np.cumsum(inst, axis=1) / np.arange(1, obs.shape[0] + 1)
            path = out_dir / f"curve_{kind_name}_truth{truth:g}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["m", "n", "score"])
                for i, m in enumerate(m_values):
                    for n in range(obs.shape[0]):
                        writer.writerow([m, n + 1, _fmt(cum[i, n])])
            argmins = [m_values[int(np.argmin(cum[:, n]))]
                       for n in range(obs.shape[0])]
            print(f"powergrid curve {kind_name} truth={truth:g}: "
                  f"final argmin={argmins[-1]}")

            if grid["estimate"]:
                bounds = (truth - grid["bounds_pad"], truth + grid["bounds_pad"])
                for label, start in (("low", bounds[0]), ("high", bounds[1])):
                    est, trace = powergrid.estimate_inertia(
                        truth, bounds, kind, start=start, ns=grid["ns"],
                        n_obs=grid["estimate_n_obs"],
                        scenario_seed=seeds["scenarios"],
                        obs_seed=seeds["observations"],
                        n_steps=grid["steps"], dt=grid["dt"], window=window)
                    trace.write_csv(
                        out_dir / f"estimate_{kind_name}_truth{truth:g}_{label}.csv")
                    estimates.append((kind_name, truth, label, est,
                                      len(trace.evals)))
                    print(f"powergrid estimate {kind_name} truth={truth:g} "
                          f"start={label}: {est:.3f} ({len(trace.evals)} evals)")

        if grid["debug_trajectory"]:
            p, q = powergrid.sample_loads(1, seeds["observations"],
                                          n_steps=grid["steps"], dt=grid["dt"])
            _, states = powergrid.simulate_batch(truth, p, q, dt=grid["dt"],
                                                 window=window, return_states=True)
            with open(out_dir / f"trajectory_truth{truth:g}.csv", "w",
                      newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t"] + [f"x{k}" for k in range(1, 16)])
                for k in range(grid["steps"]):
                    writer.writerow([_fmt((k + 1) * grid["dt"])]
                                    + [_fmt(v) for v in states[k, 0]])

    if estimates:
        with open(out_dir / "estimates.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "truth", "start", "estimate", "evaluations"])
            for row in estimates:
                writer.writerow([row[0], f"{row[1]:g}", row[2], _fmt(row[3]), row[4]])


def _parse_matrix(path: str):
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ConfigError([f"{path} line {lineno}: {exc}"]) from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ConfigError([f"{path} line {lineno}: expected {width} "
                                   f"values, got {len(row)}"])
            rows.append(row)
    if not rows:
        raise ConfigError([f"{path}: empty file"])
    return np.array(rows)


def run_score_eval(args) -> int:
    ens = _parse_matrix(args.ens)
    obs = _parse_matrix(args.obs).ravel()
    if ens.shape[0] != obs.shape[0]:
        raise ConfigError([
            f"dimension mismatch: ensemble rows M={ens.shape[0]} "
            f"but observation has {obs.shape[0]} entries"])
    score_cfg = {"alpha": args.alpha, "beta": args.beta, "exponent": args.exponent,
                 "weights": "constant", "band": 50}
    kind = build_score_kind(args.kind, score_cfg, n_obs_points=ens.shape[0])
    value = score(kind, ens, obs)
    print(_fmt(value))
    if args.record:
        record = {
            "kind": args.kind,
            "exponent": args.exponent,
            "alpha": args.alpha,
            "beta": args.beta,
            "M": int(ens.shape[0]),
            "Ns": int(ens.shape[1]),
            "score": value,
        }
        with open(args.record, "w") as fh:
            json.dump(record, fh, indent=1)
    return 0


def run_gradcheck() -> int:
    """All finite-difference suites; one pass/fail line per check."""
    rng = np.random.default_rng(2718)
    failures = 0

    def report(name, worst, tol):
        nonlocal failures
        ok = worst <= tol
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {name}: max rel err {worst:.3e} "
              f"(tol {tol:.1e})")

    def fd(fun, ens):
        g = np.zeros_like(ens)
        for idx in np.ndindex(ens.shape):
            h = 1e-6 * (1 + abs(ens[idx]))
            ep, em = ens.copy(), ens.copy()
            ep[idx] += h
            em[idx] -= h
            g[idx] = (fun(ep) - fun(em)) / (2 * h)
        return g

    worst = {"es": 0.0, "vs": 0.0, "hs": 0.0}
    coeffs = HybridCoeffs()
    for _ in range(100):
        m, ns = rng.integers(2, 9), rng.integers(1, 9)
        ens = rng.standard_normal((m, ns))
        obs = rng.standard_normal(m)
        w = constant_weights(m)
        checks = {
            "es": (energy_score_grad(ens, obs)[0],
                   fd(lambda e: energy_score(e, obs), ens)),
            "vs": (variogram_score_grad(ens, obs, w),
                   fd(lambda e: variogram_score(e, obs, w), ens)),
            "hs": (hybrid_score_grad(ens, obs, w, coeffs)[0],
                   fd(lambda e: hybrid_score(e, obs, w, coeffs), ens)),
        }
        for name, (g, g_fd) in checks.items():
            err = np.max(np.abs(g - g_fd)) / max(np.max(np.abs(g)), 1e-12)
            worst[name] = max(worst[name], err)
    for name in ("es", "vs", "hs"):
        report(f"score gradient {name}", worst[name], 1e-6)

    mesh = Mesh(8)
    spec = GpSpec(mean=0.0, kernel=SpatialKernel())
    scen = sample(spec, mesh.nodes, 4, seed=77).samples
    loads = np.vstack([volume_load(mesh, f) for f in scen])
    obs_op = ObservationOperator(mesh, lattice_points(5))
    prior_std = build_prior(mesh, PriorSpec(kind="standard"))
    m_true = prior_std.sample(seed=78)
    d_obs = make_observations(mesh, obs_op, m_true, scen[0], 0.1, seed=79)
    priors = {"standard": prior_std,
              "informed": build_prior(mesh, PriorSpec(kind="informed"),
                                      m_true=m_true)}
    m0 = 0.3 * rng.standard_normal(mesh.n_nodes)
    for prior_name, prior in priors.items():
        for kind_name in ("es", "vs", "hs"):
            kind = build_score_kind(kind_name,
                                    {"alpha": 0.1, "beta": 0.9, "exponent": 2.0,
                                     "weights": "constant", "band": 50},
                                    n_obs_points=obs_op.n_points)
            _, grad, _ = objective_and_gradient(mesh, m0, loads, obs_op, d_obs,
                                                kind, prior)
            worst_dir = 0.0
            for _ in range(10):
                v = rng.standard_normal(mesh.n_nodes)
                v /= np.linalg.norm(v)
                h = 1e-5
                fp = objective_and_gradient(mesh, m0 + h * v, loads, obs_op,
                                            d_obs, kind, prior)[0]
                fm = objective_and_gradient(mesh, m0 - h * v, loads, obs_op,
                                            d_obs, kind, prior)[0]
                fd_dir = (fp - fm) / (2 * h)
                worst_dir = max(worst_dir, abs(fd_dir - grad @ v)
                                / max(abs(fd_dir), 1e-10))
            report(f"elliptic objective gradient {kind_name}/{prior_name}",
                   worst_dir, 1e-4)

    for prior_name, prior in priors.items():
        m = rng.standard_normal(mesh.n_nodes)
        g = prior.grad(m)
        worst_dir = 0.0
        for _ in range(5):
            v = rng.standard_normal(mesh.n_nodes)
            h = 1e-6
            fd_dir = (prior.cost(m + h * v) - prior.cost(m - h * v)) / (2 * h)
            worst_dir = max(worst_dir, abs(fd_dir - g @ v) / max(abs(fd_dir), 1e-10))
        report(f"prior gradient {prior_name}", worst_dir, 1e-6)

    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scoreinv",
        description="Score-based inversion experiments for stochastic models")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("elliptic", "powergrid"):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=False, help="config or metadata JSON")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed-override", type=int, default=None,
                       help="re-derive all named seeds from this master seed")
        p.add_argument("--force", action="store_true",
                       help="allow writing into a nonempty output directory")

    p_score = sub.add_parser("score", help="one-shot score evaluation")
    p_score.add_argument("--ens", required=True, help="ensemble CSV (M rows, Ns cols)")
    p_score.add_argument("--obs", required=True, help="observation CSV (M values)")
    p_score.add_argument("--kind", required=True,
                         choices=["crps", "es", "vs", "hs"])
    p_score.add_argument("--exponent", type=float, default=2.0)
    p_score.add_argument("--alpha", type=float, default=0.1)
    p_score.add_argument("--beta", type=float, default=0.9)
    p_score.add_argument("--record", help="write a JSON record of the evaluation")

    sub.add_parser("gradcheck", help="run every finite-difference suite")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)

    try:
        if args.command == "score":
            return run_score_eval(args)
        if args.command == "gradcheck":
            return run_gradcheck()

        user_cfg = load_config(args.config) if args.config else {}
        if "experiment" not in user_cfg:
            user_cfg["experiment"] = args.command
        cfg = validate(user_cfg)
        if cfg["experiment"] != args.command:
            raise ConfigError([
                f"config is for experiment {cfg['experiment']!r}, "
                f"but the {args.command!r} command was invoked"])
        if args.seed_override is not None:
            cfg = apply_seed_override(cfg, args.seed_override)
        out = args.out or cfg["out_dir"]
        if not out:
            raise ConfigError(["no output directory: pass --out or set out_dir"])
        cfg["out_dir"] = str(out)
        out_dir = Path(out)
        _prepare_out_dir(out_dir, args.force)
        write_metadata(cfg, out_dir, __version__)
        if args.command == "elliptic":
            run_elliptic(cfg, out_dir)
        else:
            run_powergrid(cfg, out_dir)
        return 0
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, CovarianceError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
