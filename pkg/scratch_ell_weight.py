import sys
import time
import numpy as np
from scoreinv.elliptic import (
    Mesh, ObservationOperator, build_prior, lattice_points, make_objective,
    make_observations, PriorSpec, volume_load, objective_and_gradient,
)
from scoreinv.optimize import LbfgsConfig, lbfgs_minimize
from scoreinv.scores import ScoreKind, constant_weights
from scoreinv.stochastic import GpSpec, SpatialKernel, sample
from scoreinv.verify import rmse, rank_histogram, chi2_uniformity

t0 = time.time()
weights = [float(w) for w in sys.argv[1:]] or [25.0, 100.0]
mesh = Mesh(32)
spec = GpSpec(mean=0.0, kernel=SpatialKernel())
prior_std = build_prior(mesh, PriorSpec(kind="standard"))
m_true = prior_std.sample(101)
prior_inf = build_prior(mesh, PriorSpec(kind="informed"), m_true=m_true)
truth_forcing = sample(spec, mesh.nodes, 1, 202).samples[0]
obs_op = ObservationOperator(mesh, lattice_points(5))
d_obs = make_observations(mesh, obs_op, m_true, truth_forcing, 0.1, 303)
scen = sample(spec, mesh.nodes, 32, 404).samples
cfg = LbfgsConfig(max_iters=150)

for w in weights:
    res = {}
    for prior_name, prior in (("informed", prior_inf), ("standard", prior_std)):
        for kind_name in ("es", "vs"):
            kind = (ScoreKind("es") if kind_name == "es"
                    else ScoreKind("vs", weights=constant_weights(obs_op.n_points)))
            for ns in (4, 32):
                f_and_g = make_objective(mesh, scen[:ns], obs_op, d_obs, kind,
                                         prior, score_weight=w)
                m_map, tr = lbfgs_minimize(f_and_g, prior.m_prior.copy(), cfg)
                res[(kind_name, prior_name, ns)] = (rmse(m_map, m_true), m_map)
                print(f"w={w:g} {kind_name} {prior_name:8s} ns={ns:2d}: "
                      f"rmse={res[(kind_name, prior_name, ns)][0]:.4f} "
                      f"iters={len(tr.objective)-1} {tr.status} "
                      f"({time.time()-t0:.0f}s)", flush=True)
    print(f"\nw={w:g} criterion 7:")
    for ns in (4, 32):
        vs_i = res[("vs", "informed", ns)][0]
        es_i = res[("es", "informed", ns)][0]
        print(f"  ns={ns}: VS inf {vs_i:.4f} < ES inf {es_i:.4f}: {vs_i < es_i}")
        for k in ("es", "vs"):
            inf, std = res[(k, "informed", ns)][0], res[(k, "standard", ns)][0]
            print(f"  ns={ns} {k}: inf {inf:.4f} < std {std:.4f}: {inf < std}")
    print(f"w={w:g} criterion 8 (standard prior, ns=32):")
    chis = {}
    for k in ("es", "vs"):
        m_map = res[(k, "standard", 32)][1]
        kind = (ScoreKind("es") if k == "es"
                else ScoreKind("vs", weights=constant_weights(obs_op.n_points)))
        _, _, info = objective_and_gradient(
            mesh, m_map, np.vstack([volume_load(mesh, f) for f in scen[:32]]),
            obs_op, d_obs, kind, prior_std, w)
        chis[k] = chi2_uniformity(rank_histogram([info["ensemble"]], [d_obs], seed=606))
        print(f"  {k}: chi2={chis[k]:.1f}")
    print(f"  es < vs: {chis['es'] < chis['vs']}\n", flush=True)
