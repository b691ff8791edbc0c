import time
import numpy as np
from scoreinv.elliptic import (
    Mesh, ObservationOperator, build_prior, lattice_points, make_objective,
    make_observations, PriorSpec, volume_load, objective_and_gradient,
)
from scoreinv.optimize import LbfgsConfig, lbfgs_minimize
from scoreinv.scores import ScoreKind, constant_weights, inverse_distance_weights
from scoreinv.stochastic import GpSpec, SpatialKernel, sample
from scoreinv.verify import rmse, rank_histogram, chi2_uniformity

t0 = time.time()
mesh = Mesh(32)
spec = GpSpec(mean=0.0, kernel=SpatialKernel())
obs_pts = lattice_points(5)
obs_op = ObservationOperator(mesh, obs_pts)
cfg = LbfgsConfig(max_iters=150)

for seeds in ((101, 202, 303, 404), (111, 222, 333, 444)):
    s_truth, s_forc, s_noise, s_scen = seeds
    prior_std = build_prior(mesh, PriorSpec(kind="standard"))
    m_true = prior_std.sample(s_truth)
    prior_inf = build_prior(mesh, PriorSpec(kind="informed"), m_true=m_true)
    truth_forcing = sample(spec, mesh.nodes, 1, s_forc).samples[0]
    d_obs = make_observations(mesh, obs_op, m_true, truth_forcing, 0.1, s_noise)
    scen = sample(spec, mesh.nodes, 32, s_scen).samples
    base_rmse = rmse(prior_inf.m_prior, m_true)
    print(f"\n=== seeds {seeds}: prior-mean rmse {base_rmse:.4f} ===", flush=True)
    for w in (1.0, 5.0):
        for scheme in ("constant", "inverse-distance"):
            mk = (constant_weights(obs_op.n_points) if scheme == "constant"
                  else inverse_distance_weights(obs_pts))
            res = {}
            ens_std = {}
            for prior_name, prior in (("informed", prior_inf), ("standard", prior_std)):
                for kind_name in ("es", "vs"):
                    kind = (ScoreKind("es") if kind_name == "es"
                            else ScoreKind("vs", weights=mk))
                    for ns in (4, 32):
                        f_and_g = make_objective(mesh, scen[:ns], obs_op, d_obs,
                                                 kind, prior, score_weight=w)
                        m_map, tr = lbfgs_minimize(f_and_g, prior.m_prior.copy(), cfg)
                        res[(kind_name, prior_name, ns)] = rmse(m_map, m_true)
                        if prior_name == "standard" and ns == 32:
                            _, _, info = objective_and_gradient(
                                mesh, m_map,
                                np.vstack([volume_load(mesh, f) for f in scen[:32]]),
                                obs_op, d_obs, kind, prior, w)
                            ens_std[kind_name] = info["ensemble"]
            c7 = all([
                res[("vs", "informed", 4)] < res[("es", "informed", 4)],
                res[("vs", "informed", 32)] < res[("es", "informed", 32)],
                res[("es", "informed", 4)] < res[("es", "standard", 4)],
                res[("es", "informed", 32)] < res[("es", "standard", 32)],
                res[("vs", "informed", 4)] < res[("vs", "standard", 4)],
                res[("vs", "informed", 32)] < res[("vs", "standard", 32)],
            ])
            chi_es = chi2_uniformity(rank_histogram([ens_std["es"]], [d_obs], seed=606))
            chi_vs = chi2_uniformity(rank_histogram([ens_std["vs"]], [d_obs], seed=606))
            margin4 = res[("es", "informed", 4)] - res[("vs", "informed", 4)]
            margin32 = res[("es", "informed", 32)] - res[("vs", "informed", 32)]
            print(f"w={w:g} {scheme:16s}: c7={'PASS' if c7 else 'FAIL'} "
                  f"marginNs4={margin4:+.4f} marginNs32={margin32:+.4f} "
                  f"vsinf32={res[('vs','informed',32)]:.4f} "
                  f"esinf32={res[('es','informed',32)]:.4f} "
                  f"chi2 es={chi_es:.0f} vs={chi_vs:.0f} "
                  f"c8={'PASS' if chi_es < chi_vs else 'FAIL'} "
                  f"({time.time()-t0:.0f}s)", flush=True)
