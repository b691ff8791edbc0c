import numpy as np
from scoreinv import powergrid as pg
from scoreinv.scores import ScoreKind, _es_spread_term, instantaneous_scores

truth = 10.0
n_obs = 200
kind = ScoreKind("es")
obs = pg.make_observation_batches(truth, n_obs, seed=505)
m_values = [2, 4, 6, 8, 10, 12, 16, 24, 35]

print("m | meanES(Ns=100) | spread term | misfit term | meanES(Ns=300)")
for m in m_values:
    ens100 = pg.simulate_ensemble(m, 100, 404)
    s100 = np.mean(instantaneous_scores(kind, ens100, obs))
    spread = _es_spread_term(ens100)
    misfit = s100 + spread

    p, q = pg.sample_loads(300, 404)
    ens300 = pg.simulate_batch(m, p, q)
    s300 = np.mean(instantaneous_scores(kind, ens300, obs))
    print(f"{m:2d} | {s100:.6f} | {spread:.6f} | {misfit:.6f} | {s300:.6f}")
