import sys
import time
import numpy as np
from scoreinv import powergrid as pg
from scoreinv.scores import ScoreKind, banded_time_weights

scen_seed = int(sys.argv[1]) if len(sys.argv) > 1 else 404
t0 = time.time()
m_values = list(range(1, 36))
kind_es = ScoreKind("es")
kind_vs = ScoreKind("vs", weights=banded_time_weights(500, 2, band=50))

# warm the ensemble cache once
for m in m_values:
    pg.simulate_ensemble(m, 100, scen_seed)
print(f"ensembles cached in {time.time()-t0:.0f}s", flush=True)


def analyze(inst, truth, n_obs):
    cum = np.cumsum(inst, axis=1) / np.arange(1, n_obs + 1)
    argm = np.array([m_values[int(np.argmin(cum[:, n]))] for n in range(n_obs)])
    hits = np.where(argm == truth)[0] + 1
    stab = None
    for n in range(n_obs, 0, -1):
        if argm[n - 1] != truth:
            stab = n + 1 if n < n_obs else None
            break
    else:
        stab = 1
    return argm, (hits[0] if len(hits) else None), stab


rows = []
for obs_seed in (505, 1001, 1002, 1003, 1004, 1005, 1006, 1007, 1008, 1009, 1010, 1011):
    for truth in (10.0, 20.0):
        obs = pg.make_observation_batches(truth, 200, seed=obs_seed)
        inst_es = pg.score_curve(m_values, obs, 100, scen_seed, kind_es)
        inst_vs = pg.score_curve(m_values, obs, 100, scen_seed, kind_vs)
        argm_es, hit_es, stab_es = analyze(inst_es, truth, 200)
        argm_vs, hit_vs, stab_vs = analyze(inst_vs, truth, 200)
        vs_hit50 = hit_vs is not None and hit_vs <= 50
        es_hit200 = hit_es is not None
        stab_cmp = (stab_vs or 10**9) <= (stab_es or 10**9)
        rows.append((obs_seed, truth, hit_vs, stab_vs, hit_es, stab_es,
                     vs_hit50, es_hit200, stab_cmp))
        print(f"scen={scen_seed} obs={obs_seed} truth={truth:4.0f} | "
              f"VS hit={hit_vs} stab={stab_vs} | ES hit={hit_es} stab={stab_es} | "
              f"vs50={vs_hit50} es200={es_hit200} vs_faster={stab_cmp} "
              f"({time.time()-t0:.0f}s)", flush=True)
