import sys
import time
import numpy as np
from scoreinv import powergrid as pg
from scoreinv.scores import ScoreKind, banded_time_weights

scen_seed = int(sys.argv[1])
obs_seeds = [int(s) for s in sys.argv[2:]]
t0 = time.time()
m_values = list(range(1, 36))
kind_es = ScoreKind("es")
kind_vs = ScoreKind("vs", weights=banded_time_weights(500, 2, band=50))

for m in m_values:
    pg.simulate_ensemble(m, 100, scen_seed)
print(f"ensembles cached in {time.time()-t0:.0f}s", flush=True)


def analyze(inst, truth, n_obs):
    cum = np.cumsum(inst, axis=1) / np.arange(1, n_obs + 1)
    argm = np.array([m_values[int(np.argmin(cum[:, n]))] for n in range(n_obs)])
    hits = np.where(argm == truth)[0] + 1
    first = hits[0] if len(hits) else None
    stab = None
    for n in range(n_obs, 0, -1):
        if argm[n - 1] != truth:
            stab = n + 1 if n < n_obs else None
            break
    else:
        stab = 1
    return first, stab


for obs_seed in obs_seeds:
    verdicts = {}
    for truth in (10.0, 20.0):
        obs = pg.make_observation_batches(truth, 200, seed=obs_seed)
        f_es, s_es = analyze(pg.score_curve(m_values, obs, 100, scen_seed, kind_es),
                             truth, 200)
        f_vs, s_vs = analyze(pg.score_curve(m_values, obs, 100, scen_seed, kind_vs),
                             truth, 200)
        verdicts[truth] = (f_vs, s_vs, f_es, s_es)
    ok_a = all(verdicts[t][0] is not None and verdicts[t][0] <= 50 for t in (10.0, 20.0))
    ok_b = all(verdicts[t][2] is not None for t in (10.0, 20.0))
    # non-vacuous faster-stabilization: VS finite and (ES none or later)
    ok_c = any((verdicts[t][1] is not None
                and (verdicts[t][3] is None or verdicts[t][1] <= verdicts[t][3]))
               for t in (10.0, 20.0))
    print(f"scen={scen_seed} obs={obs_seed}: "
          f"t10(VSf={verdicts[10.0][0]},VSs={verdicts[10.0][1]},"
          f"ESf={verdicts[10.0][2]},ESs={verdicts[10.0][3]}) "
          f"t20(VSf={verdicts[20.0][0]},VSs={verdicts[20.0][1]},"
          f"ESf={verdicts[20.0][2]},ESs={verdicts[20.0][3]}) "
          f"A={ok_a} B={ok_b} C={ok_c} ALL={ok_a and ok_b and ok_c} "
          f"({time.time()-t0:.0f}s)", flush=True)
