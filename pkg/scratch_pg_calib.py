import time
import numpy as np
from scoreinv import powergrid as pg
from scoreinv.scores import ScoreKind, banded_time_weights

t0 = time.time()
ns = 100
n_obs = 200
m_values = list(range(1, 36))
kind_es = ScoreKind("es")
kind_vs = ScoreKind("vs", weights=banded_time_weights(500, 2, band=50))

for truth in (10.0, 20.0):
    obs = pg.make_observation_batches(truth, n_obs, seed=505)
    print(f"truth {truth}: obs done at {time.time()-t0:.0f}s")
    inst_es = pg.score_curve(m_values, obs, ns, 404, kind_es)
    print(f"  es curve done at {time.time()-t0:.0f}s")
    inst_vs = pg.score_curve(m_values, obs, ns, 404, kind_vs)
    print(f"  vs curve done at {time.time()-t0:.0f}s")
    for name, inst in (("es", inst_es), ("vs", inst_vs)):
        cum = np.cumsum(inst, axis=1) / np.arange(1, n_obs + 1)
        argm = np.array([m_values[int(np.argmin(cum[:, n]))] for n in range(n_obs)])
        hits = np.where(argm == truth)[0]
        first_hit = hits[0] + 1 if len(hits) else None
        # stabilization: smallest n such that argmin stays at truth onward
        stab = None
        for n in range(n_obs, 0, -1):
            if argm[n - 1] != truth:
                stab = n + 1 if n < n_obs else None
                break
        else:
            stab = 1
        print(f"  {name}: first hit n={first_hit}, stabilizes n={stab}, "
              f"argmins at n=1,5,10,25,50,100,200: "
              f"{[argm[k-1] for k in (1,5,10,25,50,100,200)]}")
print(f"total {time.time()-t0:.0f}s")
