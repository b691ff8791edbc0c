import time
import numpy as np
from scratch_check import X0

BSELF = 17.361008783459972
BMUT = 17.361058783459974
G12 = 0.030140727054618


def residual_batch(X, Xprev_d, dt, m, P, Q):
    """X: (B,15), Xprev_d: (B,7), P,Q: (B,). Returns (B,15)."""
    x1, x2, x3, x4, x5, x6, x7 = (X[:, k] for k in range(7))
    x8, x9, x10, x11, x12, x13, x14, x15 = (X[:, k] for k in range(7, 15))
    s1, c1 = np.sin(x1), np.cos(x1)
    v2 = x12 * x12 + x15 * x15
    R = np.empty_like(X)
    f = np.empty((X.shape[0], 7))
    f[:, 0] = -376.99111843077515 + x2
    f[:, 1] = 47.70113037725341 - 0.09968102073365231 * x2 \
        - 7.974481658692184 * (x4 * x8 + x3 * x9 + 0.0361 * x8 * x9)
    f[:, 2] = 0.11160714285714285 * (x5 - x3) - 0.009508928571428571 * x8
    f[:, 3] = -3.2258064516129035 * x4 + 1.0938709677419356 * x9
    f[:, 4] = -0.012420382165605096 * np.exp(1.555 * x5) + 3.1847133757961785 * (x7 - x5)
    f[:, 5] = 0.5142857142857145 * x5 - 2.857142857142857 * x6
    f[:, 6] = 109.644151839917 - 18 * x5 + 100 * x6 - 5 * x7 \
        - 100 * np.sqrt(x10 * x10 + x13 * x13)
    mass = np.ones(7)
    mass_m = np.array([1.0, m / 23.64, 1, 1, 1, 1, 1])
    R[:, :7] = mass_m * (X[:, :7] - Xprev_d) - dt * f
    R[:, 7] = x8 + 16.44736842105263 * (c1 * x10 + s1 * x13 - x3)
    R[:, 8] = x9 + 10.319917440660475 * (x4 - s1 * x10 + c1 * x13)
    R[:, 9] = s1 * x8 + c1 * x9 - G12 * (x10 - x11) - BSELF * x13 + BMUT * x14
    R[:, 10] = G12 * x10 - 1.395328440365198 * x11 + 1.36518771331058 * x12 \
        + BMUT * x13 - 28.877104346599904 * x14 + 11.60409556313993 * x15
    R[:, 11] = 1.36518771331058 * (x11 - x12) + 11.60409556313993 * x14 \
        - 11.516095563139931 * x15 - (P * x12 + Q * x15) / v2
    R[:, 12] = -(c1 * x8) + s1 * x9 + BSELF * x10 - BMUT * x11 - G12 * (x13 - x14)
    R[:, 13] = -BMUT * x10 + 28.877104346599904 * x11 - 11.60409556313993 * x12 \
        + G12 * x13 - 1.395328440365198 * x14 + 1.36518771331058 * x15
    R[:, 14] = -11.60409556313993 * x11 + 11.516095563139931 * x12 \
        + 1.36518771331058 * (x14 - x15) + (Q * x12 - P * x15) / v2
    return R


def newton_step_batch(Xprev, dt, m, P, Q, tol=1e-10, max_iter=50):
    X = Xprev.copy()
    Xprev_d = Xprev[:, :7]
    B = X.shape[0]
    for it in range(max_iter):
        R = residual_batch(X, Xprev_d, dt, m, P, Q)
        if np.max(np.abs(R)) <= tol:
            return X, it
        J = np.empty((B, 15, 15))
        h = 1e-8 * (1.0 + np.abs(X))
        for j in range(15):
            Xp = X.copy()
            Xp[:, j] += h[:, j]
            J[:, :, j] = (residual_batch(Xp, Xprev_d, dt, m, P, Q) - R) / h[:, j][:, None]
        dx = np.linalg.solve(J, -R[:, :, None])[:, :, 0]
        X = X + dx
    raise RuntimeError("no convergence")


rng = np.random.default_rng(0)
B = 100
X = np.tile(X0, (B, 1))
t0 = time.time()
nsteps = 1000
tot_it = 0
for k in range(nsteps):
    P = 1.25 + 0.1 * rng.standard_normal(B)
    Q = 0.5 + 0.05 * rng.standard_normal(B)
    X, it = newton_step_batch(X, 0.01, 10.0, P, Q)
    tot_it += it
el = time.time() - t0
print(f"batched {B} scenarios x {nsteps} steps: {el:.2f}s, avg newton iters {tot_it/nsteps:.2f}")
