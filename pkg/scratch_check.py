import numpy as np

X0 = np.array([
    0.391057483977274, 376.9911184307751, 1.022092319747551,
    0.308311065534821, 1.107019848098437, 0.199263572657719,
    1.12883036798339, 0.996801975949364, 0.909203967958775,
    1.04, 1.006755413658047, 0.938198590465838,
    0.0, -0.070244002800643, -0.166824934470857,
])


def rhs_diff(x, P, Q):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11, x12, x13, x14, x15 = x
    f = np.empty(7)
    f[0] = -376.99111843077515 + x2
    f[1] = 47.70113037725341 - 0.09968102073365231 * x2 \
        - 7.974481658692184 * (x4 * x8 + x3 * x9 + 0.0361 * x8 * x9)
    f[2] = 0.11160714285714285 * (x5 - x3) - 0.009508928571428571 * x8
    f[3] = -3.2258064516129035 * x4 + 1.0938709677419356 * x9
    f[4] = -0.012420382165605096 * np.exp(1.555 * x5) + 3.1847133757961785 * (x7 - x5)
    f[5] = 0.5142857142857145 * x5 - 2.857142857142857 * x6
    f[6] = 109.644151839917 - 18 * x5 + 100 * x6 - 5 * x7 - 100 * np.sqrt(x10**2 + x13**2)
    return f


def rhs_alg(x, P, Q):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11, x12, x13, x14, x15 = x
    v2 = x12**2 + x15**2
    g = np.empty(8)
    g[0] = x8 + 16.44736842105263 * (np.cos(x1) * x10 + np.sin(x1) * x13 - x3)
    g[1] = x9 + 10.319917440660475 * (x4 - np.sin(x1) * x10 + np.cos(x1) * x13)
    g[2] = np.sin(x1) * x8 + np.cos(x1) * x9 - 0.030140727054618 * (x10 - x11) \
        - 17.361008783459972 * (x13 - x14)
    g[3] = 0.030140727054618 * x10 - 1.395328440365198 * x11 + 1.36518771331058 * x12 \
        + 17.361058783459974 * x13 - 28.877104346599904 * x14 + 11.60409556313993 * x15
    g[4] = 1.36518771331058 * (x11 - x12) + 11.60409556313993 * x14 \
        - 11.516095563139931 * x15 - P * x12 / v2 - Q * x15 / v2
    g[5] = -(np.cos(x1) * x8) + np.sin(x1) * x9 + 17.361008783459972 * (x10 - x11) \
        - 0.030140727054618 * (x13 - x14)
    g[6] = -17.361058783459974 * x10 + 28.877104346599904 * x11 - 11.60409556313993 * x12 \
        + 0.030140727054618 * x13 - 1.395328440365198 * x14 + 1.36518771331058 * x15
    g[7] = -11.60409556313993 * x11 + 11.516095563139931 * x12 \
        + 1.36518771331058 * (x14 - x15) + Q * x12 / v2 - P * x15 / v2
    return g


res = np.concatenate([rhs_diff(X0, 1.25, 0.5), rhs_alg(X0, 1.25, 0.5)])
print("steady-state residual rows:")
for i, r in enumerate(res):
    print(f"  row {i+1:2d}: {r: .3e}")
print("inf norm:", np.max(np.abs(res)))

# temporal kernel conditioning
t = 0.01 * np.arange(1, 1001)
h = t[:, None] - t[None, :]
K = 0.1**2 * (np.exp(-h**2 / 0.002) + 0.1)
w = np.linalg.eigvalsh(K)
print("temporal K eig range:", w[0], w[-1])
try:
    np.linalg.cholesky(K)
    print("cholesky OK without jitter")
except np.linalg.LinAlgError as e:
    print("cholesky FAILED without jitter:", e)
try:
    np.linalg.cholesky(K + 1e-8 * 0.1**2 * np.eye(1000))
    print("cholesky OK with 1e-8*var jitter")
except np.linalg.LinAlgError as e:
    print("cholesky failed with jitter:", e)
