import numpy as np
from scratch_check import X0

BSELF = 17.361008783459972   # |b12| less half line charging
BMUT = 17.361058783459974    # |b12|
G = 0.030140727054618

x = X0
x1, x8, x9 = x[0], x[7], x[8]
r10 = np.sin(x1) * x8 + np.cos(x1) * x9 - G * (x[9] - x[10]) \
    - BSELF * x[12] + BMUT * x[13]
r13 = -(np.cos(x1) * x8) + np.sin(x1) * x9 \
    + BSELF * x[9] - BMUT * x[10] - G * (x[12] - x[13])
print("de-factored row10:", r10)
print("de-factored row13:", r13)
print("charging/2 =", BMUT - BSELF)
# cross-check shunt consistency at buses 2 and 3
print("B22 check:", BMUT + 11.60409556313993 - 0.088 - 5e-5, "vs 28.877104346599904")
print("B33 check:", 11.60409556313993 - 0.088, "vs 11.516095563139931")
