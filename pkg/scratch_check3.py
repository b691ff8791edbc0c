import numpy as np
from scratch_check import X0

B058 = 17.361058783459974
B008 = 17.361008783459972
G = 0.030140727054618


def rows_10_13(x, b10, b13, g10=G, g13=G):
    x1, x8, x9 = x[0], x[7], x[8]
    da = x[9] - x[10]
    db = x[12] - x[13]
    r10 = np.sin(x1) * x8 + np.cos(x1) * x9 - g10 * da - b10 * db
    r13 = -(np.cos(x1) * x8) + np.sin(x1) * x9 + b13 * da - g13 * db
    return r10, r13


print("printed      :", rows_10_13(X0, B008, B008))
print("both 058     :", rows_10_13(X0, B058, B058))
print("row10=058    :", rows_10_13(X0, B058, B008))
print("row13=058    :", rows_10_13(X0, B008, B058))

# solve for implied constants taking the state + G as exact
x1, x8, x9 = X0[0], X0[7], X0[8]
da = X0[9] - X0[10]
db = X0[12] - X0[13]
c1 = np.sin(x1) * x8 + np.cos(x1) * x9
c2 = -(np.cos(x1) * x8) + np.sin(x1) * x9
print("implied b10 = (c1 - G*da)/db =", (c1 - G * da) / db)
print("implied b13 = (-c2 + G*db)/da =", (-c2 + G * db) / da)
# and implied g13 if b13 kept at one of the printed values
print("implied g13 with b13=008: (c2 + B008*da)/db =", (c2 + B008 * da) / db)
print("implied g13 with b13=058: (c2 + B058*da)/db =", (c2 + B058 * da) / db)
