"""Independent reference values for the unit tests.

Run once with mpmath/scipy/statsmodels; the printed header is checked in as
tests/frozen_oracles.hpp and never regenerated from the C++ code.
"""
import mpmath as mp
import numpy as np
import pandas as pd
import statsmodels.api as sm
from statsmodels.formula.api import ols

mp.mp.dps = 50
out = {}

# F(8, 8) CDF at 2.5 by adaptive quadrature of the density.
d1, d2, x = 8, 8, mp.mpf("2.5")
dens = lambda t: mp.sqrt((d1 * t) ** d1 * d2 ** d2 / (d1 * t + d2) ** (d1 + d2)) / (t * mp.beta(mp.mpf(d1) / 2, mp.mpf(d2) / 2))
out["F_CDF_2_5_8_8"] = mp.quad(dens, [0, 1, x])

# Digamma at 10.5 by the series psi(x) = -gamma + sum_{j>=0} (1/(j+1) - 1/(j+x)), summed with mpmath's nsum.
xx = mp.mpf("10.5")
out["DIGAMMA_10_5"] = -mp.euler + mp.nsum(lambda j: 1 / (j + 1) - 1 / (j + xx), [0, mp.inf])
out["TRIGAMMA_10_5"] = mp.nsum(lambda j: 1 / (j + xx) ** 2, [0, mp.inf])

# Posterior odds in the closed form with n=3, k=8, nu=13, eta=0.08, p=0.02, T2=50.
def mb(t2, n, k, nu, eta, p):
    n, k, nu, eta, p, t2 = map(mp.mpf, (n, k, nu, eta, p, t2))
    a = eta / (n + eta)
    o = p / (1 - p) * a ** (k / 2) * ((n - 1 + nu + t2) / (n - 1 + nu + a * t2)) ** ((n + nu) / 2)
    return mp.log10(o)
out["MB_N3_K8_NU13_T50"] = mb(50, 3, 8, 13, "0.08", "0.02")

# Single replicate, Lambda = I_3, x = e1: T2 = 1, with nu=5, eta=0.5, p=0.1.
out["MB_N1_K3_NU5"] = mb(1, 1, 3, 5, "0.5", "0.1")

# Univariate B-statistic in the (c, v0, d0, d) parameterization, c = 1/n, v0 = 1/eta.
def bstat(t, n, d0, eta, p):
    t, n, d0, eta, p = map(mp.mpf, (t, n, d0, eta, p))
    c, v0, d = 1 / n, 1 / eta, n - 1
    r = c / (c + v0)
    return mp.log10(p / (1 - p) * mp.sqrt(r) * ((t * t + d0 + d) / (t * t * r + d0 + d)) ** ((1 + d0 + d) / 2))
out["B_T2_5_N4_D0_3"] = bstat(mp.sqrt(mp.mpf("2.5")), 4, 3, "0.2", "0.05")

# Two-way ANOVA without interaction on a 3 x 3 layout (rows = replicates, columns = times).
table = np.array([[1.0, 2.0, 4.0], [2.0, 2.0, 5.0], [0.0, 3.0, 6.0]])
rows = [(str(i), str(j), table[i, j]) for i in range(3) for j in range(3)]
df = pd.DataFrame(rows, columns=["rep", "time", "y"])
fit = ols("y ~ C(rep) + C(time)", data=df).fit()
aov = sm.stats.anova_lm(fit, typ=2)
out["ANOVA_F_3X3"] = mp.mpf(aov.loc["C(time)", "F"])

# Helmert k=3 contrast rows 2..3 applied to replicates (1,2,3) and (3,2,1): S1 by direct expansion.
T1 = mp.matrix([[1 / mp.sqrt(2), -1 / mp.sqrt(2), 0], [1 / mp.sqrt(6), 1 / mp.sqrt(6), -2 / mp.sqrt(6)]])
a = T1 * mp.matrix([1, 2, 3])
b = T1 * mp.matrix([3, 2, 1])
m = (a + b) / 2
S1 = (a - m) * (a - m).T + (b - m) * (b - m).T
out["HELMERT3_S1_00"] = S1[0, 0]
out["HELMERT3_S1_01"] = S1[0, 1]
out["HELMERT3_S1_11"] = S1[1, 1]

print("#ifndef TCRANK_TESTS_FROZEN_ORACLES_HPP")
print("#define TCRANK_TESTS_FROZEN_ORACLES_HPP")
print()
print("// Generated once by tests/oracles/compute_oracles.py; do not regenerate from the library.")
print()
print("namespace frozen {")
print()
for k, v in out.items():
    print(f"inline constexpr double {k} = {mp.nstr(v, 20)};")
print()
print("}")
print()
print("#endif")
