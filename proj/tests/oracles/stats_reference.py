"""Reference values for the statistics tests, computed with scipy/mpmath.

Run: python3 stats_reference.py > stats_reference.txt
The numbers printed here are frozen into tests/unit/test_stats.cpp.
"""
import numpy as np
import mpmath as mp
from scipy import stats

mp.mp.dps = 40

def show(name, value):
    print(f"{name} = {value!r}")

# Shapiro-Wilk fixtures
sw12 = [2.1, 3.4, 1.9, 5.6, 4.4, 3.8, 2.9, 4.1, 3.3, 6.2, 2.7, 3.6]
r = stats.shapiro(sw12); show("sw12", (float(r.statistic), float(r.pvalue)))
sw5 = [1.0, 2.0, 2.5, 4.0, 9.0]
r = stats.shapiro(sw5); show("sw5", (float(r.statistic), float(r.pvalue)))
sw3 = [1.0, 2.0, 4.0]
r = stats.shapiro(sw3); show("sw3", (float(r.statistic), float(r.pvalue)))
sw7 = [0.3, -1.2, 0.8, 2.9, 0.1, -0.4, 1.7]
r = stats.shapiro(sw7); show("sw7", (float(r.statistic), float(r.pvalue)))
bimodal = [0.0 + 0.01 * i for i in range(10)] + [100.0 + 0.01 * i for i in range(10)]
r = stats.shapiro(bimodal); show("sw_bimodal", (float(r.statistic), float(r.pvalue)))
rng = np.random.default_rng(7)
sw60 = np.round(rng.exponential(size=60), 6).tolist()
print("sw60_data =", sw60)
r = stats.shapiro(sw60); show("sw60", (float(r.statistic), float(r.pvalue)))

# ANOVA
g = [[1, 2, 3], [2, 3, 4], [3, 4, 5]]
r = stats.f_oneway(*g); show("anova_hand", (float(r.statistic), float(r.pvalue)))
tk = [[24.5, 23.5, 26.4, 27.1, 29.9], [28.4, 34.2, 29.5, 32.2, 30.1], [26.1, 28.3, 24.3, 26.2, 27.8]]
r = stats.f_oneway(*tk); show("anova_tk", (float(r.statistic), float(r.pvalue)))
res = stats.tukey_hsd(*tk)
ci = res.confidence_interval(0.95)
for i in range(3):
    for j in range(i + 1, 3):
        show(f"tukey_bal_{i}{j}", (float(res.statistic[i, j]), float(res.pvalue[i, j]), float(ci.low[i, j]), float(ci.high[i, j])))
show("q_crit_3_12", float(stats.studentized_range.ppf(0.95, 3, 12)))
un = [[0.81, 0.84, 0.79, 0.88, 0.83, 0.85], [0.78, 0.75, 0.80, 0.77], [0.86, 0.90, 0.87, 0.91, 0.89]]
r = stats.f_oneway(*un); show("anova_un", (float(r.statistic), float(r.pvalue)))
res = stats.tukey_hsd(*un)
ci = res.confidence_interval(0.95)
for i in range(3):
    for j in range(i + 1, 3):
        show(f"tukey_un_{i}{j}", (float(res.statistic[i, j]), float(res.pvalue[i, j]), float(ci.low[i, j]), float(ci.high[i, j])))
for (q, k, df) in [(1.0, 3, 10), (3.5, 3, 12), (2.0, 5, 30), (4.0, 4, 60), (3.0, 2, 5), (0.5, 6, 200)]:
    show(f"ptukey_{q}_{k}_{df}", float(stats.studentized_range.cdf(q, k, df)))

# regression
x = list(range(1, 21))
y = [3.1, -0.4, 2.2, 1.0, 0.7, 2.9, -1.1, 0.2, 1.8, 0.9, 2.5, -0.6, 1.4, 0.3, 2.0, -0.2, 1.1, 2.6, -0.9, 1.2]
r = stats.linregress(x, y); show("reg_indep", (float(r.slope), float(r.intercept), float(r.rvalue), float(r.pvalue)))
x2 = [0.9, 1.3, 1.1, 2.0, 2.4, 1.7, 2.9, 3.3, 2.2, 3.8]
y2 = [0.61, 0.70, 0.66, 0.74, 0.80, 0.69, 0.83, 0.79, 0.75, 0.88]
r = stats.linregress(x2, y2); show("reg_pos", (float(r.slope), float(r.intercept), float(r.rvalue), float(r.pvalue)))

# t quantile
show("t975_12", float(stats.t.ppf(0.975, 12)))

# incomplete beta grid
print("ibeta_grid = [")
for a in [0.5, 1.0, 2.5, 7.0, 30.0]:
    for b in [0.5, 1.0, 3.0, 12.0, 80.0]:
        for xv in [0.001, 0.05, 0.3, 0.5, 0.77, 0.999]:
            v = mp.betainc(a, b, 0, xv, regularized=True)
            print(f"  {{{a}, {b}, {xv}, {mp.nstr(v, 20)}}},")
print("]")
