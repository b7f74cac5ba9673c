# %% [markdown]
# # How sure is a belief network about its own answer?
#
# A network learned from m cases gives P(H=h | e) as a single number, but the
# CPT entries are themselves uncertain.  Here we look at the spread of that
# answer on the two-feature naive Bayes benchmark.

# %%
import numpy as np

from beliefvar import OracleConfig, full_bundle, mc_estimates
from beliefvar.experiments import build_benchmark

net, queries = build_benchmark("nb2", 20)
q = queries[1]
print(q)

# %%
b = full_bundle(net, q)
print("plug-in answer   q1 =", round(b.q1, 4))
print("adjusted means   q3 = %.4f  q4 = %.4f" % (b.q3, b.q4))
print("variances  v1..v4 =", np.round(b.variances, 5))

# %% [markdown]
# Monte Carlo over the Dirichlet posterior is the reference.

# %%
r = mc_estimates(net, q, OracleConfig(k=100_000, seed=1))
print("oracle mean %.4f +- %.4f" % (r.q0, r.se_mean))
print("oracle var  %.5f +- %.5f" % (r.v0, r.se_var))

# %% [markdown]
# Plus or minus two standard deviations can spill outside [0, 1] at m=20.
# A beta with the same mean and variance gives a usable interval.

# %%
from scipy import stats

mean, var = b.q4, b.v4
n_eff = mean * (1 - mean) / var - 1
lo, hi = stats.beta(mean * n_eff, (1 - mean) * n_eff).ppf([0.025, 0.975])
print("P(H=0 | F1=0, F2=1) ~ %.3f, 95%% in [%.3f, %.3f]" % (mean, lo, hi))

# %% [markdown]
# More data, less spread.  The variance falls roughly like 1/m.

# %%
for m in (20, 100, 500):
    net_m, _ = build_benchmark("nb2", m)
    bm = full_bundle(net_m, q)
    print(f"m={m:4d}  q1={bm.q1:.4f}  sd={np.sqrt(bm.v2):.4f}  m*v2={m * bm.v2:.3f}")
