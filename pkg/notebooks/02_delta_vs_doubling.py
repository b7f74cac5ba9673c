# %% [markdown]
# # Two ways to get a variance
#
# The delta method linearises the query around the posterior mean and needs
# every partial derivative.  Doubling instead pairs each variable with an
# independent replicate sharing the same parameters, so one inference pass on
# the paired network returns E{q^2}.

# %%
import numpy as np

from beliefvar import Query, double_network, estimate_q2_v2, query_gradient, variance_v1
from beliefvar.experiments import build_benchmark, random_network, random_queries, run_timing_bench

net, queries = build_benchmark("diamond", 50)
q = Query({"D": "0"}, {"A": "1"})
g = query_gradient(net, q)
for n in net.names:
    print(n, np.round(g[n], 4).tolist())

# %%
print("delta    v1 =", variance_v1(net, q))
print("doubling v2 =", estimate_q2_v2(net, q)[1])

# %% [markdown]
# The paired network squares every domain, so D's two binary parents become
# two 4-valued parents and D itself has 4 values.

# %%
d = double_network(net)
print(d.tables["D"].shape, d.tables["D"].sum(axis=-1).min())

# %% [markdown]
# Which is cheaper depends on the query.  Small networks with fully observed
# features favour doubling; on a wide random network with few observed
# variables the doubled factors get huge and the delta method wins.

# %%
nb4, nb4_q = build_benchmark("nb4", 20)
big = random_network(37, seed=0)
rows = run_timing_bench([("nb4", nb4, nb4_q), ("random-37", big, random_queries(big, 20, seed=0))])
for r in rows:
    print(f"{r.label:10s} doubling/delta = {r.ratio:.2f}")
