# %% [markdown]
# # Learning a network and tracking its uncertainty
#
# Start from a flat prior on a small alarm-style network, feed it sampled
# cases, and watch one diagnostic query settle.

# %%
import numpy as np

from beliefvar import CompleteData, Network, Query, Variable, full_bundle, posterior_update
from beliefvar.inference import evaluate_query
from beliefvar.network import TableNetwork

yn = ("no", "yes")
variables = [Variable(n, yn) for n in ("Burglary", "Quake", "Alarm", "Call")]
parents = {"Alarm": ("Burglary", "Quake"), "Call": ("Alarm",)}
truth = {
    "Burglary": np.array([0.9, 0.1]),
    "Quake": np.array([0.8, 0.2]),
    "Alarm": np.array([[[0.95, 0.05], [0.7, 0.3]], [[0.1, 0.9], [0.05, 0.95]]]),
    "Call": np.array([[0.9, 0.1], [0.2, 0.8]]),
}
prior = Network(variables, parents, {n: np.ones_like(t) for n, t in truth.items()})

# %%
def sample(n, rng):
    out = np.zeros((n, 4), dtype=int)
    for i in range(n):
        b = rng.random() < truth["Burglary"][1]
        e = rng.random() < truth["Quake"][1]
        a = rng.random() < truth["Alarm"][int(b), int(e), 1]
        c = rng.random() < truth["Call"][int(a), 1]
        out[i] = (b, e, a, c)
    return out


rng = np.random.default_rng(5)
q = Query({"Burglary": "yes"}, {"Call": "yes"})
exact = evaluate_query(TableNetwork(variables, parents, truth), None, q)
print("true answer", round(exact, 4))

# %%
net = prior
seen = 0
for batch in (20, 80, 400, 2000):
    net = posterior_update(net, CompleteData.from_indices(net, sample(batch, rng)))
    seen += batch
    b = full_bundle(net, q)
    print(f"n={seen:5d}  q1={b.q1:.4f}  q4={b.q4:.4f}  sd={np.sqrt(b.v4):.4f}")
