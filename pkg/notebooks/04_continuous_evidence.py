# %% [markdown]
# # Continuous children: Student-t predictives
#
# A continuous variable with a linear-Gaussian CPT and a normal/inverse
# chi-square prior has a Student-t predictive.  In a doubled network the two
# replicates under the same parent configuration share their regression
# parameters, so their joint predictive is a correlated bivariate t.

# %%
import numpy as np

from beliefvar import RegressionFamily, predictive_st1, predictive_st2_doubled, regression_posterior_update

rng = np.random.default_rng(0)
prior = RegressionFamily(mu=[0.0, 0.0], Psi=np.eye(2), nu=3.0, tau2=1.0)
x = rng.normal(size=30)
y = 1.5 + 0.8 * x + 0.5 * rng.normal(size=30)
post = regression_posterior_update(prior, np.column_stack([np.ones(30), x]), y)
print(post)

# %%
st1 = predictive_st1(post, [1.0])
print("eta %.3f  omega2 %.4f  nu %g" % (st1.eta[0], st1.omega2, st1.nu))
print("density at 2.3:", st1.pdf(2.3))

# %%
st2 = predictive_st2_doubled(post, [1.0], [1.0], same_config=True)
cov = st2.covariance()
print("replicate covariance\n", cov)
print("correlation", cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1]))

# %% [markdown]
# The correlation is the parameter uncertainty; it fades as data accumulate.

# %%
for n in (5, 50, 500):
    xs = rng.normal(size=n)
    ys = 1.5 + 0.8 * xs + 0.5 * rng.normal(size=n)
    fam = regression_posterior_update(prior, np.column_stack([np.ones(n), xs]), ys)
    c = predictive_st2_doubled(fam, [1.0], [1.0], same_config=True).covariance()
    print(n, round(c[0, 1] / c[0, 0], 4))
