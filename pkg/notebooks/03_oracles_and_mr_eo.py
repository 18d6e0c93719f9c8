# %% [markdown]
# # Closed forms and the MR-EO threshold search
#
# The oracle functions describe what the estimators converge to for a given
# population. We compare them with a direct simulation, then follow MR-EO
# through its iterations on one dataset.

# %%
import math

import numpy as np

from divw.data import PopulationParams
from divw.estimators import divw, ivw
from divw.oracles import asymptotic_variance, ivw_abias, population_strength, q_lambda, theorem31_limit
from divw.selection import mr_eo, sqrt_two_log_p
from divw.simulation import case_config, gen_summary_level, population_params

# %% [markdown]
# ## IVW bias and dIVW variance at p = 50

# %%
r = np.random.default_rng(1)
p = 50
gamma = r.normal(0, 0.2, p)
pp = PopulationParams(gamma, np.full(p, 0.02), np.full(p, 0.03), np.full(p, 0.02), 0.4)
print(population_strength(pp))

draws = [gen_summary_level(pp, r) for _ in range(5000)]
b_ivw = np.array([ivw(d) for d in draws])
b_divw = np.array([divw(d) for d in draws])
print("IVW mean", b_ivw.mean(), "limit", pp.beta0 + ivw_abias(pp))
print("dIVW SD", b_divw.std(), "sqrt(V)", math.sqrt(asymptotic_variance(pp)))

# %% [markdown]
# ## Screening probabilities
#
# ``q_lambda`` gives the chance that each SNP survives screening. Screened
# IVW converges to a q-weighted ratio that is still biased when the selected
# SNPs are weak.

# %%
for lam in (0.0, 1.0, 2.0, 3.0):
    st = population_strength(pp, lam)
    print(f"lambda={lam:.1f} p_lambda={st.p_lambda:6.1f} kappa_lambda={st.kappa_lambda:7.2f} "
          f"IVW limit={theorem31_limit(pp, lam):.4f}")
print(q_lambda(pp, 2.0)[:5])

# %% [markdown]
# ## MR-EO on a case-4 dataset
#
# Starting from sqrt(2 log p), each iteration re-estimates beta and then picks
# the threshold with the smallest estimated variance.

# %%
data = gen_summary_level(population_params(case_config("case4")), np.random.default_rng(7))
sel, trace = mr_eo(data)
print("start:", sqrt_two_log_p(data.p))
for it in trace.iterations:
    print(it)
print("final lambda", trace.final_lambda, "selected", sel.size, "stop:", trace.stop_reason)
