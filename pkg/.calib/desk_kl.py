import sys, time, math
import numpy as np
from housesim.cohort import SimulationSetup, MortalityTable, run_market_experiment
from housesim.econ import EconParams, GaussianShocks, MACRO_SHOCK_NAMES
from housesim.rules import RuleSet, preset_by_name
from housesim.metrics import policy_metrics

NAMES = MACRO_SHOCK_NAMES
def corr_matrix(pairs):
    m = np.eye(7)
    for (a,b),v in pairs.items():
        i,j = NAMES.index(a), NAMES.index(b)
        m[i,j] = m[j,i] = v
    return m

CORR = corr_matrix({("cpi","awe"):0.3, ("cpi","price"):0.2, ("awe","price"):0.3,
                    ("rent","price"):0.25, ("cpi","rent"):0.15, ("f","price"):0.2})

def evaluate(label, sigmas, corr=None, m=100, n=1000, seed=42, jobs=2,
             markets=("supply_constrained","equal_affordability"),
             policy_names=("benchmark","reduced_deposit","early_withdrawal","ew_full_withdrawal"),
             econ_params=None, discounting="real"):
    print(f"### {label}")
    policies = [preset_by_name(p) for p in policy_names]
    dep = GaussianShocks([sigmas[k] for k in NAMES], corr)
    for market in markets:
        setup = SimulationSetup(
            n_households=n, horizon=300, seed=seed, market=market,
            econ_params=econ_params or EconParams(), rules=RuleSet(), policies=policies,
            benchmark=policies[0], dependence=dep, mortality=MortalityTable.bundled_default(),
            discounting=discounting)
        t0=time.time()
        res = run_market_experiment(setup, m, jobs=jobs)
        bd = res.policies["benchmark"].diagnostics
        print(f"== {market} ({time.time()-t0:.0f}s) bench def={bd['defaults']} liq={bd['liquidations']}")
        for name in policy_names[1:]:
            pm = policy_metrics(res, name)
            rm = res.price_ratio(name).mean(axis=0)
            d = res.policies[name].diagnostics
            ga = " ".join(f"K{k}:{pm.groups[k].delta_probability*100:+.1f}" for k in (1,2,3,4,5))
            gs = " ".join(f"K{k}:{pm.groups[k].delta_security_relative*100:+.1f}" for k in (1,2,3,4,5))
            print(f" {name:20s} peak={rm.max():.3f}@{rm.argmax():3d} dA_pop={pm.groups[0].delta_probability*100:+.2f}pp "
                  f"dGp={pm.delta_gini_purchase_time*100:+.2f} dP={pm.groups[0].delta_age_years:+.2f}y "
                  f"dS_pop={pm.groups[0].delta_security_relative*100:+.2f}% def={d['defaults']} liq={d['liquidations']}")
            print(f"     dA: {ga} | dS: {gs}")

if __name__ == "__main__":
    K = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.014}
    evaluate("K: price 0.014", K)
    evaluate("L: K + correlations", K, corr=CORR)
