import sys, time, math
import numpy as np
from housesim.cohort import SimulationSetup, MortalityTable, run_market_experiment
from housesim.econ import EconParams, GaussianShocks, MACRO_SHOCK_NAMES
from housesim.rules import RuleSet, preset_by_name
from housesim.metrics import policy_metrics

def evaluate(label, sigmas, m=100, n=1000, seed=42, jobs=2, markets=("supply_constrained",),
             policy_names=("benchmark","reduced_deposit","early_withdrawal","ew_full_withdrawal"),
             econ_params=None):
    print(f"### {label}")
    policies = [preset_by_name(p) for p in policy_names]
    dep = GaussianShocks([sigmas[k] for k in MACRO_SHOCK_NAMES])
    for market in markets:
        setup = SimulationSetup(
            n_households=n, horizon=300, seed=seed, market=market,
            econ_params=econ_params or EconParams(), rules=RuleSet(), policies=policies,
            benchmark=policies[0], dependence=dep, mortality=MortalityTable.bundled_default())
        t0=time.time()
        res = run_market_experiment(setup, m, jobs=jobs)
        bd = res.policies["benchmark"].diagnostics
        print(f"== {market} ({time.time()-t0:.0f}s) bench def={bd['defaults']} liq={bd['liquidations']}")
        for name in policy_names[1:]:
            pm = policy_metrics(res, name)
            rm = res.price_ratio(name).mean(axis=0)
            d = res.policies[name].diagnostics
            groups = " ".join(f"K{k}:{pm.groups[k].delta_probability*100:+.1f}" for k in (1,2,3,4,5))
            gs = " ".join(f"K{k}:{pm.groups[k].delta_security_relative*100:+.1f}" for k in (1,2,3,4,5))
            print(f" {name:20s} peak={rm.max():.3f}@{rm.argmax():3d} end={rm[-1]:.3f} "
                  f"dA_pop={pm.groups[0].delta_probability*100:+.2f}pp dGp={pm.delta_gini_purchase_time*100:+.2f} "
                  f"dP_pop={pm.groups[0].delta_age_years:+.2f}y dS_pop={pm.groups[0].delta_security_relative*100:+.2f}% def={d['defaults']} liq={d['liquidations']}")
            print(f"     dA by group: {groups}")
            print(f"     dS by group: {gs}")
    return res

if __name__ == "__main__":
    I = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.012}
    evaluate("I @ desk 100 scen, SC", I)
    import dataclasses
    matched = EconParams(super_return_mean=math.exp(0.01)-1.0)
    evaluate("I matched-super, SC", I, policy_names=("benchmark","early_withdrawal"), econ_params=matched)
