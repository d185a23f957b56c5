import sys, time
import numpy as np
from housesim.cohort import SimulationSetup, MortalityTable, run_market_experiment
from housesim.econ import EconParams, GaussianShocks, MACRO_SHOCK_NAMES
from housesim.rules import RuleSet, preset_by_name
from housesim.metrics import policy_metrics, market_report

def run_case(sigmas, m=24, n=1000, markets=("supply_constrained","equal_affordability"),
             policy_names=("benchmark","reduced_deposit","early_withdrawal"), seed=42, jobs=2,
             econ_params=None):
    policies = [preset_by_name(p) for p in policy_names]
    dep = GaussianShocks([sigmas[k] for k in MACRO_SHOCK_NAMES])
    out = {}
    for market in markets:
        setup = SimulationSetup(
            n_households=n, horizon=300, seed=seed, market=market,
            econ_params=econ_params or EconParams(), rules=RuleSet(), policies=policies,
            benchmark=policies[0], dependence=dep,
            mortality=MortalityTable.bundled_default(),
        )
        out[market] = run_market_experiment(setup, m, jobs=jobs)
    return out

def summarize(results):
    for market, res in results.items():
        print(f"== {market}")
        for name in res.policies:
            if name == "benchmark":
                d = res.policies[name].diagnostics
                print(f"  benchmark: defaults={d['defaults']} liq={d['liquidations']}")
                continue
            pm = policy_metrics(res, name)
            ratio_mean = res.price_ratio(name).mean(axis=0)
            peak = ratio_mean.max(); peak_t = ratio_mean.argmax()
            end = ratio_mean[-1]
            d = res.policies[name].diagnostics
            print(f"  {name:18s} peak={peak:.3f}@{peak_t:3d} end={end:.3f} "
                  f"dA_pop={pm.groups[0].delta_probability*100:+.2f}pp dA_K1={pm.groups[1].delta_probability*100:+.2f}pp "
                  f"dP_pop={pm.groups[0].delta_age_years:+.2f}y dGp={pm.delta_gini_purchase_time*100:+.2f} "
                  f"dS_pop={pm.groups[0].delta_security_relative*100:+.2f}% defaults={d['defaults']} liq={d['liquidations']}")

if __name__ == "__main__":
    base = {"cpi":0.003,"awe":0.006,"r":0.002,"s":0.0006,"f":0.035,"rent":0.006,"price":0.017}
    t0=time.time()
    print("### case A: base sigmas")
    summarize(run_case(base))
    print(f"[{time.time()-t0:.0f}s]")
