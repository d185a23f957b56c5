import sys, time
import numpy as np
from housesim.cohort import SimulationSetup, MortalityTable, run_market_experiment
from housesim.econ import EconParams, GaussianShocks, MACRO_SHOCK_NAMES
from housesim.rules import RuleSet, preset_by_name
from housesim.metrics import policy_metrics

def run_case(label, sigmas, m=24, n=1000, seed=42, jobs=2, econ_params=None,
             policy_names=("benchmark","reduced_deposit","early_withdrawal","ew_full_withdrawal")):
    print(f"### {label}: {sigmas}")
    policies = [preset_by_name(p) for p in policy_names]
    dep = GaussianShocks([sigmas[k] for k in MACRO_SHOCK_NAMES])
    t0 = time.time()
    for market in ("supply_constrained", "equal_affordability"):
        setup = SimulationSetup(
            n_households=n, horizon=300, seed=seed, market=market,
            econ_params=econ_params or EconParams(), rules=RuleSet(), policies=policies,
            benchmark=policies[0], dependence=dep, mortality=MortalityTable.bundled_default())
        res = run_market_experiment(setup, m, jobs=jobs)
        bench_diag = res.policies["benchmark"].diagnostics
        print(f"  == {market}  bench: def={bench_diag['defaults']} liq={bench_diag['liquidations']}")
        for name in policy_names[1:]:
            pm = policy_metrics(res, name)
            ratio_mean = res.price_ratio(name).mean(axis=0)
            d = res.policies[name].diagnostics
            print(f"  {name:20s} peak={ratio_mean.max():.3f}@{ratio_mean.argmax():3d} end={ratio_mean[-1]:.3f} "
                  f"dA_pop={pm.groups[0].delta_probability*100:+.2f}pp dA_K1={pm.groups[1].delta_probability*100:+.2f}pp "
                  f"dP_pop={pm.groups[0].delta_age_years:+.2f}y dGp={pm.delta_gini_purchase_time*100:+.2f} "
                  f"dS_pop={pm.groups[0].delta_security_relative*100:+.2f}% def={d['defaults']} liq={d['liquidations']}")
    print(f"  [{time.time()-t0:.0f}s]")

if __name__ == "__main__":
    A = {"cpi":0.003,"awe":0.006,"r":0.002,"s":0.0006,"f":0.035,"rent":0.006,"price":0.017}
    run_case("A", A)
