import numpy as np
import housesim.household as H
from housesim.cohort import SimulationSetup, MortalityTable, draw_survival_paths, draw_scenario_residuals, make_cohort
from housesim.econ import EconParams, GaussianShocks, MACRO_SHOCK_NAMES, init_economy, step_economy, with_demand_growth
from housesim.rules import RuleSet, preset_by_name

if __name__ == "__main__":
    sig = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.017}
    dep = GaussianShocks([sig[k] for k in MACRO_SHOCK_NAMES])
    pol = preset_by_name("benchmark")
    setup = SimulationSetup(n_households=1000, horizon=300, seed=42, market="equal_affordability",
        econ_params=EconParams(), rules=RuleSet(), policies=[pol], benchmark=pol,
        dependence=dep, mortality=MortalityTable.bundled_default())
    allev = []
    for sid in range(8):
        death = draw_survival_paths(setup, sid); draws = draw_scenario_residuals(setup, sid)
        hh = make_cohort(setup, death)
        econ = init_economy(setup.econ_params); prev2 = econ.rent_growth; prev_econ = econ
        n_prev=0; eta_prev=0
        prev_flows = None
        for t in range(300):
            if t>0:
                new = step_economy(econ, prev2, draws[t-1], econ.demand_growth, setup.econ_params)
                prev2 = econ.rent_growth; prev_econ, econ = econ, new
                si=(econ.awe_growth - draws[t-1].eps_awe, draws[t-1].eps_salary_common, draws[t-1].eps_salary_idio, setup.econ_params)
            else: si=None
            owner_before = hh.owner.copy(); tp_before = hh.purchase_quarter.copy()
            loan_before = hh.loan.copy(); pension_before = hh.pension.copy()
            flows, diag = H.advance_quarter(hh, econ, prev_econ, pol, setup.benchmark, setup.rules, si)
            liq = owner_before & ~hh.owner & (hh.purchase_quarter==-1) & hh.alive(t) & ~hh.defaulted
            for i in np.flatnonzero(liq):
                allev.append(dict(sid=sid, t=t, g=int(hh.group[i])+1, tp=int(tp_before[i]),
                                  owned=t-int(tp_before[i]), loan=float(loan_before[i]),
                                  F=float(pension_before[i]),
                                  I=float(prev_flows.disposable_income[i]) if prev_flows else 0,
                                  Hc=float(prev_flows.housing_cost[i]) if prev_flows else 0,
                                  B=float(prev_flows.pension_benefit[i]) if prev_flows else 0,
                                  G=float(prev_flows.state_pension[i]) if prev_flows else 0,
                                  C=float(prev_flows.consumption[i]) if prev_flows else 0))
            nh = int(np.count_nonzero(hh.owner & hh.active(t)))
            eta = max(0, nh-n_prev); d = float(np.log1p(eta)-np.log1p(eta_prev)) if t>0 else 0.0
            econ = with_demand_growth(econ, d); n_prev=nh; eta_prev=eta
            prev_flows = flows
    print(f"total liq over 8 scenarios: {len(allev)}")
    import collections
    print("by group:", collections.Counter(e["g"] for e in allev))
    print("by phase:", collections.Counter("retired" if e["t"]>=168 else ("loan" if e["t"]<e["tp"]+120 else "paid")  for e in allev))
    print("owned quarters pct:", np.percentile([e["owned"] for e in allev],[10,50,90]).round(0) if allev else "-")
    print("purchase quarter pct:", np.percentile([e["tp"] for e in allev],[10,50,90]).round(0) if allev else "-")
    for e in allev[:12]:
        print({k: (round(v) if isinstance(v,float) else v) for k,v in e.items()})
