import sys, math
sys.path.insert(0, ".calib")
import numpy as np
from desk_kl import evaluate, CORR
from housesim.econ import EconParams

if __name__ == "__main__":
    L = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.014}
    matched = EconParams(super_return_mean=math.exp(0.01)-1.0)
    evaluate("L matched-super seed42", L, corr=CORR, markets=("supply_constrained",),
             policy_names=("benchmark","early_withdrawal"), econ_params=matched)
    evaluate("L seed 7", L, corr=CORR, markets=("supply_constrained",), seed=7,
             policy_names=("benchmark","reduced_deposit","early_withdrawal"))
    evaluate("L seed 99", L, corr=CORR, markets=("supply_constrained",), seed=99,
             policy_names=("benchmark","reduced_deposit","early_withdrawal"))
