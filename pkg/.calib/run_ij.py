import sys
import numpy as np
sys.path.insert(0, ".calib")
from sweep import run_case

NAMES = ("cpi","awe","r","s","f","rent","price")
def corr_matrix(pairs):
    m = np.eye(7)
    for (a,b),v in pairs.items():
        i,j = NAMES.index(a), NAMES.index(b)
        m[i,j] = m[j,i] = v
    return m

if __name__ == "__main__":
    I = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.012}
    run_case("I: F rates + price 0.012", I)
    pairs = {("cpi","awe"):0.3, ("cpi","r"):0.15, ("cpi","price"):0.2, ("cpi","rent"):0.2,
             ("awe","price"):0.25, ("awe","rent"):0.2, ("rent","price"):0.3,
             ("f","price"):0.2, ("f","awe"):0.1}
    C = corr_matrix(pairs)
    print("chol ok:", np.all(np.linalg.eigvalsh(C) > 0))
    import sweep
    from housesim.econ import GaussianShocks, MACRO_SHOCK_NAMES
    # patch run_case to pass correlation by wrapping GaussianShocks
    orig = GaussianShocks
    import housesim.econ as econmod
    class WithCorr(orig):
        def __init__(self, sigmas, correlation=None):
            super().__init__(sigmas, C)
    sweep.GaussianShocks = WithCorr
    run_case("J: I + correlated shocks", I)
