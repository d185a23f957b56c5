import sys
sys.path.insert(0, ".calib")
from sweep import run_case

if __name__ == "__main__":
    B = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.05,"rent":0.006,"price":0.015}
    run_case("B: lower rate vol, higher super vol", B)
    C = {"cpi":0.0025,"awe":0.008,"r":0.0012,"s":0.0004,"f":0.05,"rent":0.005,"price":0.014}
    run_case("C: B + wider wage dispersion", C)
