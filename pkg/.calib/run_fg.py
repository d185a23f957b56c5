import sys
sys.path.insert(0, ".calib")
from sweep import run_case

if __name__ == "__main__":
    F = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.017}
    run_case("F: A with lower rate vol", F)
    G = {"cpi":0.003,"awe":0.006,"r":0.002,"s":0.0006,"f":0.035,"rent":0.006,"price":0.015}
    run_case("G: A with price vol 0.015", G)
    H = {"cpi":0.003,"awe":0.006,"r":0.0012,"s":0.0004,"f":0.035,"rent":0.006,"price":0.015}
    run_case("H: lower rate vol + price 0.015", H)
