import sys
sys.path.insert(0, ".calib")
from sweep import run_case

if __name__ == "__main__":
    A2 = {"cpi":0.003,"awe":0.006,"r":0.002,"s":0.0006,"f":0.035,"rent":0.006,"price":0.017}
    run_case("A2: set A under hybrid consumption", A2)
    D = {"cpi":0.003,"awe":0.006,"r":0.002,"s":0.0006,"f":0.02,"rent":0.006,"price":0.017}
    run_case("D: A with f=0.02", D)
    E = {"cpi":0.003,"awe":0.006,"r":0.002,"s":0.0006,"f":0.045,"rent":0.006,"price":0.017}
    run_case("E: A with f=0.045", E)
