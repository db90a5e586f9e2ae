"""Smoke test for the pyweathercat extension.

Build and install with
    pip install --no-build-isolation -e crates/py
then run
    python python/smoke_test.py
"""

import math

import pyweathercat as w

seasonal = w.FourCoeffs(7.9733, 0.0008223, -5.8796, -12.866)
vol = w.FourCoeffs(3.0, 0.0, 0.5, 0.5)
tc = w.GammaTimeChange(1.5, 1.0, 0.2)
model = w.ModelParams(0.25, 5.0, seasonal, vol, tc, horizon=400.0)

assert abs(seasonal.eval(0.0) - (-4.8927)) < 1e-12
assert w.k1(0.0, 0.25, seasonal) == 0.0

phi = w.charfun_t(0.3, 30.0, model)
assert abs(w.charfun_t(0.0, 30.0, model) - 1) < 1e-10
assert abs(w.charfun_t(-0.3, 30.0, model) - phi.conjugate()) < 1e-12

contract = w.ContractSpec(30, 120.0, 40.0, rate_r=0.03)
theta = w.solve_theta(model, 0.03, 30.0)["theta"]
lo, hi = tc.admissible_interval()
assert lo < theta < hi

priced = w.price_strangle(contract, model)
assert abs(priced["theta"] - theta) < 1e-12
mc, se = w.mc_price_cat(contract, model, theta, n_paths=20_000, seed=1)
assert abs(priced["price"] - mc) <= 3 * se, (priced["price"], mc, se)

zero = w.price_strangle(w.ContractSpec(30, 120.0, 40.0, d1=0.0, d2=0.0), model)
assert zero["price"] == 0.0

path = w.simulate_path(model, 3000, seed=4)
assert path == w.simulate_path(model, 3000, seed=4)
assert len(path) == 3001
fit = w.fit_seasonal(path)
assert len(fit["coefficients"]) == 4
alpha = w.fit_alpha(fit["residuals"])["alpha"]
assert 0.15 < alpha < 0.35, alpha

report = w.calibrate(path, start="2010-01-01")
assert report["n"] == 3001
assert report["timechange"]["a"] > 0

ks = w.ks_normality([math.sin(i) for i in range(100)], reference="raw")
assert ks["n"] == 100

try:
    w.GammaTimeChange(-1.0, 1.0, 0.0)
except w.WeathercatError:
    pass
else:
    raise AssertionError("negative shape accepted")

print(f"price {priced['price']:.6f} (MC {mc:.6f} +/- {se:.6f}), theta {theta:.6f}, alpha {alpha:.4f}")
print("smoke test passed")
