"""Cascade equations, initial values, dependence models and the salary process."""

import math

import numpy as np
import pytest

from housesim.econ import (
    EconParams,
    EmpiricalResample,
    GaussianShocks,
    ResidualDraw,
    ShockError,
    ZeroShocks,
    age_profile_growth,
    draw_residuals,
    init_economy,
    salary_step,
    step_economy,
    zero_residuals,
)

PARAMS = EconParams()


def zero_step(state, prev2=None, demand=0.0, params=PARAMS):
    prev2 = state.rent_growth if prev2 is None else prev2
    return step_economy(state, prev2, zero_residuals(0), demand, params)


# ---------------------------------------------------------------------------
# Initial state


def test_initial_rates_and_indices():
    s = init_economy(PARAMS)
    assert s.t == 0
    assert s.nominal_cash == pytest.approx(1.0435 ** 0.25 - 1.0, abs=1e-12)
    assert s.nominal_cash == pytest.approx(0.010702, abs=1e-6)
    assert s.borrow_rate == pytest.approx(1.0599 ** 0.25 - 1.0, abs=1e-12)
    assert s.super_return == pytest.approx(s.nominal_cash + 0.01)
    assert s.cpi_index == 1.0 and s.price_index == 1.0 and s.rent_index == 1.0 and s.awe_index == 1.0
    assert s.demand_growth == 0.0
    assert s.price_growth == pytest.approx(0.01)


def test_initial_state_consistent_with_cascade_identities():
    s = init_economy(PARAMS)
    # nominal cash and borrowing rates reproduce from the identities
    assert math.exp(s.real_cash + s.cpi_growth) - 1.0 == pytest.approx(s.nominal_cash, abs=1e-12)
    assert math.exp(s.spread + s.nominal_cash) - 1.0 == pytest.approx(s.borrow_rate, abs=1e-12)
    # initial spread sits inside the clamp band
    assert PARAMS.spread_floor <= s.spread <= PARAMS.spread_cap


def test_initial_growth_overrides():
    params = EconParams(price_growth_initial=0.05, cpi_growth_initial=0.0)
    s = init_economy(params)
    assert s.price_growth == 0.05
    assert s.cpi_growth == 0.0


# ---------------------------------------------------------------------------
# Cascade step


def test_price_growth_fixed_point_at_mean():
    s = init_economy(PARAMS)  # price growth starts at the 0.01 mean
    nxt = zero_step(s)
    assert nxt.price_growth == pytest.approx(0.01, abs=1e-15)


def test_price_growth_with_demand_term():
    s = init_economy(EconParams(price_growth_initial=0.03))
    nxt = zero_step(s, demand=0.05)
    # 0.01 + 0.6988 * 0.02 + 0.1293 * 0.05
    assert nxt.price_growth == pytest.approx(0.030441, abs=1e-9)


def test_spread_clamped_at_floor():
    s = init_economy(PARAMS)
    shocks = zero_residuals(0)
    shocks.eps_s = -0.01
    nxt = step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)
    assert nxt.spread == PARAMS.spread_floor
    shocks.eps_s = +0.05
    nxt = step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)
    assert nxt.spread == PARAMS.spread_cap


def test_real_cash_recursion_and_nominal_transform():
    # hand evaluation: rr(t) = 0.6080 * 0.004 = 0.002432, r_A = exp(rr + cpi) - 1
    params = EconParams(cpi_growth_initial=0.002, cpi_ar1=0.0, cpi_mean=0.002)
    s = init_economy(params)
    object.__setattr__(s, "real_cash", 0.004)
    nxt = zero_step(s, params=params)
    assert nxt.real_cash == pytest.approx(0.6080 * 0.004, abs=1e-12)
    assert nxt.nominal_cash == pytest.approx(math.exp(0.002432 + 0.002) - 1.0, abs=1e-12)


def test_nominal_rates_floored_at_zero():
    s = init_economy(PARAMS)
    shocks = zero_residuals(0)
    shocks.eps_r = -0.5
    nxt = step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)
    assert nxt.nominal_cash == 0.0
    assert nxt.borrow_rate >= 0.0


def test_indices_update_multiplicatively():
    s = init_economy(PARAMS)
    for _ in range(5):
        nxt = zero_step(s)
        assert nxt.price_index / s.price_index == pytest.approx(math.exp(nxt.price_growth), rel=1e-14)
        assert nxt.cpi_index / s.cpi_index == pytest.approx(math.exp(nxt.cpi_growth), rel=1e-14)
        assert nxt.rent_index / s.rent_index == pytest.approx(math.exp(nxt.rent_growth), rel=1e-14)
        s = nxt


def test_non_finite_shock_rejected():
    s = init_economy(PARAMS)
    shocks = zero_residuals(0)
    shocks.eps_price = float("nan")
    with pytest.raises(ShockError):
        step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)


def test_mean_reversion_from_any_start():
    # With zero shocks and no demand, every growth series converges to its
    # unconditional mean; price growth within 1e-6 after 60 quarters.
    for start in (-0.1, -0.02, 0.0, 0.055, 0.1):
        params = EconParams(price_growth_initial=start, rent_growth_initial=0.0)
        s = init_economy(params)
        prev2 = s.rent_growth
        for _ in range(60):
            nxt = zero_step(s, prev2=prev2, params=params)
            prev2 = s.rent_growth
            s = nxt
        assert abs(s.price_growth - 0.01) < 1e-6
        assert abs(s.cpi_growth - PARAMS.cpi_mean) < 1e-6
        assert abs(s.awe_growth - PARAMS.awe_mean) < 1e-6


def test_borrow_rate_changes_only_with_spread_or_cash():
    # Cascade dependency: holding shocks fixed, r_B moves iff s_B or r_A moves.
    s = init_economy(PARAMS)
    a = zero_step(s)
    # rent and price shocks do not touch the borrowing rate
    shocks = zero_residuals(0)
    shocks.eps_rent, shocks.eps_price = 0.02, -0.03
    b = step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)
    assert b.borrow_rate == a.borrow_rate
    # a spread shock does
    shocks = zero_residuals(0)
    shocks.eps_s = 0.002
    c = step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)
    assert c.borrow_rate != a.borrow_rate
    # a real-cash shock does
    shocks = zero_residuals(0)
    shocks.eps_r = 0.002
    d = step_economy(s, s.rent_growth, shocks, 0.0, PARAMS)
    assert d.borrow_rate != a.borrow_rate


def test_doubling_demand_coefficient_raises_price_growth():
    base = EconParams()
    doubled = EconParams(price_demand_coef=2 * base.price_demand_coef)
    s = init_economy(base)
    for demand in (0.01, 0.3, 2.0):
        low = zero_step(s, demand=demand, params=base)
        high = zero_step(s, demand=demand, params=doubled)
        assert high.price_growth > low.price_growth


def test_super_return_override_for_sensitivity_run():
    target = math.exp(0.01) - 1.0
    params = EconParams(super_return_mean=target)
    s = init_economy(params)
    assert s.super_return == pytest.approx(target)
    nxt = zero_step(s, params=params)
    assert nxt.super_return == pytest.approx(target)
    # default links super to the cash rate
    base = zero_step(init_economy(PARAMS))
    assert base.super_return == pytest.approx(base.nominal_cash + 0.01)


def test_rent_ecm_starts_nearly_balanced_and_stays_stable():
    # With all indices at 1 the long-run relation is almost exactly met,
    # so the no-shock rent path stays close to its mean and the index
    # stays positive over the full horizon.
    s = init_economy(PARAMS)
    prev2 = s.rent_growth
    for _ in range(300):
        nxt = zero_step(s, prev2=prev2)
        prev2 = s.rent_growth
        s = nxt
        assert s.rent_index > 0.0
        assert abs(s.rent_growth) < 0.05


# ---------------------------------------------------------------------------
# Salary process


def test_salary_growth_formula():
    salary, floored = salary_step(10_000.0, 1, 0.0, 0.0, 0.0, PARAMS)
    assert salary == pytest.approx(10_000.0 * math.exp(0.033091 - 0.001462 / 4.0), rel=1e-12)
    assert floored == 0


def test_age_profile_flattens_mid_career():
    t_flat = 4.0 * 0.033091 / 0.001462  # ~90.5 quarters
    assert age_profile_growth(math.floor(t_flat), PARAMS) > 0.0
    assert age_profile_growth(math.ceil(t_flat), PARAMS) < 0.0
    assert abs(age_profile_growth(90, PARAMS)) < 2e-4


def test_salary_floor_counts_hits():
    salary, floored = salary_step(100.0, 1, -2.0, 0.0, 0.0, PARAMS)
    assert salary == PARAMS.salary_floor
    assert floored == 1
    vec, floored = salary_step(np.array([100.0, 50_000.0]), 1, -2.0, 0.0, np.zeros(2), PARAMS)
    assert floored == 2  # -2 wage growth floors any salary


def test_salary_shocks_enter_growth_factor():
    base, _ = salary_step(10_000.0, 1, 0.01, 0.0, 0.0, PARAMS)
    shocked, _ = salary_step(10_000.0, 1, 0.01, 0.005, -0.002, PARAMS)
    ratio = shocked / base
    assert ratio == pytest.approx((1 + 0.01 + 0.003) / 1.01, rel=1e-12)


# ---------------------------------------------------------------------------
# Dependence models


def test_zero_model_draws_zeros():
    draw = draw_residuals(np.random.default_rng(0), 5, ZeroShocks())
    assert np.all(draw.macro_vector() == 0.0)
    assert draw.eps_salary_common == 0.0
    assert np.all(draw.eps_salary_idio == 0.0)


def test_same_seed_same_draw():
    model = GaussianShocks([0.01] * 7)
    a = draw_residuals(np.random.default_rng(1234), 10, model)
    b = draw_residuals(np.random.default_rng(1234), 10, model)
    assert np.array_equal(a.macro_vector(), b.macro_vector())
    assert np.array_equal(a.eps_salary_idio, b.eps_salary_idio)


def test_gaussian_salary_variance_split():
    sigmas = [0.0, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0]
    model = GaussianShocks(sigmas)
    rng = np.random.default_rng(99)
    commons, idios = [], []
    for _ in range(4000):
        d = model.draw(rng, 4)
        commons.append(d.eps_salary_common)
        idios.extend(d.eps_salary_idio)
        assert d.eps_salary_common == pytest.approx(d.eps_awe / math.sqrt(2.0))
    assert np.var(commons) == pytest.approx(0.02 ** 2 / 2, rel=0.1)
    assert np.var(idios) == pytest.approx(0.02 ** 2 / 2, rel=0.1)


def test_gaussian_correlation_applied():
    corr = np.array(
        [
            [1.0, 0.8, 0, 0, 0, 0, 0],
            [0.8, 1.0, 0, 0, 0, 0, 0],
            [0, 0, 1.0, 0, 0, 0, 0],
            [0, 0, 0, 1.0, 0, 0, 0],
            [0, 0, 0, 0, 1.0, 0, 0],
            [0, 0, 0, 0, 0, 1.0, 0],
            [0, 0, 0, 0, 0, 0, 1.0],
        ]
    )
    model = GaussianShocks([0.01] * 7, corr)
    rng = np.random.default_rng(5)
    draws = np.array([model.draw(rng, 0).macro_vector() for _ in range(6000)])
    sample_corr = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert sample_corr == pytest.approx(0.8, abs=0.05)


def test_empirical_resample_support(tmp_path):
    path = tmp_path / "resid.csv"
    path.write_text(
        "cpi,awe,r,s,f,rent,price\n"
        "0.001,0.002,0.0,0.0001,0.01,0.003,0.004\n"
        "-0.001,-0.002,0.0,-0.0001,-0.01,-0.003,-0.004\n"
    )
    model = EmpiricalResample.from_csv(path)
    rng = np.random.default_rng(3)
    rows = model.residuals
    for _ in range(50):
        d = model.draw(rng, 3)
        assert any(np.allclose(d.macro_vector(), row) for row in rows)
        # idiosyncratic draws come from the wage column at half variance
        allowed = {round(v, 12) for v in rows[:, 1] / math.sqrt(2.0)}
        assert {round(v, 12) for v in d.eps_salary_idio} <= allowed


def test_empirical_resample_missing_column(tmp_path):
    path = tmp_path / "resid.csv"
    path.write_text("cpi,awe,r,s,f,rent\n0,0,0,0,0,0\n")
    with pytest.raises(ValueError, match="price"):
        EmpiricalResample.from_csv(path)


def test_residual_draw_validation():
    draw = zero_residuals(3)
    draw.eps_salary_idio[1] = np.inf
    with pytest.raises(ShockError):
        draw.validate()
