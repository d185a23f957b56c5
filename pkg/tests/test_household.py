"""Household quarter updates: accrual, purchase, amortization, exits."""

import dataclasses
import math

import numpy as np
import pytest

from housesim.econ import EconParams, EconState, init_economy
from housesim.household import (
    Households,
    accrue,
    advance_quarter,
    amortize,
    annuity_payment,
    check_default,
    liquidate_if_broke,
    try_purchase,
)
from housesim.rules import PolicyConfig, RuleSet, preset_by_name, property_transfer_tax

RULES = RuleSet()
BENCH = preset_by_name("benchmark")


def one_household(**overrides) -> Households:
    defaults = dict(
        group=np.array([2]),
        target_price0=np.array([650_000.0]),
        salary0=np.array([12_625.0]),
        death_quarter=np.array([300]),
    )
    hh = Households(**defaults)
    for key, value in overrides.items():
        getattr(hh, key)[:] = value
    return hh


def econ_at(t=1, price_index=1.0, rent_index=1.0, cpi_index=1.0, borrow_rate=0.015,
            nominal_cash=0.01, super_return=0.02) -> EconState:
    base = init_economy(EconParams())
    return dataclasses.replace(
        base, t=t, price_index=price_index, rent_index=rent_index, cpi_index=cpi_index,
        borrow_rate=borrow_rate, nominal_cash=nominal_cash, super_return=super_return,
    )


# ---------------------------------------------------------------------------
# Accrual


def test_accrue_zero_balances_stay_zero():
    hh = one_household()
    accrue(hh, 0.01, 0.02, 1, RULES)
    assert hh.savings_acc[0] == 0.0
    assert hh.pension_acc[0] == 0.0


def test_accrue_savings_below_tax_threshold():
    hh = one_household(savings=10_000.0, salary=3_000.0)
    accrue(hh, 0.01, 0.0, 10, RULES)
    assert hh.savings_acc[0] == pytest.approx(10_100.0)


def test_accrue_pension_with_return_tax():
    hh = one_household(pension=100_000.0)
    accrue(hh, 0.0, 0.02, 10, RULES)
    assert hh.pension_acc[0] == pytest.approx(100_000.0 * 1.02 - 300.0)


def test_accrue_pension_untaxed_after_retirement():
    hh = one_household(pension=100_000.0)
    accrue(hh, 0.0, 0.02, 200, RULES)
    assert hh.pension_acc[0] == pytest.approx(102_000.0)


# ---------------------------------------------------------------------------
# Annuity and amortization


def test_annuity_payment_matches_hand_value():
    # 480,000 at 1.5%/quarter over 120 quarters
    assert annuity_payment(480_000.0, 0.015, 120) == pytest.approx(8_648.88, abs=0.01)


def test_annuity_zero_rate_limit():
    assert annuity_payment(120_000.0, 0.0, 120) == pytest.approx(1_000.0)


def test_zero_loan_pays_nothing():
    hh = one_household()
    payment = amortize(hh, 0.015, 5, RULES.loan_term)
    assert payment[0] == 0.0


def brute_force_schedule(loan, rates, term):
    """Oracle: quarter-by-quarter balance recursion with re-levelled payments."""
    balance = loan
    payments = []
    for q in range(term):
        rate = rates[q]
        remaining = term - q
        if rate > 0:
            payment = balance * rate / (1.0 - (1.0 + rate) ** (-remaining))
        else:
            payment = balance / remaining
        balance = balance * (1.0 + rate) - payment
        payments.append(payment)
    return payments, balance


def test_amortization_oracle_constant_rates():
    rng = np.random.default_rng(2024)
    for _ in range(1_000):
        loan = rng.uniform(10_000.0, 2_000_000.0)
        rate = rng.uniform(0.0, 0.04)
        term = int(rng.integers(4, 160))
        _, balance = brute_force_schedule(loan, [rate] * term, term)
        assert abs(balance) < 1e-4

        hh = one_household(owner=True, purchase_quarter=0, loan=loan)
        for t in range(term):
            amortize(hh, rate, t, term)
        assert abs(hh.loan[0]) < 1e-4


def test_amortization_constant_payments_under_constant_rate():
    hh = one_household(owner=True, purchase_quarter=0, loan=480_000.0)
    payments = [amortize(hh, 0.015, t, 120)[0] for t in range(120)]
    assert max(payments) - min(payments) < 1e-6
    assert hh.loan[0] == pytest.approx(0.0, abs=1e-6)


def test_amortization_time_varying_rates_terminates():
    rng = np.random.default_rng(7)
    hh = one_household(owner=True, purchase_quarter=0, loan=700_000.0)
    for t in range(120):
        amortize(hh, float(rng.uniform(0.0, 0.03)), t, 120)
    assert hh.loan[0] == pytest.approx(0.0, abs=1e-6)


def test_amortization_matches_oracle_payments():
    hh = one_household(owner=True, purchase_quarter=0, loan=480_000.0)
    rng = np.random.default_rng(11)
    rates = rng.uniform(0.001, 0.03, 120)
    expected, _ = brute_force_schedule(480_000.0, rates, 120)
    got = [amortize(hh, rates[t], t, 120)[0] for t in range(120)]
    assert np.allclose(got, expected, atol=1e-6)


def test_no_payment_after_term_ends():
    hh = one_household(owner=True, purchase_quarter=0, loan=0.0)
    assert amortize(hh, 0.015, 121, 120)[0] == 0.0


# ---------------------------------------------------------------------------
# Purchase decision


def required_outlay(policy, price):
    return (policy.deposit_rate + policy.buffer_rate) * price + property_transfer_tax(price)


def required_income(policy, price, rate, t=1, rules=RULES):
    """Gross income whose non-consumed share meets the reference repayment."""
    from housesim.rules import consumption_share

    repayment = annuity_payment((1 - policy.deposit_rate) * price, rate, rules.loan_term)
    return repayment / (1.0 - consumption_share(t, rules))


def test_purchase_at_exact_thresholds_weak_inequalities():
    econ = econ_at()
    price = 650_000.0
    need = required_outlay(BENCH, price)
    income = required_income(BENCH, price, econ.borrow_rate) * (1 + 1e-12)
    hh = one_household(savings_acc=need)
    bought, from_savings, from_pension, _ = try_purchase(
        hh, econ, np.array([income]), BENCH, BENCH, RULES, 1
    )
    assert bought[0]
    assert hh.owner[0]
    assert hh.purchase_quarter[0] == 1
    assert hh.loan[0] == pytest.approx(0.80 * price)
    assert from_pension[0] == 0.0
    assert from_savings[0] == pytest.approx(need)


def test_no_purchase_below_deposit_threshold():
    econ = econ_at()
    need = required_outlay(BENCH, 650_000.0)
    hh = one_household(savings_acc=need - 1.0)
    bought, *_ = try_purchase(hh, econ, np.array([1e9]), BENCH, BENCH, RULES, 1)
    assert not bought[0]
    assert not hh.owner[0]


def test_no_purchase_below_income_threshold():
    econ = econ_at()
    income = required_income(BENCH, 650_000.0, econ.borrow_rate)
    hh = one_household(savings_acc=1e9)
    bought, *_ = try_purchase(hh, econ, np.array([income * 0.999]), BENCH, BENCH, RULES, 1)
    assert not bought[0]


def test_literal_income_test_flag():
    # With the screen disabled, bare disposable income against the
    # reference repayment is enough.
    rules = dataclasses.replace(RULES, purchase_test_net_of_consumption=False)
    econ = econ_at()
    price = 650_000.0
    repayment = annuity_payment(0.80 * price, econ.borrow_rate, rules.loan_term)
    hh = one_household(savings_acc=required_outlay(BENCH, price))
    bought, *_ = try_purchase(
        hh, econ, np.array([repayment * (1 + 1e-12)]), BENCH, BENCH, rules, 1
    )
    assert bought[0]


def test_ew_purchase_with_exact_savings_and_large_pension():
    # With an ample pension balance, savings only need the minimum
    # contribution, the buffer and the transfer tax.
    ew = preset_by_name("ew_full_withdrawal")
    econ = econ_at()
    price = 650_000.0
    need = required_outlay(ew, price) - 0.15 * price
    hh = one_household(savings_acc=need, pension_acc=5_000_000.0)
    bought, from_savings, from_pension, _ = try_purchase(
        hh, econ, np.array([1e9]), ew, BENCH, RULES, 3
    )
    assert bought[0]
    assert from_pension[0] == pytest.approx(0.15 * price)
    assert from_savings[0] == pytest.approx(need)
    assert hh.loan[0] == pytest.approx(0.80 * price)


def test_purchase_conservation_identity():
    ew = preset_by_name("early_withdrawal")
    econ = econ_at()
    rng = np.random.default_rng(3)
    n = 500
    hh = Households(
        group=np.zeros(n, dtype=int),
        target_price0=rng.uniform(200_000, 1_200_000, n),
        salary0=np.full(n, 15_000.0),
        death_quarter=np.full(n, 300),
    )
    hh.savings_acc = rng.uniform(0.0, 500_000.0, n)
    hh.pension_acc = rng.uniform(0.0, 400_000.0, n)
    income = rng.uniform(0.0, 30_000.0, n)
    bought, from_savings, from_pension, tax = try_purchase(
        hh, econ, income, ew, BENCH, RULES, 10
    )
    price = hh.target_price0 * econ.price_index
    need = 0.21 * price + property_transfer_tax(price)
    assert np.allclose(
        np.where(bought, from_savings + from_pension, 0.0),
        np.where(bought, need, 0.0),
        atol=1e-6,
    )
    assert np.all(from_savings >= 0) and np.all(from_pension >= 0)


def test_restricted_policy_falls_back_to_benchmark_terms():
    rd = dataclasses.replace(preset_by_name("reduced_deposit"), access_rule="below_median_income")
    econ = econ_at()
    price = 300_000.0
    rd_need = required_outlay(rd, price)
    # enough for the reduced deposit but not the standard one
    hh = one_household(target_price0=price, savings_acc=rd_need)
    high_income = np.array([25_000.0])  # above the 18,148 median: benchmark terms
    bought, *_ = try_purchase(hh, econ, high_income, rd, BENCH, RULES, 1)
    assert not bought[0]
    hh = one_household(target_price0=price, savings_acc=rd_need)
    low_income = np.array([15_000.0])   # eligible and passes the income screen
    assert 15_000.0 > required_income(rd, price, econ.borrow_rate)
    bought, *_ = try_purchase(hh, econ, low_income, rd, BENCH, RULES, 1)
    assert bought[0]


def test_dead_households_never_purchase():
    econ = econ_at(t=10)
    hh = one_household(savings_acc=1e9, death_quarter=5)
    bought, *_ = try_purchase(hh, econ, np.array([1e9]), BENCH, BENCH, RULES, 10)
    assert not bought[0]


# ---------------------------------------------------------------------------
# Liquidation and default


def test_liquidation_returns_equity_and_resets_tenure():
    econ = econ_at(price_index=700_000.0 / 650_000.0)
    hh = one_household(owner=True, purchase_quarter=0, loan=400_000.0, savings_acc=-5_000.0)
    liquidated = liquidate_if_broke(hh, econ, 1)
    assert liquidated[0]
    assert hh.savings_acc[0] == pytest.approx(295_000.0)
    assert not hh.owner[0]
    assert hh.loan[0] == 0.0
    assert hh.purchase_quarter[0] == -1


def test_no_liquidation_with_positive_accrued_savings():
    econ = econ_at()
    hh = one_household(owner=True, purchase_quarter=0, loan=400_000.0, savings_acc=1.0)
    assert not liquidate_if_broke(hh, econ, 1)[0]
    assert hh.owner[0]


def test_renter_default_at_zero_savings():
    hh = one_household(savings=0.0)
    defaulted = check_default(hh, 5)
    assert defaulted[0]
    assert hh.defaulted[0]
    assert hh.default_quarter[0] == 5


def test_renter_with_positive_savings_survives():
    hh = one_household(savings=0.01)
    assert not check_default(hh, 5)[0]


def test_owner_not_defaulted_on_negative_savings():
    hh = one_household(owner=True, purchase_quarter=0, loan=1_000.0, savings=-10.0)
    assert not check_default(hh, 5)[0]


# ---------------------------------------------------------------------------
# Full quarter update


def test_quarter_zero_flows_for_median_renter():
    econ0 = init_economy(EconParams())
    hh = one_household()
    flows, diag = advance_quarter(hh, econ0, econ0, BENCH, BENCH, RULES, None)
    # rent is 30% of initial salary; 12,625 sits in the 30% bracket
    assert flows.housing_cost[0] == pytest.approx(0.30 * 12_625.0)
    expected_tax = 1_072.0 + 0.30 * (12_625.0 - 11_250.0)
    assert flows.salary_tax[0] == pytest.approx(expected_tax)
    income = 12_625.0 - expected_tax
    assert flows.disposable_income[0] == pytest.approx(income)
    assert flows.consumption[0] == pytest.approx(max(0.611 * income, 1_200.0))
    assert flows.pension_contribution[0] == pytest.approx((1 - 0.15) * 0.12 * 12_625.0)
    assert hh.savings[0] == pytest.approx(
        income - flows.consumption[0] - flows.housing_cost[0]
    )
    assert hh.pension[0] == pytest.approx(flows.pension_contribution[0])
    assert diag.defaults == 0


def test_retired_renter_draws_pension_benefit():
    econ = econ_at(t=170)
    hh = one_household(pension=200_000.0 / 1.02, savings=50_000.0)
    flows, _ = advance_quarter(hh, econ, econ_at(t=169, super_return=0.02), BENCH, BENCH, RULES,
                               (0.0, 0.0, np.zeros(1), EconParams()))
    # after-accrual balance is exactly 200,000 (no tax post-retirement)
    assert hh.pension_acc[0] == pytest.approx(200_000.0)
    assert flows.pension_benefit[0] == pytest.approx(0.0125 * 200_000.0)
    assert flows.salary_tax[0] == 0.0
    assert flows.pension_contribution[0] == 0.0
    # benefit flows out of the pension account
    assert hh.pension[0] == pytest.approx(200_000.0 - flows.pension_benefit[0])


def test_consumption_share_band_844_applies_after_160():
    econ = econ_at(t=170)
    hh = one_household(pension=1_000_000.0, savings=100_000.0)
    flows, _ = advance_quarter(hh, econ, econ_at(t=169, super_return=0.0), BENCH, BENCH, RULES,
                               (0.0, 0.0, np.zeros(1), EconParams()))
    assert flows.consumption[0] == pytest.approx(
        max(0.844 * flows.disposable_income[0], 1_200.0)
    )


def test_consumption_net_of_housing_flag():
    rules = dataclasses.replace(RULES, consumption_on_gross_income=False)
    econ0 = init_economy(EconParams())
    hh = one_household()
    flows, _ = advance_quarter(hh, econ0, econ0, BENCH, BENCH, rules, None)
    net = flows.disposable_income[0] - flows.housing_cost[0]
    assert flows.consumption[0] == pytest.approx(max(0.611 * net, 1_200.0))


def test_quarter_update_deterministic():
    econ0 = init_economy(EconParams())
    results = []
    for _ in range(2):
        hh = one_household()
        flows, _ = advance_quarter(hh, econ0, econ0, BENCH, BENCH, RULES, None)
        results.append((hh.savings.copy(), hh.pension.copy(), flows.consumption.copy()))
    assert np.array_equal(results[0][0], results[1][0])
    assert np.array_equal(results[0][1], results[1][1])
    assert np.array_equal(results[0][2], results[1][2])


def test_renter_pension_never_debited_without_purchase():
    econ0 = init_economy(EconParams())
    hh = one_household()
    prev = econ0
    pension_prev = 0.0
    for t in range(30):
        econ = econ_at(t=t) if t else econ0
        salary_inputs = (0.005, 0.0, np.zeros(1), EconParams()) if t else None
        advance_quarter(hh, econ, prev, BENCH, BENCH, RULES, salary_inputs)
        assert hh.pension[0] >= pension_prev  # contributions and returns only
        pension_prev = hh.pension[0]
        prev = econ
    assert not hh.owner[0]
