"""One-quarter household updates: accrual, flows, purchase, loan, exits.

State lives in a struct-of-arrays ``Households`` container so a whole
cohort advances with elementwise numpy operations; a single household is
just a cohort of one.  All operations are deterministic functions of
(state, economy, rules, policy) and mutate the container in place.

Quarter ordering: salaries and balance accrual first, then an owner
liquidation check on the accrued balance, then income/taxes/benefits,
the purchase decision, housing costs, consumption, the closing balance
update, and finally the renter default check on the closing balance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .econ import EconState
from .rules import (
    PolicyConfig,
    RuleSet,
    access_income_cap,
    age_pension,
    consumption_share,
    income_tax_quarterly,
    min_drawdown_rate,
    property_transfer_tax,
    savings_return_tax,
    super_taxes,
    withdrawal_amounts,
)

NO_PURCHASE = -1


@dataclass
class Households:
    """Cohort state; every field is an array of length n."""

    group: np.ndarray            # income group, 0-based
    target_price0: np.ndarray    # price of the target property at t=0
    salary0: np.ndarray
    death_quarter: np.ndarray    # first quarter the household is no longer alive

    salary: np.ndarray = None
    rent0: np.ndarray = None
    savings: np.ndarray = None       # A(t), closing balance
    pension: np.ndarray = None       # F(t), closing balance
    savings_acc: np.ndarray = None   # accrued savings, intra-quarter
    pension_acc: np.ndarray = None   # accrued pension, intra-quarter
    owner: np.ndarray = None
    purchase_quarter: np.ndarray = None
    loan: np.ndarray = None
    defaulted: np.ndarray = None
    default_quarter: np.ndarray = None

    def __post_init__(self):
        n = len(self.group)
        if self.salary is None:
            self.salary = self.salary0.astype(float).copy()
        if self.rent0 is None:
            self.rent0 = RuleSet().rent_to_income * self.salary0.astype(float)
        for name, dtype, fill in (
            ("savings", float, 0.0),
            ("pension", float, 0.0),
            ("savings_acc", float, 0.0),
            ("pension_acc", float, 0.0),
            ("loan", float, 0.0),
        ):
            if getattr(self, name) is None:
                setattr(self, name, np.full(n, fill, dtype=dtype))
        if self.owner is None:
            self.owner = np.zeros(n, dtype=bool)
        if self.defaulted is None:
            self.defaulted = np.zeros(n, dtype=bool)
        if self.purchase_quarter is None:
            self.purchase_quarter = np.full(n, NO_PURCHASE, dtype=int)
        if self.default_quarter is None:
            self.default_quarter = np.full(n, NO_PURCHASE, dtype=int)

    def __len__(self) -> int:
        return len(self.group)

    def alive(self, t: int) -> np.ndarray:
        return t < self.death_quarter

    def active(self, t: int) -> np.ndarray:
        """Alive and not defaulted: the households still in the model."""
        return self.alive(t) & ~self.defaulted

    def target_price(self, econ: EconState) -> np.ndarray:
        return self.target_price0 * econ.price_index

    def rent(self, econ: EconState) -> np.ndarray:
        return self.rent0 * econ.rent_index


@dataclass
class QuarterFlows:
    """Per-household cash flows realised in one quarter."""

    disposable_income: np.ndarray
    housing_cost: np.ndarray
    consumption: np.ndarray
    pension_contribution: np.ndarray
    pension_benefit: np.ndarray
    state_pension: np.ndarray
    repayment: np.ndarray
    maintenance: np.ndarray
    salary_tax: np.ndarray
    savings_tax: np.ndarray
    super_tax: np.ndarray
    contribution_tax: np.ndarray
    withdrawal_savings: np.ndarray
    withdrawal_pension: np.ndarray
    transfer_tax_paid: np.ndarray


@dataclass
class QuarterDiagnostics:
    purchases: int = 0
    liquidations: int = 0
    defaults: int = 0
    salary_floor_hits: int = 0


def accrue(hh: Households, r_a_prev: float, r_f_prev: float, t: int, rules: RuleSet):
    """Roll balances forward one quarter and deduct last quarter's return taxes.

    Uses the rates that applied over the elapsed quarter and the current
    salary (salary must be updated first).  Returns (savings_tax, super_tax).
    """
    mask = hh.active(t)
    savings_return = r_a_prev * hh.savings
    savings_tax = savings_return_tax(hh.salary, savings_return, t, rules)
    super_tax, _ = super_taxes(hh.pension, r_f_prev, t, hh.salary, rules)
    savings_tax = np.where(mask, savings_tax, 0.0)
    super_tax = np.where(mask, np.asarray(super_tax, dtype=float), 0.0)
    hh.savings_acc = np.where(mask, hh.savings * (1.0 + r_a_prev) - savings_tax, hh.savings_acc)
    hh.pension_acc = np.where(mask, hh.pension * (1.0 + r_f_prev) - super_tax, hh.pension_acc)
    return savings_tax, super_tax


def liquidate_if_broke(hh: Households, econ: EconState, t: int) -> np.ndarray:
    """Sell the property of owners whose accrued savings are depleted.

    Sale proceeds net of the outstanding loan are credited back to the
    accrued savings; the household rents again and may repurchase from the
    next quarter.  Returns the mask of liquidated households.
    """
    broke = hh.active(t) & hh.owner & (hh.savings_acc <= 0.0)
    if np.any(broke):
        proceeds = hh.target_price(econ) - hh.loan
        hh.savings_acc = np.where(broke, hh.savings_acc + proceeds, hh.savings_acc)
        hh.owner = np.where(broke, False, hh.owner)
        hh.loan = np.where(broke, 0.0, hh.loan)
        hh.purchase_quarter = np.where(broke, NO_PURCHASE, hh.purchase_quarter)
    return broke


def annuity_payment(loan, rate, quarters_remaining):
    """Level repayment that amortises ``loan`` over ``quarters_remaining``.

    Standard annuity formula; collapses to straight-line principal when
    the rate is zero.
    """
    loan = np.asarray(loan, dtype=float)
    n = np.asarray(quarters_remaining, dtype=float)
    rate = np.asarray(rate, dtype=float)
    n = np.maximum(n, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(rate > 0.0, rate / (1.0 - (1.0 + rate) ** (-n)), 1.0 / n)
    return loan * factor


def amortize(hh: Households, r_b: float, t: int, loan_term: int) -> np.ndarray:
    """Charge this quarter's mortgage repayment and roll the loan balance.

    The repayment re-levels every quarter from the remaining term, so the
    balance reaches zero exactly at the end of the term even when rates
    move.  Returns the repayment array.
    """
    in_term = hh.owner & (hh.loan > 0.0) & (t < hh.purchase_quarter + loan_term)
    remaining = np.maximum(hh.purchase_quarter + loan_term - t, 1)
    payment = np.where(in_term, annuity_payment(hh.loan, r_b, remaining), 0.0)
    next_loan = np.where(in_term, hh.loan * (1.0 + r_b) - payment, hh.loan)
    # Final payment clears the balance up to float rounding
    next_loan = np.where(np.abs(next_loan) < 1e-9, 0.0, next_loan)
    hh.loan = np.where(in_term, next_loan, hh.loan)
    return payment


def eligible_for_policy(hh: Households, policy: PolicyConfig, income, rules: RuleSet) -> np.ndarray:
    """Access mask for restricted policies, based on current income."""
    cap = access_income_cap(policy, rules)
    if cap is None:
        return np.ones(len(hh), dtype=bool)
    return np.asarray(income) < cap


def try_purchase(
    hh: Households,
    econ: EconState,
    income: np.ndarray,
    policy: PolicyConfig,
    benchmark: PolicyConfig,
    rules: RuleSet,
    t: int,
    blocked: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate the two purchase conditions and execute purchases.

    A renter buys when income net of the consumption share covers the
    reference repayment on a full deposit-complement loan and accrued
    savings cover the outlay net of the permitted pension withdrawal
    (both weak inequalities).  Households failing a restricted policy's
    income cap fall back to the benchmark terms.  Returns
    (bought, from_savings, from_pension, transfer_tax).
    """
    n = len(hh)
    renters = hh.active(t) & ~hh.owner
    if blocked is not None:
        renters &= ~blocked

    eligible = eligible_for_policy(hh, policy, income, rules)
    deposit = np.where(eligible, policy.deposit_rate, benchmark.deposit_rate)
    buffer = np.where(eligible, policy.buffer_rate, benchmark.buffer_rate)
    min_savings = np.where(eligible, policy.min_savings_rate, benchmark.min_savings_rate)
    max_share = np.where(eligible, policy.max_withdrawal_share, benchmark.max_withdrawal_share)
    cap = np.where(eligible, policy.withdrawal_cap, benchmark.withdrawal_cap)

    price = hh.target_price(econ)
    transfer_tax = property_transfer_tax(price)
    outlay = (deposit + buffer) * price + transfer_tax
    from_pension_full = np.maximum(
        np.minimum(np.minimum(max_share * hh.pension_acc, cap), (deposit - min_savings) * price),
        0.0,
    )
    reference_repayment = annuity_payment((1.0 - deposit) * price, econ.borrow_rate, rules.loan_term)
    if rules.purchase_test_net_of_consumption:
        serviceable = (1.0 - consumption_share(t, rules)) * income
    else:
        serviceable = income

    bought = (
        renters
        & (serviceable >= reference_repayment)
        & (hh.savings_acc >= outlay - from_pension_full)
    )

    from_pension = np.where(bought, from_pension_full, 0.0)
    from_savings = np.where(bought, outlay - from_pension_full, 0.0)
    tax_paid = np.where(bought, transfer_tax, 0.0)
    if np.any(bought):
        hh.owner = np.where(bought, True, hh.owner)
        hh.purchase_quarter = np.where(bought, t, hh.purchase_quarter)
        hh.loan = np.where(bought, (1.0 - deposit) * price, hh.loan)
    return bought, from_savings, from_pension, tax_paid


def check_default(hh: Households, t: int) -> np.ndarray:
    """Mark renters whose closing savings are depleted as defaulted (they exit)."""
    broke = hh.active(t) & ~hh.owner & (hh.savings <= 0.0)
    if np.any(broke):
        hh.defaulted = hh.defaulted | broke
        hh.default_quarter = np.where(broke, t, hh.default_quarter)
    return broke


def advance_quarter(
    hh: Households,
    econ: EconState,
    prev_econ: EconState,
    policy: PolicyConfig,
    benchmark: PolicyConfig,
    rules: RuleSet,
    salary_inputs: tuple | None,
) -> tuple[QuarterFlows, QuarterDiagnostics]:
    """Run one full quarter for the cohort against the quarter-t economy.

    ``salary_inputs`` is (systematic_awe_growth, common_shock, idio_shocks,
    econ_params) for t >= 1, or None at t = 0 where salaries and balances
    take their initial values.  Returns the realised flows and counters.
    """
    from .econ import salary_step

    t = econ.t
    n = len(hh)
    diag = QuarterDiagnostics()
    mask = hh.active(t)
    retired = t >= rules.retirement_quarter

    # Salaries evolve with the systematic wage growth plus the split shocks
    if salary_inputs is not None:
        awe_systematic, common_shock, idio_shocks, econ_params = salary_inputs
        new_salary, floored = salary_step(
            hh.salary, t, awe_systematic, common_shock, idio_shocks, econ_params
        )
        hh.salary = np.where(mask, new_salary, hh.salary)
        diag.salary_floor_hits = floored

    # Balance accrual net of last quarter's return taxes; quarter 0 keeps
    # the given initial (zero) accrued balances.
    if t == 0:
        savings_tax = np.zeros(n)
        super_tax = np.zeros(n)
        hh.savings_acc = hh.savings.copy()
        hh.pension_acc = hh.pension.copy()
    else:
        savings_tax, super_tax = accrue(
            hh, prev_econ.nominal_cash, prev_econ.super_return, t, rules
        )

    liquidated = liquidate_if_broke(hh, econ, t)
    diag.liquidations = int(np.count_nonzero(liquidated))

    # Income, contributions and benefits
    salary_tax = np.where(mask & ~retired, income_tax_quarterly(hh.salary, rules), 0.0)
    _, contrib_rate = super_taxes(hh.pension, prev_econ.super_return, t, hh.salary, rules)
    if retired:
        contribution = np.zeros(n)
        contribution_tax = np.zeros(n)
        benefit = np.where(mask, min_drawdown_rate(t, rules) * hh.pension_acc, 0.0)
        state_pension = np.where(
            mask,
            age_pension(
                t, hh.savings_acc, hh.pension_acc, hh.rent(econ), hh.owner, econ.cpi_index, rules
            ),
            0.0,
        )
        income = benefit + state_pension
    else:
        gross_contribution = rules.contribution_rate * hh.salary
        contribution_tax = np.where(mask, contrib_rate * gross_contribution, 0.0)
        contribution = np.where(mask, gross_contribution - contribution_tax, 0.0)
        benefit = np.zeros(n)
        state_pension = np.zeros(n)
        income = np.where(mask, hh.salary - salary_tax, 0.0)

    # Purchase decision uses this quarter's accrued savings and income
    bought, from_savings, from_pension, transfer_tax_paid = try_purchase(
        hh, econ, income, policy, benchmark, rules, t, blocked=liquidated
    )
    diag.purchases = int(np.count_nonzero(bought))

    # Housing cost: rent for renters, maintenance plus repayment for owners
    repayment = amortize(hh, econ.borrow_rate, t, rules.loan_term)
    maintenance = np.where(mask & hh.owner, rules.maintenance_rate * hh.target_price(econ), 0.0)
    housing = np.where(hh.owner, maintenance + repayment, hh.rent(econ))
    housing = np.where(mask, housing, 0.0)

    # Non-housing consumption with an inflation-indexed floor.  Owners
    # consume the share of income net of their housing outgoings (loan
    # servicing comes first); renters consume the share of gross income.
    share = consumption_share(t, rules)
    if rules.consumption_on_gross_income:
        base = np.where(hh.owner, np.maximum(income - housing, 0.0), income)
    else:
        base = np.maximum(income - housing, 0.0)
    consumption = np.where(mask, np.maximum(share * base, rules.consumption_floor * econ.cpi_index), 0.0)

    # Closing balances
    hh.savings = np.where(
        mask, hh.savings_acc + income - consumption - housing - from_savings, hh.savings
    )
    hh.pension = np.where(
        mask, hh.pension_acc + contribution - benefit - from_pension, hh.pension
    )

    defaulted = check_default(hh, t)
    diag.defaults = int(np.count_nonzero(defaulted))

    flows = QuarterFlows(
        disposable_income=income,
        housing_cost=housing,
        consumption=consumption,
        pension_contribution=contribution,
        pension_benefit=benefit,
        state_pension=state_pension,
        repayment=repayment,
        maintenance=maintenance,
        salary_tax=salary_tax,
        savings_tax=savings_tax,
        super_tax=super_tax,
        contribution_tax=contribution_tax,
        withdrawal_savings=from_savings,
        withdrawal_pension=from_pension,
        transfer_tax_paid=transfer_tax_paid,
    )
    return flows, diag
