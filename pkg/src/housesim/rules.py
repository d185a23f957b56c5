"""Tax, superannuation and Age Pension rules, plus the policy configurations.

All monetary rules follow current Australian settings: Victorian land
transfer duty, resident income tax brackets (annual thresholds divided by
four for the quarterly model, and never indexed), the 12% superannuation
guarantee with its 15% contribution and earnings taxes, the ATO minimum
drawdown schedule, and the means-tested Age Pension with its asset test,
deeming-based income test, supplement and rent assistance.

Pension thresholds are published fortnightly; quarterly amounts use 6.5
fortnights per quarter.  Every threshold in the pension table is indexed
by the CPI index; income-tax thresholds are not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

FORTNIGHTS_PER_QUARTER = 6.5
FORTNIGHTS_PER_YEAR = 26.0

ACCESS_RULES = ("universal", "below_median_income", "below_25th_percentile")


@dataclass(frozen=True)
class PolicyConfig:
    """Deposit and pension-withdrawal settings defining one policy regime.

    ``deposit_rate`` and ``buffer_rate`` are fractions of the property
    price that must be covered at purchase (plus transfer tax).
    ``min_savings_rate`` is the fraction of the price that must still come
    from the savings account when pension withdrawals are allowed;
    ``max_withdrawal_share`` and ``withdrawal_cap`` bound the pension
    withdrawal (share of balance, absolute dollars).
    """

    name: str
    deposit_rate: float                  # required loan deposit, fraction of price
    buffer_rate: float = 0.01            # purchase-cost buffer, fraction of price
    min_savings_rate: float = 0.0        # minimum savings contribution, fraction of price
    max_withdrawal_share: float = 0.0    # max share of the pension balance withdrawable
    withdrawal_cap: float = 0.0          # absolute cap on the pension withdrawal
    access_rule: str = "universal"
    is_benchmark: bool = False

    def violations(self) -> list[str]:
        out = []
        if not (0.0 <= self.min_savings_rate <= self.deposit_rate <= 1.0):
            out.append(
                f"policy {self.name!r}: need 0 <= min_savings_rate <= deposit_rate <= 1, "
                f"got {self.min_savings_rate} and {self.deposit_rate}"
            )
        if not (0.0 <= self.max_withdrawal_share <= 1.0):
            out.append(
                f"policy {self.name!r}: max_withdrawal_share must be in [0, 1], "
                f"got {self.max_withdrawal_share}"
            )
        if self.buffer_rate < 0.0:
            out.append(f"policy {self.name!r}: buffer_rate must be >= 0, got {self.buffer_rate}")
        if self.withdrawal_cap < 0.0:
            out.append(f"policy {self.name!r}: withdrawal_cap must be >= 0, got {self.withdrawal_cap}")
        if self.access_rule not in ACCESS_RULES:
            out.append(
                f"policy {self.name!r}: unknown access_rule {self.access_rule!r}; "
                f"expected one of {ACCESS_RULES}"
            )
        return out

    def validate(self) -> "PolicyConfig":
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))
        return self


@dataclass(frozen=True)
class PensionThresholds:
    """Fortnightly Age Pension thresholds; every value is CPI-indexed."""

    max_base: float                 # full base pension per fortnight
    asset_threshold_nonowner: float
    asset_threshold_owner: float
    income_threshold: float
    deeming_threshold: float        # balance split point for the two deeming rates
    supplement_min: float
    supplement_max: float
    rent_assist_min_rent: float
    rent_assist_max: float


SINGLE_PENSION_THRESHOLDS = PensionThresholds(
    max_base=1_051.3,
    asset_threshold_nonowner=566_000.0,
    asset_threshold_owner=314_000.0,
    income_threshold=212.0,
    deeming_threshold=62_600.0,
    supplement_min=59.1,
    supplement_max=97.7,
    rent_assist_min_rent=149.6,
    rent_assist_max=432.27,
)

# Retained for completeness; the simulator models every household as single.
COUPLE_PENSION_THRESHOLDS = PensionThresholds(
    max_base=1_585.0,
    asset_threshold_nonowner=722_000.0,
    asset_threshold_owner=470_000.0,
    income_threshold=372.0,
    deeming_threshold=103_800.0,
    supplement_min=89.0,
    supplement_max=147.2,
    rent_assist_min_rent=242.4,
    rent_assist_max=508.8,
)


@dataclass(frozen=True)
class RuleSet:
    """Immutable bundle of every fixed fiscal and household rule."""

    retirement_quarter: int = 168        # age 67 for a cohort entering at 25
    loan_term: int = 120                 # 30-year mortgages
    max_horizon: int = 300               # age 100

    # Income tax: annual thresholds (never indexed) and marginal rates.
    # The quarterly schedule divides each threshold by four.
    income_tax_thresholds_annual: tuple = (18_200.0, 45_000.0, 135_000.0, 190_000.0)
    income_tax_rates: tuple = (0.16, 0.30, 0.37, 0.45)

    # Superannuation
    contribution_rate: float = 0.12      # superannuation guarantee
    super_return_tax: float = 0.15       # on returns, pre-retirement only
    contribution_tax: float = 0.15
    listo_income_cap_annual: float = 37_000.0  # LISTO: no contribution tax below this

    # Age Pension tapers and deeming rates
    income_taper: float = 0.50           # reduction per dollar of assessed income (singles)
    asset_taper: float = 0.003           # reduction per dollar of assets over the threshold
    rent_assist_rate: float = 0.75
    deeming_low: float = 0.0025
    deeming_high: float = 0.0225
    # The published deeming rates are annual; the income test is fortnightly,
    # so deemed income is divided over 26 fortnights.  Set False to apply the
    # rates as printed, which wipes out the pension for mid-wealth retirees
    # and triggers forced property sales late in life.
    deeming_rates_annual: bool = True
    # Rent assistance compares rent against fortnightly thresholds; by
    # default quarterly rent is compared as printed.  Set True to convert
    # rent to a fortnightly amount first.
    rent_compare_fortnightly: bool = False
    pension: PensionThresholds = field(default_factory=lambda: SINGLE_PENSION_THRESHOLDS)

    # Minimum pension drawdown: (first quarter, quarterly rate) steps
    drawdown_schedule: tuple = (
        (168, 0.05 / 4),
        (200, 0.06 / 4),
        (220, 0.07 / 4),
        (240, 0.09 / 4),
        (260, 0.11 / 4),
    )

    # Owner-occupier running costs and council rates
    maintenance_rate: float = 0.0025     # per quarter, fraction of property value
    council_rate_share: float = 0.40    # council rates as a share of maintenance

    # Household behaviour
    rent_to_income: float = 0.30         # initial rent as a share of initial salary
    # Non-housing consumption share by quarter-of-life band
    consumption_shares: tuple = (
        (0, 0.611),
        (40, 0.593),
        (80, 0.582),
        (120, 0.605),
        (160, 0.844),
    )
    consumption_floor: float = 1_200.0   # per quarter, indexed by CPI
    # True (default): renters consume the share of gross disposable income
    # while owners consume the share of income net of housing outgoings
    # (loan servicing comes first).  False: everyone consumes the share of
    # income net of housing, which makes renters save several times faster.
    consumption_on_gross_income: bool = True
    # Purchase affordability: income net of the age-band consumption share
    # must cover the reference repayment (True, default), or bare
    # disposable income must (False).  The stricter screen is what lets a
    # higher-leverage policy delay or permanently exclude low earners, and
    # it keeps fresh buyers cash-flow positive so they are never forced to
    # sell immediately after purchase.
    purchase_test_net_of_consumption: bool = True

    # Income thresholds for restricted policy access (quarterly dollars).
    # The median is the published all-ages figure; the 25th percentile is
    # not published and ships as a configurable placeholder.
    median_income_quarterly: float = 18_148.0
    p25_income_quarterly: float = 9_074.0


def income_tax_quarterly(taxable, rules: RuleSet = RuleSet()):
    """Quarterly income tax: the annual bracket schedule with thresholds / 4.

    Continuous and nondecreasing; accepts scalars or arrays.
    """
    x = np.asarray(taxable, dtype=float)
    thresholds = np.array(rules.income_tax_thresholds_annual) / 4.0
    rates = np.array(rules.income_tax_rates)
    widths = np.diff(np.append(thresholds, np.inf))
    tax = np.zeros_like(x)
    for thr, rate, width in zip(thresholds, rates, widths):
        tax += rate * np.clip(x - thr, 0.0, width)
    if np.ndim(taxable) == 0:
        return float(tax)
    return tax


def savings_return_tax(salary, savings_return, t: int, rules: RuleSet):
    """Income tax attributable to savings returns.

    Salary and savings returns share one progressive schedule, so the
    savings part is the increment over tax on salary alone; after
    retirement only the returns are taxable.  Negative returns (from a
    negative balance) contribute no taxable income.
    """
    ret = np.maximum(np.asarray(savings_return, dtype=float), 0.0)
    if t < rules.retirement_quarter:
        return income_tax_quarterly(np.asarray(salary) + ret, rules) - income_tax_quarterly(salary, rules)
    return income_tax_quarterly(ret, rules)


def super_taxes(prev_balance, r_f: float, t: int, salary, rules: RuleSet = RuleSet()):
    """Tax on superannuation returns plus the contribution tax rate.

    Returns (return_tax, contribution_tax_rate).  The 15% earnings tax
    applies only before retirement; the contribution tax is waived below
    the LISTO income cap.
    """
    if t < rules.retirement_quarter:
        return_tax = rules.super_return_tax * r_f * np.asarray(prev_balance, dtype=float)
    else:
        return_tax = np.zeros_like(np.asarray(prev_balance, dtype=float))
    low_income = np.asarray(salary, dtype=float) <= rules.listo_income_cap_annual / 4.0
    contrib_rate = np.where(low_income, 0.0, rules.contribution_tax)
    if np.ndim(prev_balance) == 0 and np.ndim(salary) == 0:
        return float(return_tax), float(contrib_rate)
    return return_tax, contrib_rate


def property_transfer_tax(price):
    """Victorian land transfer duty.

    Piecewise in price with one documented discontinuity where the flat
    5.5% band starts at $960,000.
    """
    p = np.asarray(price, dtype=float)
    tax = np.select(
        [
            p <= 25_000.0,
            p <= 130_000.0,
            p <= 960_000.0,
            p <= 2_000_000.0,
        ],
        [
            0.014 * p,
            350.0 + 0.024 * (p - 25_000.0),
            2_870.0 + 0.06 * (p - 130_000.0),
            0.055 * p,
        ],
        default=110_000.0 + 0.065 * (p - 2_000_000.0),
    )
    if np.ndim(price) == 0:
        return float(tax)
    return tax


def min_drawdown_rate(t: int, rules: RuleSet = RuleSet()) -> float:
    """Minimum quarterly pension drawdown rate at quarter ``t`` (>= retirement)."""
    if t < rules.retirement_quarter:
        raise ValueError(f"drawdown rate undefined before retirement (t={t})")
    rate = rules.drawdown_schedule[0][1]
    for start, step_rate in rules.drawdown_schedule:
        if t >= start:
            rate = step_rate
    return rate


def age_pension(
    t: int,
    savings,
    pension_balance,
    rent,
    is_homeowner,
    cpi_index: float,
    rules: RuleSet = RuleSet(),
):
    """Quarterly means-tested state pension.

    Accepts scalars or aligned arrays for the household arguments.  The
    base entitlement is the worst of the asset test and the deemed-income
    test; the supplement and (for renters) rent assistance are paid only
    with a positive base.  Every threshold scales with the CPI index.
    Negative balances are treated as zero so they cannot inflate the
    entitlement.
    """
    assets = np.maximum(np.asarray(savings, dtype=float), 0.0) + np.maximum(
        np.asarray(pension_balance, dtype=float), 0.0
    )
    if t < rules.retirement_quarter:
        out = np.zeros_like(assets)
        return float(out) if out.ndim == 0 else out

    pt = rules.pension
    owner = np.asarray(is_homeowner, dtype=bool)
    max_base = pt.max_base * cpi_index
    asset_threshold = np.where(
        owner,
        pt.asset_threshold_owner * cpi_index,
        pt.asset_threshold_nonowner * cpi_index,
    )
    deeming_threshold = pt.deeming_threshold * cpi_index

    asset_test = np.maximum(0.0, max_base - rules.asset_taper * (assets - asset_threshold))

    deeming_scale = 1.0 / FORTNIGHTS_PER_YEAR if rules.deeming_rates_annual else 1.0
    assessed_income = deeming_scale * (
        rules.deeming_low * np.minimum(assets, deeming_threshold)
        + rules.deeming_high * np.maximum(0.0, assets - deeming_threshold)
    )
    income_test = np.maximum(
        0.0,
        max_base - rules.income_taper * (assessed_income - pt.income_threshold * cpi_index),
    )

    base = np.minimum(max_base, np.minimum(asset_test, income_test))
    supplement = np.maximum(
        pt.supplement_min * cpi_index,
        base / max_base * pt.supplement_max * cpi_index,
    )
    rent_for_test = np.asarray(rent, dtype=float)
    if rules.rent_compare_fortnightly:
        rent_for_test = rent_for_test / FORTNIGHTS_PER_QUARTER
    rent_assist = np.minimum(
        np.maximum(0.0, rules.rent_assist_rate * (rent_for_test - pt.rent_assist_min_rent * cpi_index)),
        pt.rent_assist_max * cpi_index,
    )
    rent_assist = np.where(owner, 0.0, rent_assist)

    paid = base > 0.0
    total = np.where(paid, FORTNIGHTS_PER_QUARTER * (base + supplement + rent_assist), 0.0)
    if total.ndim == 0:
        return float(total)
    return total


def withdrawal_amounts(policy: PolicyConfig, price, pension_acc, transfer_tax):
    """Split the purchase outlay between the savings and pension accounts.

    The pension withdrawal is the maximum the policy permits (share of
    balance, absolute cap, and the deposit portion not reserved for
    savings); savings cover the rest.  The two always sum to
    (deposit + buffer) * price + transfer tax.
    """
    p = np.asarray(price, dtype=float)
    total = (policy.deposit_rate + policy.buffer_rate) * p + np.asarray(transfer_tax, dtype=float)
    from_pension = np.minimum(
        np.minimum(policy.max_withdrawal_share * np.asarray(pension_acc, dtype=float), policy.withdrawal_cap),
        (policy.deposit_rate - policy.min_savings_rate) * p,
    )
    from_pension = np.maximum(from_pension, 0.0)
    from_savings = total - from_pension
    if np.ndim(price) == 0 and np.ndim(pension_acc) == 0:
        return float(from_savings), float(from_pension)
    return from_savings, from_pension


def policy_presets() -> list[PolicyConfig]:
    """The policy configurations studied: benchmark, reduced deposit,
    early withdrawal, and the two early-withdrawal boundary designs."""
    return [
        PolicyConfig("benchmark", deposit_rate=0.20, is_benchmark=True),
        PolicyConfig("reduced_deposit", deposit_rate=0.05),
        PolicyConfig(
            "early_withdrawal",
            deposit_rate=0.20,
            min_savings_rate=0.05,
            max_withdrawal_share=0.40,
            withdrawal_cap=50_000.0,
        ),
        PolicyConfig(
            "ew_full_withdrawal",
            deposit_rate=0.20,
            min_savings_rate=0.05,
            max_withdrawal_share=1.0,
            withdrawal_cap=math.inf,
        ),
        PolicyConfig(
            "ew_no_savings_contribution",
            deposit_rate=0.20,
            min_savings_rate=0.0,
            max_withdrawal_share=0.40,
            withdrawal_cap=50_000.0,
        ),
    ]


def preset_by_name(name: str) -> PolicyConfig:
    for preset in policy_presets():
        if preset.name == name:
            return preset
    raise KeyError(f"unknown policy preset {name!r}")


def consumption_share(t: int, rules: RuleSet = RuleSet()) -> float:
    """Non-housing consumption share for the age band containing quarter ``t``."""
    share = rules.consumption_shares[0][1]
    for start, value in rules.consumption_shares:
        if t >= start:
            share = value
    return share


def access_income_cap(policy: PolicyConfig, rules: RuleSet) -> Optional[float]:
    """Quarterly income cap for policy eligibility, or None if universal."""
    if policy.access_rule == "universal":
        return None
    if policy.access_rule == "below_median_income":
        return rules.median_income_quarterly
    if policy.access_rule == "below_25th_percentile":
        return rules.p25_income_quarterly
    raise ValueError(f"unknown access rule {policy.access_rule!r}")
