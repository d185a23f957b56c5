"""Evaluation metrics comparing each policy to the benchmark.

Seven metrics, each per income group and population-wide where defined:
purchase probability and purchase age (accessibility), relative change in
retirement security, Gini coefficients of purchase timing and retirement
security (inequality), and federal/local government revenue NPVs.

Conventions shared with the simulator: outcomes are paired by
(scenario, household); a household that never owns at exit carries
purchase quarter -1 and is imputed the maximum survival horizon; all
expectations are unweighted means over scenarios.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohort import MarketResult, PolicyOutcomes

MAX_HORIZON = 300  # imputed purchase quarter for households that never buy
POPULATION = 0     # group id 0 denotes the whole population


@dataclass
class GroupMetrics:
    purchase_probability: float
    purchase_age_years: float
    retirement_security_pv: float
    delta_probability: float        # percentage-point change vs benchmark
    delta_age_years: float          # change in expected purchase age
    delta_security_relative: float  # mean relative change in retirement wealth
    excluded_security_pairs: int    # pairs dropped for non-positive benchmark wealth


@dataclass
class PolicyMetrics:
    policy: str
    groups: dict[int, GroupMetrics]           # 1..5 plus POPULATION
    gini_purchase_time: float
    gini_retirement_security: float
    delta_gini_purchase_time: float
    delta_gini_retirement_security: float
    federal_npv: float                        # per household, discounted to t=0
    local_npv: float
    government_npv: float
    delta_federal: float
    delta_local: float
    delta_government: float


def imputed_purchase_quarter(purchase_quarter: np.ndarray, horizon: int = MAX_HORIZON) -> np.ndarray:
    """Replace the never-purchased sentinel with the maximum survival horizon."""
    return np.where(purchase_quarter < 0, horizon, purchase_quarter)


def purchased_before_death(outcome: PolicyOutcomes) -> np.ndarray:
    """(m, n) indicator: household owned its home before exiting."""
    t_p = imputed_purchase_quarter(outcome.purchase_quarter)
    return (outcome.purchase_quarter >= 0) & (t_p < outcome.death_quarter)


def _group_mask(group: np.ndarray, k: int) -> np.ndarray:
    if k == POPULATION:
        return np.ones_like(group, dtype=bool)
    return group == (k - 1)


def accessibility_deltas(
    policy_out: PolicyOutcomes,
    benchmark_out: PolicyOutcomes,
    group: np.ndarray,
    k: int,
) -> tuple[float, float]:
    """Change in purchase probability and in expected purchase age (years).

    Probabilities are per-household frequencies over scenarios of buying
    before death; ages use the imputation convention so non-purchasers
    count at the horizon.  Empty groups are rejected.
    """
    mask = _group_mask(group, k)
    if not np.any(mask):
        raise ValueError(f"income group {k} has no households")
    prob_policy = purchased_before_death(policy_out)[:, mask].mean(axis=0)
    prob_bench = purchased_before_death(benchmark_out)[:, mask].mean(axis=0)
    delta_a = float(np.mean(prob_policy - prob_bench))

    age_policy = imputed_purchase_quarter(policy_out.purchase_quarter)[:, mask].mean(axis=0)
    age_bench = imputed_purchase_quarter(benchmark_out.purchase_quarter)[:, mask].mean(axis=0)
    delta_p = float(np.mean(age_policy - age_bench) / 4.0)
    return delta_a, delta_p


def retirement_wealth(outcome: PolicyOutcomes) -> np.ndarray:
    """(m, n) retirement wealth: savings at retirement plus the discounted
    post-retirement income stream net of housing."""
    return outcome.a_at_retirement + outcome.retirement_income_pv


def retirement_security_delta(
    policy_out: PolicyOutcomes,
    benchmark_out: PolicyOutcomes,
    group: np.ndarray,
    k: int,
) -> tuple[float, int]:
    """Mean over the group of the expected relative change in retirement wealth.

    Pairs with non-positive benchmark wealth (e.g. death before
    retirement) cannot form a ratio and are excluded; the count of
    exclusions is returned as a diagnostic.
    """
    mask = _group_mask(group, k)
    if not np.any(mask):
        raise ValueError(f"income group {k} has no households")
    wealth_policy = retirement_wealth(policy_out)[:, mask]
    wealth_bench = retirement_wealth(benchmark_out)[:, mask]
    valid = wealth_bench > 0.0
    excluded = int(valid.size - np.count_nonzero(valid))
    ratios = np.where(valid, wealth_policy / np.where(valid, wealth_bench, 1.0) - 1.0, 0.0)
    counts = valid.sum(axis=0)
    with np.errstate(invalid="ignore"):
        per_household = ratios.sum(axis=0) / counts
    per_household = per_household[counts > 0]
    if per_household.size == 0:
        raise ValueError(f"income group {k} has no valid retirement-wealth pairs")
    return float(per_household.mean()), excluded


def gini(values: np.ndarray) -> float:
    """Gini coefficient of a nonnegative vector with a positive sum.

    Mean absolute difference over all ordered pairs, normalised by twice
    the mean; computed via the sorted-values identity, which matches the
    brute-force double loop exactly.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("gini needs a 1-d vector with at least 2 entries")
    if np.any(x < 0):
        raise ValueError("gini is undefined for negative values")
    total = x.sum()
    if total <= 0:
        raise ValueError("gini is undefined when all values are zero")
    n = x.size
    x_sorted = np.sort(x)
    # sum_{i<j} (x_j - x_i) over the sorted vector equals sum_i (2i - n + 1) x_(i)
    weights = 2.0 * np.arange(n) - n + 1.0
    return float(np.dot(weights, x_sorted) / (n * total))


def mean_gini_over_scenarios(values: np.ndarray, clip_negative: bool = False) -> tuple[float, int]:
    """Per-scenario Gini averaged across scenarios for an (m, n) array.

    Retirement wealth can be slightly negative for some renters; those
    entries are clipped to zero when requested (counted as a diagnostic)
    because the coefficient is defined on nonnegative support.
    """
    vals = np.asarray(values, dtype=float)
    clipped = 0
    if clip_negative:
        clipped = int(np.count_nonzero(vals < 0))
        vals = np.maximum(vals, 0.0)
    return float(np.mean([gini(row) for row in vals])), clipped


def government_npv(outcome: PolicyOutcomes, side: str) -> float:
    """Expected NPV of government revenue per household for one side.

    Streams were discounted and accumulated during simulation; this is
    the scenario expectation of the per-household average.
    """
    if side == "federal":
        return float(outcome.federal_npv.mean())
    if side == "local":
        return float(outcome.local_npv.mean())
    raise ValueError(f"unknown government side {side!r}")


def _group_levels(outcome: PolicyOutcomes, group: np.ndarray, k: int) -> tuple[float, float, float]:
    mask = _group_mask(group, k)
    prob = float(purchased_before_death(outcome)[:, mask].mean())
    age = 25.0 + float(imputed_purchase_quarter(outcome.purchase_quarter)[:, mask].mean()) / 4.0
    security = float(retirement_wealth(outcome)[:, mask].mean())
    return prob, age, security


def policy_metrics(result: MarketResult, policy_name: str) -> PolicyMetrics:
    """All seven metrics for one policy against the market's benchmark."""
    outcome = result.policies[policy_name]
    bench = result.policies[result.benchmark_name]
    groups: dict[int, GroupMetrics] = {}
    for k in (POPULATION, 1, 2, 3, 4, 5):
        delta_a, delta_p = accessibility_deltas(outcome, bench, result.group, k)
        delta_s, excluded = retirement_security_delta(outcome, bench, result.group, k)
        prob, age, security = _group_levels(outcome, result.group, k)
        groups[k] = GroupMetrics(
            purchase_probability=prob,
            purchase_age_years=age,
            retirement_security_pv=security,
            delta_probability=delta_a,
            delta_age_years=delta_p,
            delta_security_relative=delta_s,
            excluded_security_pairs=excluded,
        )

    gini_p, _ = mean_gini_over_scenarios(imputed_purchase_quarter(outcome.purchase_quarter))
    gini_p_bench, _ = mean_gini_over_scenarios(imputed_purchase_quarter(bench.purchase_quarter))
    gini_s, _ = mean_gini_over_scenarios(retirement_wealth(outcome), clip_negative=True)
    gini_s_bench, _ = mean_gini_over_scenarios(retirement_wealth(bench), clip_negative=True)

    federal = government_npv(outcome, "federal")
    local = government_npv(outcome, "local")
    federal_bench = government_npv(bench, "federal")
    local_bench = government_npv(bench, "local")

    return PolicyMetrics(
        policy=policy_name,
        groups=groups,
        gini_purchase_time=gini_p,
        gini_retirement_security=gini_s,
        delta_gini_purchase_time=gini_p - gini_p_bench,
        delta_gini_retirement_security=gini_s - gini_s_bench,
        federal_npv=federal,
        local_npv=local,
        government_npv=federal + local,
        delta_federal=federal - federal_bench,
        delta_local=local - local_bench,
        delta_government=(federal + local) - (federal_bench + local_bench),
    )


def market_report(result: MarketResult) -> dict[str, PolicyMetrics]:
    """Metrics for every policy in the market, benchmark included."""
    return {name: policy_metrics(result, name) for name in result.policies}


def report_rows(result: MarketResult) -> list[dict]:
    """Tidy rows (market, policy, group, metric, value, baseline_value, delta).

    ``delta`` carries the paper's headline comparison for that metric:
    percentage points for purchase probability, years for purchase age,
    a relative fraction for retirement security, and plain differences
    for the Gini and NPV rows.
    """
    rows = []
    report = market_report(result)
    bench = report[result.benchmark_name]
    for name, pm in report.items():
        for k, gm in pm.groups.items():
            base = bench.groups[k]
            rows.append(
                dict(
                    market=result.market, policy=name, group=k,
                    metric="purchase_probability",
                    value=gm.purchase_probability,
                    baseline_value=base.purchase_probability,
                    delta=gm.delta_probability,
                )
            )
            rows.append(
                dict(
                    market=result.market, policy=name, group=k,
                    metric="purchase_age_years",
                    value=gm.purchase_age_years,
                    baseline_value=base.purchase_age_years,
                    delta=gm.delta_age_years,
                )
            )
            rows.append(
                dict(
                    market=result.market, policy=name, group=k,
                    metric="retirement_security",
                    value=gm.retirement_security_pv,
                    baseline_value=base.retirement_security_pv,
                    delta=gm.delta_security_relative,
                )
            )
        rows.append(
            dict(
                market=result.market, policy=name, group=POPULATION,
                metric="gini_purchase_time",
                value=pm.gini_purchase_time,
                baseline_value=bench.gini_purchase_time,
                delta=pm.delta_gini_purchase_time,
            )
        )
        rows.append(
            dict(
                market=result.market, policy=name, group=POPULATION,
                metric="gini_retirement_security",
                value=pm.gini_retirement_security,
                baseline_value=bench.gini_retirement_security,
                delta=pm.delta_gini_retirement_security,
            )
        )
        for metric, value, base_value, delta in (
            ("federal_npv", pm.federal_npv, bench.federal_npv, pm.delta_federal),
            ("local_npv", pm.local_npv, bench.local_npv, pm.delta_local),
            ("government_npv", pm.government_npv, bench.government_npv, pm.delta_government),
        ):
            rows.append(
                dict(
                    market=result.market, policy=name, group=POPULATION,
                    metric=metric, value=value, baseline_value=base_value, delta=delta,
                )
            )
    return rows
