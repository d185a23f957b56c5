"""Cohort simulator: households x quarters x scenarios with demand feedback.

A scenario is one joint path of macro-financial shocks applied to the
whole cohort.  Within a scenario the quarter loop is sequential: the
economy steps first (consuming last quarter's endogenous demand growth),
households update in parallel array form, and the count of new owners is
aggregated into this quarter's demand growth for the next step.

Common random numbers: residual draws are seeded from
(seed, scenario, quarter) and survival paths from (seed, scenario), never
from the policy, so competing policies consume bit-identical randomness
and differences are attributable to the policy alone.
"""
from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Callable, Optional

import numpy as np

from .econ import (
    EconParams,
    EconState,
    ResidualDraw,
    draw_residuals,
    init_economy,
    step_economy,
    with_demand_growth,
    zero_residuals,
)
from .household import Households, advance_quarter
from .rules import PolicyConfig, RuleSet

ENTRY_AGE = 25
N_INCOME_GROUPS = 5

# Interpolated income percentiles at age 25 (quarterly dollars)
INITIAL_SALARIES = np.array([3_250.0, 7_937.50, 12_625.0, 17_312.50, 22_000.0])

# Equal-affordability market: every group targets the same price-to-income
# multiple.  Supply-constrained market: targets span a fixed price range,
# which is ~92x quarterly income for the lowest group and ~45.5x for the top.
EQUAL_AFFORDABILITY_MULTIPLE = 61.5
SUPPLY_CONSTRAINED_RANGE = (300_000.0, 1_000_000.0)

MARKET_STRUCTURES = ("equal_affordability", "supply_constrained")

# Seed-stream tags so survival and residual draws never collide
_SURVIVAL_STREAM = 101
_RESIDUAL_STREAM = 202


class ScenarioError(RuntimeError):
    """A scenario produced non-finite balances or rejected a shock draw."""


def assign_targets(market_structure: str, income_group):
    """Target property price at t=0 for a 1-based income group."""
    k = np.asarray(income_group)
    if np.any((k < 1) | (k > N_INCOME_GROUPS)):
        raise ValueError(f"income group must be in 1..{N_INCOME_GROUPS}")
    if market_structure == "equal_affordability":
        price = EQUAL_AFFORDABILITY_MULTIPLE * INITIAL_SALARIES[k - 1]
    elif market_structure == "supply_constrained":
        low, high = SUPPLY_CONSTRAINED_RANGE
        price = low + (k - 1) / (N_INCOME_GROUPS - 1) * (high - low)
    else:
        raise ValueError(f"unknown market structure {market_structure!r}")
    if np.ndim(income_group) == 0:
        return float(price)
    return price


@dataclass
class MortalityTable:
    """Annual death probabilities by age and sex, converted to quarterly."""

    ages: np.ndarray
    qx_male: np.ndarray
    qx_female: np.ndarray

    @classmethod
    def from_csv(cls, path) -> "MortalityTable":
        ages, qm, qf = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"age", "qx_male", "qx_female"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"mortality table {path} needs columns {sorted(required)}")
            for row in reader:
                ages.append(int(row["age"]))
                qm.append(float(row["qx_male"]))
                qf.append(float(row["qx_female"]))
        return cls(np.array(ages), np.array(qm), np.array(qf))

    @classmethod
    def bundled_default(cls) -> "MortalityTable":
        path = os.path.join(os.path.dirname(__file__), "data", "mortality_au_2020_22.csv")
        return cls.from_csv(path)

    def quarterly_survival(self, horizon: int) -> np.ndarray:
        """(2, horizon) array of per-quarter survival probabilities
        (row 0 female, row 1 male); annual q converted via (1-q)^(1/4)."""
        ages_by_quarter = ENTRY_AGE + np.arange(horizon) // 4
        out = np.zeros((2, horizon))
        for row, qx in enumerate((self.qx_female, self.qx_male)):
            lookup = np.interp(ages_by_quarter, self.ages, qx)
            beyond = ages_by_quarter > self.ages.max()
            lookup = np.where(beyond, 1.0, lookup)
            out[row] = (1.0 - np.clip(lookup, 0.0, 1.0)) ** 0.25
        return out


@dataclass
class SimulationSetup:
    """Everything a worker needs to simulate one scenario."""

    n_households: int
    horizon: int
    seed: int
    market: str
    econ_params: EconParams
    rules: RuleSet
    policies: list[PolicyConfig]
    benchmark: PolicyConfig
    dependence: object
    mortality: MortalityTable
    survival_fixed_across_scenarios: bool = False
    discounting: str = "nominal"

    def group_assignment(self) -> np.ndarray:
        """Households split evenly across income groups (0-based), ids ordered."""
        return np.arange(self.n_households) % N_INCOME_GROUPS


@dataclass
class PolicyScenarioOutcome:
    """Per-household outcome records plus the scenario's market path."""

    scenario_id: int
    policy: str
    price_index: np.ndarray          # (horizon,)
    new_owner_counts: np.ndarray     # eta, (horizon,)
    demand_growth: np.ndarray        # (horizon,)
    purchase_quarter: np.ndarray     # (n,), -1 if never an owner at exit
    death_quarter: np.ndarray        # (n,)
    defaulted: np.ndarray            # (n,) bool
    a_at_retirement: np.ndarray      # (n,)
    retirement_income_pv: np.ndarray  # (n,) discounted to retirement
    federal_npv: np.ndarray          # (n,) discounted to t=0
    local_npv: np.ndarray            # (n,)
    diagnostics: dict
    residual_hash: str


def _survival_rng(setup: SimulationSetup, scenario_id: int) -> np.random.Generator:
    sid = 0 if setup.survival_fixed_across_scenarios else scenario_id
    return np.random.default_rng(np.random.SeedSequence((setup.seed, sid, _SURVIVAL_STREAM)))


def _residual_rng(setup: SimulationSetup, scenario_id: int, quarter: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence((setup.seed, scenario_id, _RESIDUAL_STREAM, quarter))
    )


def draw_survival_paths(setup: SimulationSetup, scenario_id: int) -> np.ndarray:
    """Death quarter for every household (horizon if still alive at the end).

    Sex alternates deterministically with household id (even female, odd
    male) so the assignment is common across scenarios and policies.
    """
    rng = _survival_rng(setup, scenario_id)
    n, horizon = setup.n_households, setup.horizon
    survival = setup.mortality.quarterly_survival(horizon)
    sex_row = (np.arange(n) % 2).astype(int)
    u = rng.random((n, horizon))
    dies = u >= survival[sex_row, :]
    any_death = dies.any(axis=1)
    first = dies.argmax(axis=1)
    return np.where(any_death, first + 1, horizon)


def draw_scenario_residuals(setup: SimulationSetup, scenario_id: int) -> list[ResidualDraw]:
    """Residual draws for quarters 1..horizon-1 (quarter 0 uses initial values)."""
    draws = []
    for t in range(1, setup.horizon):
        rng = _residual_rng(setup, scenario_id, t)
        draws.append(draw_residuals(rng, setup.n_households, setup.dependence))
    return draws


def make_cohort(setup: SimulationSetup, death_quarter: np.ndarray) -> Households:
    group = setup.group_assignment()
    salary0 = INITIAL_SALARIES[group]
    return Households(
        group=group,
        target_price0=assign_targets(setup.market, group + 1),
        salary0=salary0,
        death_quarter=death_quarter,
        rent0=setup.rules.rent_to_income * salary0,
    )


def _quarter_discount(state: EconState, prev: EconState, discounting: str) -> float:
    """Discount factor covering the quarter ending at ``state.t``."""
    nominal = 1.0 / (1.0 + prev.nominal_cash)
    if discounting == "real":
        return nominal * float(np.exp(state.cpi_growth))
    return nominal


def run_policy_scenario(
    setup: SimulationSetup,
    scenario_id: int,
    policy: PolicyConfig,
    draws: list[ResidualDraw],
    death_quarter: np.ndarray,
) -> PolicyScenarioOutcome:
    """Simulate one (scenario, policy) pair from pre-drawn randomness."""
    rules = setup.rules
    params = setup.econ_params
    horizon = setup.horizon
    n = setup.n_households
    retirement = rules.retirement_quarter

    hh = make_cohort(setup, death_quarter)
    econ = init_economy(params)
    prev2_rent_growth = econ.rent_growth

    price_index = np.zeros(horizon)
    eta_series = np.zeros(horizon, dtype=int)
    demand_series = np.zeros(horizon)

    a_at_retirement = np.zeros(n)
    retirement_income_pv = np.zeros(n)
    federal_npv = np.zeros(n)
    local_npv = np.zeros(n)
    discount = 1.0
    discount_at_retirement = None
    diagnostics = {"defaults": 0, "liquidations": 0, "purchases": 0, "salary_floor_hits": 0}
    stream = hashlib.sha256()

    n_owners_prev = 0
    eta_prev = 0
    prev_econ = econ

    for t in range(horizon):
        if t > 0:
            draw = draws[t - 1]
            stream.update(draw.macro_vector().tobytes())
            stream.update(np.float64(draw.eps_salary_common).tobytes())
            stream.update(np.asarray(draw.eps_salary_idio, dtype=np.float64).tobytes())
            try:
                new_econ = step_economy(econ, prev2_rent_growth, draw, econ.demand_growth, params)
            except Exception as exc:
                raise ScenarioError(
                    f"scenario {scenario_id} policy {policy.name}: rejected shock at quarter {t}: {exc}"
                ) from exc
            prev2_rent_growth = econ.rent_growth
            prev_econ, econ = econ, new_econ
            discount *= _quarter_discount(econ, prev_econ, setup.discounting)
            awe_systematic = econ.awe_growth - draw.eps_awe
            salary_inputs = (awe_systematic, draw.eps_salary_common, draw.eps_salary_idio, params)
        else:
            salary_inputs = None

        flows, diag = advance_quarter(hh, econ, prev_econ, policy, setup.benchmark, rules, salary_inputs)
        diagnostics["defaults"] += diag.defaults
        diagnostics["liquidations"] += diag.liquidations
        diagnostics["purchases"] += diag.purchases
        diagnostics["salary_floor_hits"] += diag.salary_floor_hits

        if not (np.all(np.isfinite(hh.savings)) and np.all(np.isfinite(hh.pension))):
            bad = np.flatnonzero(~(np.isfinite(hh.savings) & np.isfinite(hh.pension)))
            raise ScenarioError(
                f"scenario {scenario_id} policy {policy.name}: non-finite balance at "
                f"quarter {t}, households {bad[:10].tolist()}"
            )

        # Government flows, discounted to t=0
        federal_npv += discount * (
            flows.salary_tax
            + flows.savings_tax
            + flows.super_tax
            + flows.contribution_tax
            - flows.state_pension
        )
        local_npv += discount * (
            flows.transfer_tax_paid + rules.council_rate_share * flows.maintenance
        )

        # Retirement security inputs
        if t == retirement:
            discount_at_retirement = discount
            a_at_retirement = np.where(hh.active(t), hh.savings, 0.0)
        if t >= retirement and discount_at_retirement is not None:
            active = hh.active(t)
            retirement_income_pv += np.where(
                active,
                (discount / discount_at_retirement)
                * (flows.disposable_income - flows.housing_cost),
                0.0,
            )

        # Demand aggregation for the next quarter's price equation
        n_owners = int(np.count_nonzero(hh.owner & hh.active(t)))
        eta = max(0, n_owners - n_owners_prev)
        demand = float(np.log1p(eta) - np.log1p(eta_prev)) if t > 0 else 0.0
        econ = with_demand_growth(econ, demand)

        price_index[t] = econ.price_index
        eta_series[t] = eta
        demand_series[t] = demand
        n_owners_prev = n_owners
        eta_prev = eta

    return PolicyScenarioOutcome(
        scenario_id=scenario_id,
        policy=policy.name,
        price_index=price_index,
        new_owner_counts=eta_series,
        demand_growth=demand_series,
        purchase_quarter=hh.purchase_quarter.copy(),
        death_quarter=death_quarter.copy(),
        defaulted=hh.defaulted.copy(),
        a_at_retirement=a_at_retirement,
        retirement_income_pv=retirement_income_pv,
        federal_npv=federal_npv,
        local_npv=local_npv,
        diagnostics=diagnostics,
        residual_hash=stream.hexdigest(),
    )


def simulate_scenario(
    setup: SimulationSetup, scenario_id: int, policy: PolicyConfig
) -> PolicyScenarioOutcome:
    """Simulate one scenario for one policy, drawing randomness in place."""
    death_quarter = draw_survival_paths(setup, scenario_id)
    draws = draw_scenario_residuals(setup, scenario_id)
    return run_policy_scenario(setup, scenario_id, policy, draws, death_quarter)


def simulate_scenario_all_policies(
    setup: SimulationSetup, scenario_id: int
) -> dict[str, PolicyScenarioOutcome]:
    """One scenario under every configured policy, sharing the same draws."""
    death_quarter = draw_survival_paths(setup, scenario_id)
    draws = draw_scenario_residuals(setup, scenario_id)
    return {
        policy.name: run_policy_scenario(setup, scenario_id, policy, draws, death_quarter)
        for policy in setup.policies
    }


# ---------------------------------------------------------------------------
# Experiment-level aggregation


@dataclass
class PolicyOutcomes:
    """Outcomes stacked over scenarios: arrays of shape (m, ...)"""

    price_index: np.ndarray
    purchase_quarter: np.ndarray
    death_quarter: np.ndarray
    defaulted: np.ndarray
    a_at_retirement: np.ndarray
    retirement_income_pv: np.ndarray
    federal_npv: np.ndarray
    local_npv: np.ndarray
    residual_hashes: list[str]
    diagnostics: dict


@dataclass
class MarketResult:
    market: str
    group: np.ndarray
    benchmark_name: str
    horizon: int
    policies: dict[str, PolicyOutcomes]

    def price_ratio(self, policy: str) -> np.ndarray:
        """Per-scenario ratio of the policy price index to the benchmark's."""
        return self.policies[policy].price_index / self.policies[self.benchmark_name].price_index


@dataclass
class ExperimentResult:
    experiment_hash: str
    seed: int
    markets: dict[str, MarketResult]


_OUTCOME_FIELDS = (
    "price_index",
    "purchase_quarter",
    "death_quarter",
    "defaulted",
    "a_at_retirement",
    "retirement_income_pv",
    "federal_npv",
    "local_npv",
)


def _outcome_to_flat(outcomes: dict[str, PolicyScenarioOutcome]) -> dict[str, np.ndarray]:
    flat = {}
    for name, out in outcomes.items():
        for fieldname in _OUTCOME_FIELDS:
            flat[f"{name}|{fieldname}"] = getattr(out, fieldname)
        flat[f"{name}|residual_hash"] = np.frombuffer(
            bytes.fromhex(out.residual_hash), dtype=np.uint8
        )
        flat[f"{name}|diag"] = np.array(
            [
                out.diagnostics["defaults"],
                out.diagnostics["liquidations"],
                out.diagnostics["purchases"],
                out.diagnostics["salary_floor_hits"],
            ]
        )
    return flat


_WORKER_SETUP: Optional[SimulationSetup] = None


def _init_worker(setup: SimulationSetup):
    global _WORKER_SETUP
    _WORKER_SETUP = setup


def _run_one_scenario(scenario_id: int) -> tuple[int, dict[str, np.ndarray]]:
    return scenario_id, _outcome_to_flat(simulate_scenario_all_policies(_WORKER_SETUP, scenario_id))


def run_market_experiment(
    setup: SimulationSetup,
    n_scenarios: int,
    jobs: int = 1,
    checkpoint_dir: Optional[str] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> MarketResult:
    """All scenarios x policies for one market structure.

    Scenarios are independent work units; results merge deterministically
    by scenario id so worker count never changes the output.  With a
    checkpoint directory, completed scenarios are persisted and reruns
    resume from whatever already exists.
    """
    per_scenario: dict[int, dict[str, np.ndarray]] = {}
    pending = list(range(n_scenarios))

    if checkpoint_dir:
        os.makedirs(checkpoint_dir, exist_ok=True)
        still_pending = []
        for sid in pending:
            path = os.path.join(checkpoint_dir, f"{setup.market}_s{sid:05d}.npz")
            if os.path.exists(path):
                with np.load(path, allow_pickle=False) as data:
                    per_scenario[sid] = {k: data[k].copy() for k in data.files}
            else:
                still_pending.append(sid)
        pending = still_pending

    def _store(sid: int, flat: dict[str, np.ndarray]):
        per_scenario[sid] = flat
        if checkpoint_dir:
            path = os.path.join(checkpoint_dir, f"{setup.market}_s{sid:05d}.npz")
            tmp = path + ".tmp.npz"
            np.savez_compressed(tmp, **flat)
            os.replace(tmp, path)
        if progress:
            progress(len(per_scenario), n_scenarios)

    if jobs <= 1 or len(pending) <= 1:
        _init_worker(setup)
        for sid in pending:
            _store(*_run_one_scenario(sid))
    else:
        ctx = get_context("spawn")
        with ctx.Pool(processes=jobs, initializer=_init_worker, initargs=(setup,)) as pool:
            for sid, flat in pool.imap_unordered(_run_one_scenario, pending):
                _store(sid, flat)

    policy_names = [p.name for p in setup.policies]
    policies: dict[str, PolicyOutcomes] = {}
    order = sorted(per_scenario)
    for name in policy_names:
        stacked = {
            fieldname: np.stack([per_scenario[sid][f"{name}|{fieldname}"] for sid in order])
            for fieldname in _OUTCOME_FIELDS
        }
        hashes = [bytes(per_scenario[sid][f"{name}|residual_hash"]).hex() for sid in order]
        diag_matrix = np.stack([per_scenario[sid][f"{name}|diag"] for sid in order])
        diagnostics = {
            "defaults": int(diag_matrix[:, 0].sum()),
            "liquidations": int(diag_matrix[:, 1].sum()),
            "purchases": int(diag_matrix[:, 2].sum()),
            "salary_floor_hits": int(diag_matrix[:, 3].sum()),
        }
        policies[name] = PolicyOutcomes(
            price_index=stacked["price_index"],
            purchase_quarter=stacked["purchase_quarter"].astype(int),
            death_quarter=stacked["death_quarter"].astype(int),
            defaulted=stacked["defaulted"].astype(bool),
            a_at_retirement=stacked["a_at_retirement"],
            retirement_income_pv=stacked["retirement_income_pv"],
            federal_npv=stacked["federal_npv"],
            local_npv=stacked["local_npv"],
            residual_hashes=hashes,
            diagnostics=diagnostics,
        )
    return MarketResult(
        market=setup.market,
        group=setup.group_assignment(),
        benchmark_name=setup.benchmark.name,
        horizon=setup.horizon,
        policies=policies,
    )
