"""Quarterly macro-financial scenario engine.

Generates joint paths of CPI, wage, interest-rate, superannuation-return,
rent and property-price variables through a cascade of autoregressive
equations: each equation consumes the variables generated before it in a
fixed order.  Property price growth additionally takes last quarter's
endogenous housing-demand growth as a covariate, which is what couples
this engine to the cohort simulator.

Growth rates for the four index series (CPI, wages, rent, prices) are
log-growths: index(t) = index(t-1) * exp(growth(t)).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

QUARTERS_PER_YEAR = 4

# Column order of the joint macro shock vector, shared by all dependence
# models and by the empirical residual CSV format.
MACRO_SHOCK_NAMES = ("cpi", "awe", "r", "s", "f", "rent", "price")


class ShockError(ValueError):
    """A residual draw contained non-finite values."""


class ConfigurationError(ValueError):
    """Inputs required by the configuration are missing or inconsistent."""


@dataclass(frozen=True)
class EconParams:
    """Coefficients of the cascade equations (quarterly frequency)."""

    # CPI growth, AR(1) around its mean
    cpi_mean: float = 0.0065
    cpi_ar1: float = 0.2897
    # Wage (AWE) growth, AR(1) with lagged CPI growth
    awe_const: float = 0.0021
    awe_ar1: float = 0.5716
    awe_cpi_coef: float = 0.2500
    # Real cash rate, zero-mean AR(1)
    rcash_ar1: float = 0.6080
    # Borrowing spread: random walk clamped to [floor, cap]
    spread_floor: float = 0.0034
    spread_cap: float = 0.011
    # Superannuation return = cash rate + premium, per quarter
    super_premium: float = 0.01
    # When set, replaces the cash-rate link: r_F = super_return_mean + shock.
    # Used by the sensitivity run that matches super to property growth.
    super_return_mean: Optional[float] = None
    # Rent growth: AR(2) around its mean plus an error-correction term
    # computed from the rent, price and wage index *levels* (all normalised
    # to 1 at t=0, so the long-run relation starts almost exactly balanced).
    rent_mean: float = 0.007
    rent_ar1: float = 0.6533
    rent_ar2: float = 0.2832
    rent_ecm_coef: float = -0.0117
    ecm_const: float = 0.1386
    ecm_price_coef: float = 0.2336
    ecm_awe_coef: float = 1.0943
    # Property price growth: AR(1) around its mean plus lagged demand growth
    price_mean: float = 0.01
    price_ar1: float = 0.6988
    price_demand_coef: float = 0.1293
    # Deterministic age profile of salary growth: exp(a0 - a1*t/4) - 1
    age_profile_a0: float = 0.033091
    age_profile_a1: float = 0.001462
    # Initial rates, annualised gross (value^(1/4) - 1 gives the quarter rate)
    cash_rate_initial_annual: float = 1.0435
    borrow_rate_initial_annual: float = 1.0599
    # Initial growth values; None means "start at the unconditional mean"
    cpi_growth_initial: Optional[float] = None
    awe_growth_initial: Optional[float] = None
    rent_growth_initial: Optional[float] = None
    price_growth_initial: Optional[float] = None
    # Salaries are floored here after shocks so tax functions stay defined
    salary_floor: float = 1.0

    def __post_init__(self):
        if not abs(self.cpi_ar1) < 1:
            raise ConfigurationError(f"cpi_ar1 must satisfy |ar1| < 1, got {self.cpi_ar1}")
        if not abs(self.rcash_ar1) < 1:
            raise ConfigurationError(f"rcash_ar1 must satisfy |ar1| < 1, got {self.rcash_ar1}")
        if self.spread_floor > self.spread_cap:
            raise ConfigurationError(
                f"spread_floor {self.spread_floor} exceeds spread_cap {self.spread_cap}"
            )

    @property
    def awe_mean(self) -> float:
        """Unconditional mean of wage growth given mean CPI growth."""
        return (self.awe_const + self.awe_cpi_coef * self.cpi_mean) / (1.0 - self.awe_ar1)


@dataclass(frozen=True)
class EconState:
    """One quarter's realisation of every macro-financial series."""

    t: int
    cpi_growth: float
    awe_growth: float
    cpi_index: float
    awe_index: float
    real_cash: float       # real cash rate
    nominal_cash: float    # savings rate r_A, floored at 0
    spread: float          # borrowing spread over cash, clamped
    borrow_rate: float     # mortgage rate r_B, floored at 0
    super_return: float    # superannuation return r_F
    rent_growth: float
    rent_index: float
    price_growth: float
    price_index: float
    demand_growth: float   # endogenous housing demand growth (set by the cohort loop)


@dataclass
class ResidualDraw:
    """Joint shock vector for one quarter.

    The seven macro shocks carry whatever contemporaneous dependence the
    configured model produces; draws are independent across quarters.  The
    salary shocks split the wage-residual variance 50/50 between a common
    (scenario-wide) component and per-household idiosyncratic components.
    """

    eps_cpi: float
    eps_awe: float
    eps_r: float
    eps_s: float
    eps_f: float
    eps_rent: float
    eps_price: float
    eps_salary_common: float
    eps_salary_idio: np.ndarray

    def macro_vector(self) -> np.ndarray:
        return np.array(
            [self.eps_cpi, self.eps_awe, self.eps_r, self.eps_s,
             self.eps_f, self.eps_rent, self.eps_price]
        )

    def validate(self):
        vec = self.macro_vector()
        if not np.all(np.isfinite(vec)) or not math.isfinite(self.eps_salary_common):
            raise ShockError(f"non-finite macro shock in draw: {vec}")
        if not np.all(np.isfinite(self.eps_salary_idio)):
            bad = np.flatnonzero(~np.isfinite(self.eps_salary_idio))
            raise ShockError(f"non-finite idiosyncratic salary shock at households {bad[:10]}")


def zero_residuals(n_households: int) -> ResidualDraw:
    return ResidualDraw(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, np.zeros(n_households))


class ZeroShocks:
    """Degenerate dependence model: every shock is zero (deterministic runs)."""

    def draw(self, rng: np.random.Generator, n_households: int) -> ResidualDraw:
        return zero_residuals(n_households)


_HALF_VAR_SCALE = 1.0 / math.sqrt(2.0)


class GaussianShocks:
    """Correlated Gaussian shocks with per-series standard deviations.

    The correlation matrix defaults to the identity; the common salary
    shock is the wage shock scaled by 1/sqrt(2) and the idiosyncratic
    shocks are independent draws at the same reduced variance, so total
    salary-shock variance equals the wage-residual variance.
    """

    def __init__(self, sigmas: Sequence[float], correlation: Optional[np.ndarray] = None):
        self.sigmas = np.asarray(sigmas, dtype=float)
        if self.sigmas.shape != (7,):
            raise ConfigurationError("GaussianShocks needs exactly 7 standard deviations")
        if np.any(self.sigmas < 0):
            raise ConfigurationError("shock standard deviations must be >= 0")
        if correlation is None:
            self._chol = None
        else:
            corr = np.asarray(correlation, dtype=float)
            if corr.shape != (7, 7):
                raise ConfigurationError("correlation matrix must be 7x7")
            if not np.allclose(corr, corr.T):
                raise ConfigurationError("correlation matrix must be symmetric")
            try:
                self._chol = np.linalg.cholesky(corr)
            except np.linalg.LinAlgError as exc:
                raise ConfigurationError("correlation matrix is not positive definite") from exc
        self.correlation = correlation

    def draw(self, rng: np.random.Generator, n_households: int) -> ResidualDraw:
        z = rng.standard_normal(7)
        if self._chol is not None:
            z = self._chol @ z
        eps = self.sigmas * z
        sigma_awe = self.sigmas[MACRO_SHOCK_NAMES.index("awe")]
        idio = rng.standard_normal(n_households) * (sigma_awe * _HALF_VAR_SCALE)
        return ResidualDraw(*eps, eps[1] * _HALF_VAR_SCALE, idio)


class EmpiricalResample:
    """Joint resampling of historical residual rows.

    Each quarter one full row is drawn, preserving the contemporaneous
    dependence across series nonparametrically.  Idiosyncratic salary
    shocks resample the wage-residual column, scaled to half variance.
    """

    def __init__(self, residuals: np.ndarray):
        residuals = np.asarray(residuals, dtype=float)
        if residuals.ndim != 2 or residuals.shape[1] != 7:
            raise ConfigurationError("residual table must have shape (n, 7)")
        if residuals.shape[0] < 1:
            raise ConfigurationError("residual table is empty")
        if not np.all(np.isfinite(residuals)):
            raise ConfigurationError("residual table contains non-finite values")
        self.residuals = residuals
        self._awe_col = MACRO_SHOCK_NAMES.index("awe")

    @classmethod
    def from_csv(cls, path) -> "EmpiricalResample":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ConfigurationError(f"residual file {path} is empty")
            missing = [c for c in MACRO_SHOCK_NAMES if c not in reader.fieldnames]
            if missing:
                raise ConfigurationError(
                    f"residual file {path} is missing columns: {', '.join(missing)}"
                )
            rows = [[float(row[c]) for c in MACRO_SHOCK_NAMES] for row in reader]
        if not rows:
            raise ConfigurationError(f"residual file {path} has a header but no rows")
        return cls(np.array(rows))

    def draw(self, rng: np.random.Generator, n_households: int) -> ResidualDraw:
        k = self.residuals.shape[0]
        row = self.residuals[rng.integers(k)]
        idio_rows = rng.integers(k, size=n_households)
        idio = self.residuals[idio_rows, self._awe_col] * _HALF_VAR_SCALE
        return ResidualDraw(*row, row[self._awe_col] * _HALF_VAR_SCALE, idio)


def draw_residuals(rng_stream: np.random.Generator, n_households: int, dependence_model) -> ResidualDraw:
    """Draw one quarter's joint shocks.

    The caller seeds ``rng_stream`` deterministically from
    (scenario id, quarter) and never from the policy, so identical
    scenario coordinates yield identical draws under every policy regime
    (the common-random-numbers contract).
    """
    draw = dependence_model.draw(rng_stream, n_households)
    draw.validate()
    return draw


def quarterly_rate(annual_gross: float) -> float:
    """Convert an annual gross factor (e.g. 1.0435) to a quarterly rate."""
    return annual_gross ** (1.0 / QUARTERS_PER_YEAR) - 1.0


def init_economy(params: EconParams) -> EconState:
    """Quarter-0 state: indices at 1, rates at their published starting values.

    The real cash rate and spread are backed out of the cascade identities
    so the first stochastic step is consistent with the t=0 rates.  Growth
    series start at their unconditional means unless overridden.
    """
    r_a0 = quarterly_rate(params.cash_rate_initial_annual)
    r_b0 = quarterly_rate(params.borrow_rate_initial_annual)
    cpi0 = params.cpi_growth_initial if params.cpi_growth_initial is not None else params.cpi_mean
    awe0 = params.awe_growth_initial if params.awe_growth_initial is not None else params.awe_mean
    rent0 = params.rent_growth_initial if params.rent_growth_initial is not None else params.rent_mean
    price0 = params.price_growth_initial if params.price_growth_initial is not None else params.price_mean
    if params.super_return_mean is not None:
        r_f0 = params.super_return_mean
    else:
        r_f0 = r_a0 + params.super_premium
    return EconState(
        t=0,
        cpi_growth=cpi0,
        awe_growth=awe0,
        cpi_index=1.0,
        awe_index=1.0,
        real_cash=math.log1p(r_a0) - cpi0,
        nominal_cash=r_a0,
        spread=math.log1p(r_b0) - r_a0,
        borrow_rate=r_b0,
        super_return=r_f0,
        rent_growth=rent0,
        rent_index=1.0,
        price_growth=price0,
        price_index=1.0,
        demand_growth=0.0,
    )


def step_economy(
    prev: EconState,
    prev2_rent_growth: float,
    shocks: ResidualDraw,
    demand_growth_lag: float,
    params: EconParams,
) -> EconState:
    """Advance the cascade one quarter.

    ``demand_growth_lag`` is the life-cycle model's demand growth for the
    previous quarter; it enters only the price equation.  Raises
    ShockError on non-finite shocks rather than clamping them.
    """
    macro = shocks.macro_vector()
    if not np.all(np.isfinite(macro)):
        raise ShockError(f"non-finite shock at quarter {prev.t + 1}: {macro}")

    p = params
    cpi = p.cpi_mean + p.cpi_ar1 * (prev.cpi_growth - p.cpi_mean) + shocks.eps_cpi
    awe = p.awe_const + p.awe_ar1 * prev.awe_growth + p.awe_cpi_coef * prev.cpi_growth + shocks.eps_awe
    real_cash = p.rcash_ar1 * prev.real_cash + shocks.eps_r
    nominal_cash = max(0.0, math.exp(real_cash + cpi) - 1.0)
    spread = max(p.spread_floor, min(p.spread_cap, prev.spread + shocks.eps_s))
    borrow_rate = max(0.0, math.exp(spread + nominal_cash) - 1.0)
    if p.super_return_mean is not None:
        super_return = p.super_return_mean + shocks.eps_f
    else:
        super_return = nominal_cash + p.super_premium + shocks.eps_f
    # Error-correction term on last quarter's index levels
    ecm = (
        prev.rent_index
        - p.ecm_const
        + p.ecm_price_coef * prev.price_index
        - p.ecm_awe_coef * prev.awe_index
    )
    rent_growth = (
        p.rent_mean
        + p.rent_ar1 * (prev.rent_growth - p.rent_mean)
        + p.rent_ar2 * (prev2_rent_growth - p.rent_mean)
        + p.rent_ecm_coef * ecm
        + shocks.eps_rent
    )
    price_growth = (
        p.price_mean
        + p.price_ar1 * (prev.price_growth - p.price_mean)
        + p.price_demand_coef * demand_growth_lag
        + shocks.eps_price
    )
    return EconState(
        t=prev.t + 1,
        cpi_growth=cpi,
        awe_growth=awe,
        cpi_index=prev.cpi_index * math.exp(cpi),
        awe_index=prev.awe_index * math.exp(awe),
        real_cash=real_cash,
        nominal_cash=nominal_cash,
        spread=spread,
        borrow_rate=borrow_rate,
        super_return=super_return,
        rent_growth=rent_growth,
        rent_index=prev.rent_index * math.exp(rent_growth),
        price_growth=price_growth,
        price_index=prev.price_index * math.exp(price_growth),
        demand_growth=0.0,
    )


def with_demand_growth(state: EconState, demand_growth: float) -> EconState:
    """Return the state with the cohort's aggregated demand growth filled in."""
    return replace(state, demand_growth=demand_growth)


def age_profile_growth(t, params: EconParams):
    """Deterministic age component of salary growth at quarter ``t``."""
    return np.exp(params.age_profile_a0 - params.age_profile_a1 * np.asarray(t) / 4.0) - 1.0


def salary_step(prev_salary, t: int, awe_growth, common_shock, idio_shock, params: EconParams):
    """One quarter of salary growth.

    ``awe_growth`` must be the *systematic* wage growth for the quarter
    (the cascade equation without its residual); household dispersion
    enters through ``common_shock`` and ``idio_shock``, each carrying half
    the wage-residual variance.  Returns (salary, floored_count).
    """
    growth = (1.0 + age_profile_growth(t, params)) * (1.0 + awe_growth + common_shock + idio_shock)
    salary = np.asarray(prev_salary) * growth
    floored = int(np.count_nonzero(salary < params.salary_floor))
    salary = np.maximum(salary, params.salary_floor)
    if np.ndim(prev_salary) == 0:
        return float(salary), floored
    return salary, floored
