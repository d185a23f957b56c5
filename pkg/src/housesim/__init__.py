"""Monte Carlo cohort simulator of housing-deposit policies.

Simulates a cohort of renter households saving toward homeownership under
competing deposit policies (standard deposit, reduced deposit, early
pension withdrawal), with full Australian tax and pension rules, a
cascade scenario generator for the macro-financial environment, and an
endogenous feedback loop from aggregate purchases to property prices.
"""

__version__ = "0.1.0"

from .cohort import (  # noqa: F401
    ExperimentResult,
    MarketResult,
    MortalityTable,
    SimulationSetup,
    assign_targets,
    run_market_experiment,
    simulate_scenario,
)
from .config import ConfigError, ExperimentConfig, load_config  # noqa: F401
from .econ import (  # noqa: F401
    EconParams,
    EconState,
    EmpiricalResample,
    GaussianShocks,
    ResidualDraw,
    ZeroShocks,
    draw_residuals,
    init_economy,
    salary_step,
    step_economy,
)
from .household import Households, QuarterFlows, advance_quarter  # noqa: F401
from .metrics import gini, market_report, policy_metrics  # noqa: F401
from .output import emit_plot_data, run  # noqa: F401
from .rules import (  # noqa: F401
    PolicyConfig,
    RuleSet,
    age_pension,
    income_tax_quarterly,
    min_drawdown_rate,
    policy_presets,
    property_transfer_tax,
    super_taxes,
    withdrawal_amounts,
)
