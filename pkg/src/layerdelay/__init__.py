"""Expected download delay of layered erasure coding: HARQ-style physical
layer redundancy against rateless packet-level coding, point-to-point and
multicast."""

__version__ = "0.1.0"

from .distributions import (
    ConvergenceError,
    ErasureProb,
    NegBinomialParams,
    approx_grabner,
    approx_improved,
    approx_lln,
    max_orderstat_mean_exact,
    nb_cdf,
    nb_pmf,
    packet_erasure_prob,
    packet_success_prob,
)
from .schemes import (
    BudgetOutcome,
    CodeConfig,
    DelayEstimate,
    InfiniteDelayError,
    Method,
    Scenario,
    Scheme,
    decode_prob_within_budget,
    expected_delay,
    fir_expected_delay,
    fir_expected_symbol_budget,
    fr_expected_delay,
    iir_expected_delay,
)
from .montecarlo import (
    SimResult,
    SimulationPlan,
    sample_negative_binomial,
    simulate,
    simulate_max_orderstat,
)
from .optimize import (
    OptimizationResult,
    compare_multicast,
    find_crossover_users,
    optimize_ns,
)
from .experiments import (
    ConfigError,
    ExperimentSpec,
    ResultTable,
    load_spec,
    reproduce_figure,
    run_experiment,
)
