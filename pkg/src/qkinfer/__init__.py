"""Desk-scale simulator and benchmark suite for quantum-kernel inference.

Builds the inference circuits exactly at statevector level, runs the seven
estimation strategies with precise query and gate accounting, and verifies
their scaling laws against closed-form budgets.
"""

from .calibration import CALIBRATION_VERSION, DEFAULTS, EstimatorConstants
from .coefkit import (
    CoefDecomposition,
    CoefficientVector,
    decompose,
    f_plus_minus_exact,
    pnorm,
)
from .costmodel import (
    GateCostModel,
    StrategyId,
    gates_per_query,
    mcx_cost,
    queries_theoretical,
    recommend,
    sandwich_check,
    strategy_from_name,
)
from .dataset import Dataset, default_dataset, default_query_point, load, random_dataset, save
from .estimate import (
    AmplitudeEstimate,
    GroverSpec,
    QueryCounter,
    grover_good_probability,
    median_amplify,
    qae_estimate,
    sample_probability,
)
from .featuremap import (
    FeatureMapSpec,
    TrainingSet,
    build_feature_circuit,
    f_exact,
    kernel_exact,
)
from .harness import (
    ExperimentPlan,
    ExperimentResult,
    bruteforce_allocation,
    emit,
    fit_loglog_slope,
    run_plan,
)
from .oracles import (
    OracleBundle,
    RegisterLayout,
    all_at_once_circuit,
    amplitude_encoding_circuit,
    build_bundle,
    coefficient_state_prep,
    training_set_oracle,
)
from .statevec import (
    Circuit,
    Gate,
    ProjectorSpec,
    QuantumState,
    WidthOverflowError,
    apply,
    controlled,
    measure_bits,
    projector_probability,
    zero_state,
)
from .strategies import (
    BudgetAllocation,
    EstimateReport,
    InferenceInstance,
    allocate_budget,
    infer,
    sign_of,
)

__version__ = "0.1.0"
