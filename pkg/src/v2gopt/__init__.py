"""Battery-aware V2G smart charging.

Convex data-driven degradation models (input-convex networks) plus a
projected-gradient optimizer that schedules charging against a price
signal over a feasible energy polytope.
"""

__version__ = "0.1.0"

from .exceptions import (
    ConfigError,
    DataFormatError,
    DegenerateMetricError,
    InfeasibleProblemError,
    NetworkShapeError,
    NonFiniteValueError,
    ProjectionError,
    TrainingDivergedError,
    V2gOptError,
)
from .activations import get_activation
from .icnn import (
    FicnnArch,
    FicnnWeights,
    InputScaler,
    PicnnArch,
    PicnnWeights,
    enforce_convexity,
    ficnn_forward,
    init_ficnn,
    init_picnn,
    load_weights,
    picnn_backward,
    picnn_forward,
    picnn_forward_batch,
    picnn_value_and_grads,
    save_weights,
)
from .metrics import FitReport, fit_report, r_squared
from .data import (
    CyclingRecord,
    DegradationSample,
    OracleParams,
    featurize,
    generate_synthetic_fleet,
    load_cycling_csv,
    load_samples_csv,
    write_cycling_csv,
    write_samples_csv,
)
from .training import TrainConfig, TrainReport, train
from .objectives import (
    ChargingProblem,
    PackParams,
    TariffProfile,
    TempForecast,
    charging_cost,
    degradation_cost,
    objective_gradient,
    objective_terms,
    total_objective,
)
from .feasible import FeasibleSet
from .config import RunConfig, derive_gamma
from .solver import Schedule, SolveConfig, initial_point, solve
from .sweep import DEFAULT_RHOS, TradeoffPoint, sweep, write_sweep_csv

__all__ = [
    "ChargingProblem",
    "ConfigError",
    "CyclingRecord",
    "DEFAULT_RHOS",
    "DataFormatError",
    "DegenerateMetricError",
    "DegradationSample",
    "FeasibleSet",
    "FicnnArch",
    "FicnnWeights",
    "FitReport",
    "InfeasibleProblemError",
    "InputScaler",
    "NetworkShapeError",
    "NonFiniteValueError",
    "OracleParams",
    "PackParams",
    "PicnnArch",
    "PicnnWeights",
    "ProjectionError",
    "RunConfig",
    "Schedule",
    "SolveConfig",
    "TariffProfile",
    "TempForecast",
    "TradeoffPoint",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "V2gOptError",
    "__version__",
    "charging_cost",
    "degradation_cost",
    "derive_gamma",
    "enforce_convexity",
    "featurize",
    "ficnn_forward",
    "fit_report",
    "generate_synthetic_fleet",
    "get_activation",
    "init_ficnn",
    "init_picnn",
    "initial_point",
    "load_cycling_csv",
    "load_samples_csv",
    "load_weights",
    "objective_gradient",
    "objective_terms",
    "picnn_backward",
    "picnn_forward",
    "picnn_forward_batch",
    "picnn_value_and_grads",
    "r_squared",
    "save_weights",
    "solve",
    "sweep",
    "total_objective",
    "train",
    "write_cycling_csv",
    "write_samples_csv",
    "write_sweep_csv",
]
