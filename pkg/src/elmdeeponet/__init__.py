"""ELM-DeepONet: DeepONets with frozen random branch/trunk features and a
closed-form least-squares output matrix."""

__version__ = "0.1.0"

from .linalg import (  # noqa: E402
    DegenerateSampleError,
    DimensionError,
    NumericalError,
    fit_bilinear,
    frobenius_norm,
    pseudoinverse,
    relative_l2_error,
)
from .grf import GrfConfig  # noqa: E402
from .features import FixedConvNet, FixedMlp, SinusoidalBasis, init_mlp, init_slfn  # noqa: E402
from .problems import OperatorDataset  # noqa: E402
from .model import ElmDeepONet, NotFittedError, assemble  # noqa: E402
from .harness import ExperimentConfig, emit_report, run_experiment, run_sweep  # noqa: E402

__all__ = [
    "DegenerateSampleError", "DimensionError", "NumericalError", "fit_bilinear",
    "frobenius_norm", "pseudoinverse", "relative_l2_error", "GrfConfig", "FixedConvNet",
    "FixedMlp", "SinusoidalBasis", "init_mlp", "init_slfn", "OperatorDataset",
    "ElmDeepONet", "NotFittedError", "assemble", "ExperimentConfig", "emit_report",
    "run_experiment", "run_sweep",
]
