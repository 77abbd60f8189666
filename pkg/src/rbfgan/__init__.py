"""GANs with radial-basis-function discriminators for flow-field data."""
from ._backend import backend, set_backend, use_numba
from .arch import ArchSpec, parse_architecture
from .checkpoint import checkpoint_load, checkpoint_save
from .config import PROFILES, ExperimentConfig, resolve_config
from .datasets import (
    DESK_BURGERS_GRID,
    FULL_BURGERS_GRID,
    SCHEMAS,
    Dataset,
    GridSpec,
    NormStats,
    burgers_generate,
    burgers_oracle_solve,
    burgers_solution,
    csv_load,
    csv_save,
    denormalize,
    normalize,
    split,
)
from .errors import *  # noqa: F401,F403
from .gan import (
    BurgersEvaluator,
    GanConfig,
    GanModel,
    Network,
    TrainingTrace,
    build_network,
    d_loss,
    g_loss,
    generate,
    generate_conditional,
    train,
    train_regressor,
)
from .kernels import SIGMA_MIN, KernelKind, kernel_eval, kernel_grad
from .layers import DenseLayer, RbfClusterLayer, RbfLayer, RbfOutput, rbf_forward
from .metrics import MetricReport, eta, interval_std, mode_coverage, mse, mspe
from .tensor import Adam, AdamState, SeededRng, adam_step, matmul

__version__ = "0.1.0"
