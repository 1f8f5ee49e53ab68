"""Diffusion-based interventional sampling on structural causal models."""

from .graph import (
    CycleError,
    Dag,
    Path,
    blocks,
    descendants,
    find_adjustment_set,
    is_backdoor_path,
    make_dag,
    parse_dag_text,
    format_dag_text,
    path_blocked,
    satisfies_backdoor,
    topological_order,
    undirected_paths,
)
from .scm import (
    Intervention,
    MaskedColumnError,
    SampleMatrix,
    Scm,
    apply_do,
    ate,
    builtin_scm,
    normalize,
    sample_interventional,
    sample_observational,
)
from .neural import Batch, NetSpec, NodeModel, OptimizerState, forward, loss_and_gradient, optimizer_step
from .diffusion import (
    AdjustmentSetNotFoundError,
    DecodeDivergedError,
    NoiseSchedule,
    TrainConfig,
    TrainedCausalModel,
    decode,
    forward_noise,
    load_bundle,
    make_schedule,
    sample_bdcm,
    sample_dcm,
    save_bundle,
    train_bdcm,
    train_dcm,
    with_query,
)
from .metrics import KernelSpec, median_heuristic, mmd
from .harness import ExperimentConfig, ResultRow, ate_report, emit_histogram, run_experiment

__version__ = "0.1.0"
