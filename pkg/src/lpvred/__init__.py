"""Joint state-order and scheduling-dimension reduction of affine LPV-SS models.

Dense tensor arithmetic and decompositions (HOSVD, TSVD) drive two reducers
behind a shared extended Petrov-Galerkin projection: moment matching from
reachability/observability tensors, and data-driven POD in four variants.
A mass-spring-damper benchmark with an exact LPV embedding, metrics and a
CLI round out the package.
"""

from .benchmark import (
    BenchmarkConfig,
    DatasetBundle,
    MsdChain,
    build_msd,
    discretize_euler,
    embed_lpv,
    gen_input,
    load_config,
    make_datasets,
    msd_rhs,
    simulate_nl,
)
from .decomp import HosvdResult, TsvdResult, hosvd, hosvd_truncate, matrix_svd, orth_union, tsvd
from .experiment import merge_reports, run_experiment, run_reducer
from .metrics import ReductionReport, impulse_error, matched_leading_count, nrmse
from .model import (
    AffineLpvSs,
    SchedulingMap,
    Trajectory,
    eval_matrices,
    markov_coefficient,
    param_count,
    simulate,
)
from .pod import (
    CostBreakdown,
    SnapshotSet,
    cost_eval,
    joint_tensor,
    pod_matrix,
    pod_tensor,
    pod_weighted,
    snapshot_matrices,
    verify_bounds,
    weighted_matrices,
)
from .projection import (
    ProjectionTriple,
    petrov_galerkin,
    project_signal,
    reduce_scheduling_sequence,
)
from .tensor import (
    Tensor,
    contract,
    fold,
    frobenius,
    inner,
    modal_rank,
    mode_product,
    mode_rank,
    outer_product,
    unfold,
    vec_product,
)
from .tmm import (
    MemoryBudgetError,
    RankConditionError,
    SubspaceSet,
    observability_tensor,
    obsv_spaces,
    reach_spaces,
    reachability_tensor,
    tmm_reduce,
)

__version__ = "0.1.0"
