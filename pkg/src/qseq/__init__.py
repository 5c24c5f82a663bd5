"""qseq: recurrent quantum-circuit samplers for binary stochastic processes.

Subpackages: qsim (pure-state simulator), ansatz (circuit templates, recurrent
models, canonical form), stochproc (target processes and estimation), metrics
(divergence rates), gradtrain (shift-rule gradients and training), cli.
"""
from .ansatz import (
    CanonicalForm,
    CircuitTemplate,
    ConditionalView,
    KrausModel,
    RecurrentModel,
    build_born_machine,
    build_recurrent_hea,
    build_universal_1q_memory,
    conditional_distribution,
    cs_canonical_form,
    joint_distribution,
    kraus_from_step,
    sample_string,
)
from .gradtrain import (
    AdamState,
    CostWeights,
    GradientEstimate,
    TrainConfig,
    TrainResult,
    adam_step,
    distortion_gradient,
    exact_gradient,
    exact_shift_gradient,
    expected_cost,
    finite_difference,
    gradient_landscape_scan,
    stochastic_shift_gradient,
    train,
)
from .metrics import co_emission, kl_rate, metric_report, overlap_terms
from .qsim import Gate, StateVector, append_fresh_qubit, apply_gate, measure_branch
from .stochproc import (
    ConditionalTable,
    HiddenMarkovModel,
    Trajectory,
    count_windows,
    sample_trajectory,
    stationary_distribution,
    true_conditional,
    uniform_renewal,
)

__version__ = "0.1.0"
