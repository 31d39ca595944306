"""Two-way finite automata with quantum and classical states.

Exact simulation and closed-form analysis of constant-size-register
two-way automata: the machine model and validator (``core``), exact
big-integer transform algebra (``exact_linalg``), reference machine
builders (``zoo``), probability analysis (``analysis``), seeded Monte
Carlo execution (``engine``), and a machine file format (``machine_io``).
"""
from .analysis import (
    HaltingDistribution,
    PassProbabilities,
    aggregate_halting,
    anbn_pass_probs,
    fit_runtime_exponent,
    palindrome_pass_probs,
    rotation_gap,
    verify_k_closure,
    verify_separation,
    walk_hit_probability,
)
from .core import (
    Configuration,
    MachineSpec,
    Measurement,
    Outcome,
    PlanarRotation,
    Terminal,
    Unitary,
    ValidationReport,
    Verdict,
    initial_configuration,
    step,
    validate_machine,
)
from .engine import (
    SplitMix64,
    Trace,
    TrialStats,
    run_trial,
    run_trials,
    trace,
)
from .exact_linalg import (
    ScaledVec3,
    exact_apply,
    f_value,
    in_K,
    residual_norm_sq,
)
from .zoo import (
    AnbnParams,
    PalindromeParams,
    QubitState,
    build_anbn,
    build_palindrome_3state,
    build_palindrome_single_qubit,
    phi_map,
    u_hat,
)

__version__ = "0.1.0"
