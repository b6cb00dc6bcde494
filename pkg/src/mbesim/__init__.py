"""Pseudo-spectral simulator and verification harness for thin-film growth
equations u_t + Lap^2 u + div J(grad u) = 0 on a periodic box."""

from .spectral import (
    Field,
    GridSpec,
    NormReport,
    VectorField,
    dealias,
    joint_norm,
    lp_norm,
    norm_report,
    spectral_divergence,
    spectral_gradient,
    w1p_norm,
)
from .propagator import (
    KernelScalingReport,
    Multiplier,
    apply_semigroup,
    kernel_physical,
    phi1_multiplier,
    verify_kernel_scaling,
)
from .currents import (
    ComponentRationalCurrent,
    CurrentModel,
    PowerLawCurrent,
    RostKrugCurrent,
    ZeroCurrent,
    current_from_config,
    evaluate_current,
    growth_check,
)
from .solver import (
    BlowUpError,
    IterationStudy,
    NormSeries,
    SolverConfig,
    StepSizeError,
    Trajectory,
    etd2_step,
    iteration_study,
    picard_step,
    solve,
)
from .inequalities import (
    BihariOutOfDomain,
    BihariProblem,
    StraussCase,
    beta_integral_constant,
    bihari_bound,
    bihari_verify,
    gagliardo_spot_check,
    strauss_check,
    young_check,
)
from .initial_data import make_initial_data
from .analysis import (
    DecayFit,
    check_coarseness,
    check_gradient_bounds,
    check_growth,
    check_interpolated_decay,
    exponent_chain,
    fit_exponent,
)
from .experiments import (
    ExperimentConfig,
    amplitude_scan,
    bounds_lab_suite,
    resolve_config,
    run_experiment,
    verify_bounds_on_dir,
)

__version__ = "0.1.0"
