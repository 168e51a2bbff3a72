"""Design planning for RCTs whose treatment response is a two-component
normal mixture (placebo responders vs. drug responders).

Plans one-stage, two-stage and multicenter step-up designs with guaranteed
error rates over a region of strong effect, and validates them by Monte
Carlo simulation.
"""
from .errors import InfeasibleDesignError, ResourceLimitError
from .kernels import BACKEND
from .model import (
    APPROXIMATE,
    EXACT,
    EvaluationMode,
    MixturePoint,
    StrongEffectRegion,
    beta_se_one_stage,
    beta_single,
    binding_corner,
    gaussian_cdf,
    gaussian_pdf,
    gaussian_quantile,
    likelihood_ratio_mean,
)
from .multicenter import (
    ErrorTable,
    MulticenterDesign,
    StepUpProcedure,
    apply_step_up,
    beta_fw_bound,
    beta_fw_bound_table,
    beta_fw_exact,
    beta_fw_table,
    beta_j_se,
    per_center_targets,
    plan_multicenter,
    plan_multicenter_one_stage,
    step_up_report,
)
from .one_stage import (
    OneStageDesign,
    approximate_sample_size,
    one_stage_p_value,
    plan_one_stage,
)
from .simulate import (
    CenterResult,
    SimulationConfig,
    empirical_beta_fw,
    empirical_type1,
    simulate_center,
)
from .two_stage import (
    Feasibility,
    PlanDiagnostics,
    SweepRow,
    TrialData,
    TwoStageDesign,
    beta2,
    beta2_se,
    compute_eta2,
    expected_n_alt_max,
    expected_n_null,
    false_negative_surface,
    feasibility,
    make_design,
    optimize_alpha1,
    plan_two_stage,
    second_stage_probability,
    solve_n2,
    sweep,
    sweep_to_csv,
    two_stage_p_value,
)

__version__ = "0.1.0"
