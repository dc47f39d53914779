"""Deformed-logarithm trace functions and randomized checks of their convexity.

The core objects are ``log_p``/``exp_p`` (:mod:`deftrace.deformed`), the trace
functions ``phi`` and ``upsilon`` (:mod:`deftrace.trace_functions`) and the
region scanner that classifies them on a ``(p, q)`` grid.
"""

from .deformed import alpha_of, beta_of, exp_p, log_p
from .errors import (
    BranchUnavailableError,
    ConditioningError,
    ConfigError,
    DeftraceError,
    DegenerateParameterError,
    DomainError,
    NumericError,
)
from .matrix import (
    SpectralDecomposition,
    apply_scalar,
    eigh,
    matrix_exp_p,
    matrix_from_json,
    matrix_log_p,
    matrix_power,
    matrix_to_json,
    random_contraction,
    random_hermitian,
    random_pd,
    random_signed,
    random_unitary,
)
from .trace_functions import (
    F_of,
    G_of,
    TraceFunctionSpec,
    UpsilonSpec,
    block_embed,
    phi_algebraic,
    phi_beta,
    phi_direct,
    psi,
    scaling_limit,
    scaling_limit_defect,
    upsilon,
    variational_target,
)
from .variational import relative_entropy_gap, trace_objective, verify_trace_variation
from .young import run_young_suite, young_defect
from .scanner import (
    ConvexityVerdict,
    GridSpec,
    ScanConfig,
    classify_cell,
    counterexample_search,
    midpoint_defect,
    reverify_certificate,
    scan_region,
    symmetry_check,
)
from .identities import run_identity_suite
from .variational import run_variational_suite

__version__ = "0.1.0"


def load_certificate(name="psi_s_negative_counterexample"):
    """A certificate bundled with the package, as a dict."""
    import json
    from importlib import resources

    return json.loads(resources.files(__name__).joinpath("data", f"{name}.json").read_text())
