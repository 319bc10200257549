"""Silver Stepsize Schedule: exact schedules, rate certificates and GD runs."""

from .exact_scalar import (
    RHO,
    SQRT2,
    CertScalar,
    Interval,
    PrecisionExhausted,
    RadicalScalar,
    Sign,
    SignVerdict,
    decimal_str,
    ring_eval,
    ring_sign,
    rho_pow,
)
from .schedule import (
    RateInfo,
    Schedule,
    horizon,
    iteration_bound,
    level_of_horizon,
    rate,
    schedule_direct,
    schedule_recursive,
    silver_step,
    step_sum,
)
from .certificate import (
    STAR,
    GramForm,
    MultiplierMatrix,
    VerifyReport,
    base_cert_n0,
    base_cert_n1,
    build_cert,
    check_star_multipliers,
    expand_Q,
    export_cert,
    glue,
    helper_linear_forms,
    helper_quadratic_forms,
    verify,
)

__version__ = "0.1.0"
