"""Sparsity measures and health indexes built from power means, with a
run-to-failure analysis pipeline for rolling bearings."""

from .errors import (
    ConfigError,
    DegenerateBaselineError,
    DegenerateEnvelopeError,
    DomainError,
    EmptyRunError,
    EvaluationError,
    FormatError,
    InvariantError,
    ParameterError,
    SingularIdentityError,
    SparsehmError,
)
from .health_index import IndexSpec, eval_hi, hi_series, hi_spec
from .mpmf import geometric_mean, log_power_mean, power_mean
from .sigprep import Band, Signal, envelope_spectrum, squared_envelope
from .sparsity import (
    gini_index,
    lp_lq_norm_index,
    pq_mean,
    smoothness_index,
    sne_via_si_identity,
    spectral_kurtosis,
    spectral_negative_entropy,
)

__version__ = "0.1.0"
