"""Decide and witness the ordering "more ill-posed than" between discretized operators."""

from .errors import ConfigError, IllposeError, InvalidArgument, NumericalFailure, PreconditionViolation
from .gallery import (
    build_embedding_surrogate,
    build_from_id,
    build_hausdorff,
    build_integration,
    build_mixed_integration,
    build_multiplication,
)
from .grid import GridSpec, OperatorMatrix, compose
from .multipliers import MultiplierSpec, QuotientReport, build_selfadjoint_pair, multiplier_from_name, quotient_verdict
from .ordering import (
    DouglasEstimate,
    FactorizationWitness,
    build_witness,
    codim_lemma_check,
    compactness_guard,
    compose_witnesses,
    douglas_constant,
    left_inverse_ratio_probe,
    polar_absolute,
)
from .regularization import GeneratorFamily, RegularizationProfile, dichotomy_probe, pointwise_dichotomy
from .relations import OrderingVerdict, Relation
from .spectral import (
    DecayFit,
    SpectrumComparison,
    SpectrumResult,
    compare_spectra,
    compute_spectrum,
    fit_decay,
    verdict_from_comparison,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DecayFit",
    "DouglasEstimate",
    "FactorizationWitness",
    "GeneratorFamily",
    "GridSpec",
    "IllposeError",
    "InvalidArgument",
    "MultiplierSpec",
    "NumericalFailure",
    "OperatorMatrix",
    "OrderingVerdict",
    "PreconditionViolation",
    "QuotientReport",
    "RegularizationProfile",
    "Relation",
    "SpectrumComparison",
    "SpectrumResult",
    "build_embedding_surrogate",
    "build_from_id",
    "build_hausdorff",
    "build_integration",
    "build_mixed_integration",
    "build_multiplication",
    "build_selfadjoint_pair",
    "build_witness",
    "codim_lemma_check",
    "compactness_guard",
    "compare_spectra",
    "compose",
    "compose_witnesses",
    "compute_spectrum",
    "dichotomy_probe",
    "douglas_constant",
    "fit_decay",
    "left_inverse_ratio_probe",
    "multiplier_from_name",
    "pointwise_dichotomy",
    "polar_absolute",
    "quotient_verdict",
    "verdict_from_comparison",
]
