"""qdl: exact reduction of (quadratic form, linear map) pairs, stabilizer
algebra verification, and desk-scale density experiments for the values of a
linear map at integer points on a rational quadric."""

from .scalars import QuadScalar, Rational, RootSum, scalar_arith
from .matrices import (
    QMat,
    ScaledMatrix,
    congruence_check,
    scaled_apply,
    sylvester_transform,
)
from .quadforms import (
    ConditionReport,
    LinearMap,
    QuadraticForm,
    Signature,
    check_conditions,
    kernel_basis,
    restrict,
    signature,
)
from .canon import (
    CanonicalCertificate,
    CanonicalParams,
    SingleCertificate,
    build_canonical_pair,
    reduce_pair,
    reduce_single,
    verify_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "QuadScalar", "Rational", "RootSum", "scalar_arith",
    "QMat", "ScaledMatrix", "congruence_check", "scaled_apply", "sylvester_transform",
    "QuadraticForm", "LinearMap", "Signature", "ConditionReport",
    "signature", "kernel_basis", "restrict", "check_conditions",
    "CanonicalParams", "CanonicalCertificate", "SingleCertificate",
    "build_canonical_pair", "reduce_pair", "reduce_single", "verify_certificate",
    "__version__",
]
