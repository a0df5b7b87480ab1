"""Multi-drawing Pólya urns: replacement-tensor checks, fixed points, and
simulation of the urn, its labelled-DAG coupling and the induced tree chain."""

from .errors import (
    CertificateViolated,
    DepthMismatch,
    DimensionMismatch,
    EmptyUrn,
    MaxIterExceeded,
    NodeOutOfRange,
    NotBalanced,
    NotContractive,
    NotTwoColour,
    ParseError,
    StructuralError,
    TooLarge,
    UrnError,
)
from .tensor import (
    AssumptionReport,
    ReplacementTensor,
    StochasticTensor,
    apply,
    ergodicity_coefficients,
    induced_chain_tensor,
    load_tensor,
    validate,
)
from .fixed_point import FixedPointResult, all_fixed_points_2colour, iterate_map, multi_start, solve

__version__ = "0.1.0"
