"""Continued fractions, cusps of finite-index subgroups and the cross-section skew product."""
from .numerics import (
    AdaptiveReal,
    AlgebraicReal,
    DomainError,
    DyadicAdaptiveReal,
    UndecidableFloor,
    certified_floor,
    minimal_polynomial,
)
from .cf_engines import CFKind, CFStep, ApproximantPair, ExpansionTerminated, approximants, step
from .orbit import Expansion, expand
from .subgroups import (
    CongruenceSpec,
    CosetTable,
    CuspTable,
    PermutationSpec,
    build_coset_table,
    classify_fraction,
    coset_apply,
    cusp_partition,
    gamma0_spec,
    iota_transport,
)
from .skewprod import (
    SectionPoint,
    SkewState,
    closed_form_coset,
    iota_twisted_run,
    m_word,
    psi_average,
    return_step,
    skew_step,
)

__all__ = [
    "AdaptiveReal",
    "AlgebraicReal",
    "DomainError",
    "DyadicAdaptiveReal",
    "UndecidableFloor",
    "certified_floor",
    "minimal_polynomial",
    "CongruenceSpec",
    "CosetTable",
    "CuspTable",
    "PermutationSpec",
    "build_coset_table",
    "classify_fraction",
    "coset_apply",
    "cusp_partition",
    "gamma0_spec",
    "iota_transport",
    "SectionPoint",
    "SkewState",
    "closed_form_coset",
    "iota_twisted_run",
    "m_word",
    "psi_average",
    "return_step",
    "skew_step",
    "CFKind",
    "CFStep",
    "ApproximantPair",
    "ExpansionTerminated",
    "approximants",
    "step",
    "Expansion",
    "expand",
]

__version__ = "0.1.0"
