"""Spline and e-spline wavelet filterbanks on circulant graphs."""

from .circulant import (
    CirculantGraph,
    DegenerateParameterWarning,
    ExponentParam,
    SymLaurentPoly,
    apply_circulant,
    e_laplacian_row,
    exp_poly_signal,
    laplacian_row,
    make_circulant,
    poly_signal,
    root_multiplicity,
)
from .complementary import (
    InfeasibleFactorizationError,
    bezout_feasible,
    complement_lowpass,
    hcgeswt,
    hcgswt,
    modulate,
    synthesize,
)
from .filterbank import (
    FilterBank,
    InvertibilityReport,
    SamplingPattern,
    SingularFilterBankError,
    analyze,
    check_invertibility,
    hgeswt,
    hgswt,
    invert,
    lowpass_invertible,
    strang_fix_multiplicity,
)
from .multiscale import (
    PyramidTransform,
    bank_builder,
    coarsen,
    default_pattern,
    nla,
    pyramid_analyze,
    pyramid_synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "CirculantGraph",
    "DegenerateParameterWarning",
    "ExponentParam",
    "SymLaurentPoly",
    "apply_circulant",
    "e_laplacian_row",
    "exp_poly_signal",
    "laplacian_row",
    "make_circulant",
    "poly_signal",
    "root_multiplicity",
    "InfeasibleFactorizationError",
    "bezout_feasible",
    "complement_lowpass",
    "hcgeswt",
    "hcgswt",
    "modulate",
    "synthesize",
    "FilterBank",
    "InvertibilityReport",
    "SamplingPattern",
    "SingularFilterBankError",
    "analyze",
    "check_invertibility",
    "hgeswt",
    "hgswt",
    "invert",
    "lowpass_invertible",
    "strang_fix_multiplicity",
    "PyramidTransform",
    "bank_builder",
    "coarsen",
    "default_pattern",
    "nla",
    "pyramid_analyze",
    "pyramid_synthesize",
]
