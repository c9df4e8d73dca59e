"""Height-two formal groups over unramified p-adic rings, with finite-level
verification of torsion towers, dual pairings, and the trace operator."""

from .ring_tower import (
    EisensteinTower,
    HenselConditionError,
    IntegralityError,
    NotEisensteinError,
    PrecisionError,
    Scaled,
    UnramifiedBase,
    Valuation,
    adjoin_eisenstein,
    eq_mod,
    hensel_root,
    make_unramified,
    valuation,
)
from .power_series import (
    BiSeries,
    NewtonPolygon,
    ScaledSeries,
    Series,
    compose,
    newton_polygon,
    reversion,
    series_inverse,
    weierstrass_divide,
    weierstrass_prepare,
)
from .formal_group import (
    FormalGroup,
    ShapeError,
    TorsionLevel,
    build_lubin_tate,
    clean_conjugator,
    clean_coordinates,
)
from .dual_points import (
    AbsentRootError,
    CyclotomicAlgebra,
    PointCharacter,
    TatePoint,
    build_tate_point,
    find_root_of_unity,
    minimum_precision,
    verify_coefficient_laws,
)
from .katz_map import (
    CoeffSequence,
    Functional,
    delta_functional,
    density_truncate,
    functional_product,
    injectivity_matrix,
    kappa,
    pairing,
    sequence_product,
    surjectivity_digits,
    uniformizer_functional,
)
from .psi_op import PsiResult, psi_apply, psi_integral_test, support_test

__version__ = "0.1.0"
