"""horofix: metric functionals and fixed points of nonexpansive maps on sequence spaces."""
from .exceptions import DivergentSeries, NotFixed, NotFound, ScenarioError, UnboundedOrbit, Unresolved
from .seqspace import DirectSumPoint, SeqVector, Space, c0, direct_sum, distance, linfty, lp, norm, zero
from .maps import (
    Affine, BackwardShift, Compose, Convex, DenseBlock, Diagonal, FamilySpec, ForwardShift, Identity,
    PrependShift, Translate, build_polynomial_family, build_Tmu, check_commuting, check_nonexpansive, iterate,
)
from .functionals import (
    HN, BusemannL1Plane, Internal, L1Form, Linear, LpForm, Projection, ShiftC0, ShiftL1, Sum,
    busemann_limit, evaluate, internal, sum_functional,
)
from .probes import ProbeSet, default_probes
from .limits import (
    EmpiricalFunctional, asymptotic_center, empirical_limit, match_hypothesis, opial_check, orbit, orbit_tail,
    zfp_scan,
)
from .invariance import DefectReport, Verdict, fixed_point_from_internal, l2_linear_counterexample, subinvariance
from .engine import (
    cesaro_average, common_fixed_point, nested_average, product_orbit, translation_number, ump_fixed_point,
)

__version__ = "0.1.0"
