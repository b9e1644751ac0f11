"""Numerical toolkit for multivariate bounded-variation seminorms on dyadic grids."""

from .params import INF, Kappa, classify, conjugate, smoothness
from .dyadic import DyadicCube, Packing, enumerate_packings, is_packing, mesh
from .grid import GridFunction, cell_average, lq_norm, pair, sample
from .polyapprox import PolyBasis, local_approx_error, k_oscillation, whitney_ratio, delta_k
from .variation import (NormReport, bmo_seminorm, gamma, little_v_profile, morrey_norm, v_seminorm,
                        v_seminorm_restricted, var_1d)
from .atoms import (Atom, Chain, Decomposition, check_pairing_inequality, duality_gap, extremal_atom,
                    make_atom, u_norm_lower, u_norm_upper)
from .approx import (MollifierConfig, convergence_study, jackson_approx, modulus, mollifier_bound_check,
                     mollify)

__version__ = "0.1.0"
