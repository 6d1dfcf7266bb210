"""Upper bounds on the number of equiangular lines in R^n.

Exact Gegenbauer/three-point kernels, a small self-contained SDP solver,
and the closed-form and LP bounds that accompany it.
"""

from eqlines.bounds import (
    AngleCandidate,
    candidate_angles,
    g_bound,
    gerzon,
    harmonic_index4_bound,
    lemmens_seidel_third,
    lp_delsarte,
    relative_bound,
)
from eqlines.gegenbauer import (
    g4_closed_form,
    gegenbauer_eval,
    gegenbauer_expand,
    gegenbauer_poly,
)
from eqlines.numerics import UniPoly, psd_check
from eqlines.pipeline import (
    BoundReport,
    RunConfig,
    bound_for_angle,
    bound_for_dimension,
    known_values,
    table_scan,
    verify_table3,
)
from eqlines.sdp_model import build_equiangular_sdp, export_sdpa, import_sdpa
from eqlines.sdp_solver import SdpSolution, SolverSettings, check_solution, solve
from eqlines.threepoint import s_matrix, y_matrix

__version__ = "0.1.0"
