"""Solvability of the singular curvature (mean-field) equation on flat tori.

The pipeline: Weierstrass elliptic machinery for one tau (`elliptic`), the
torus Green function and its critical points (`green`), Hitchin's closed-form
solution of the elliptic Painleve VI equation with its Okamoto lift and the
equivalent isomonodromic Hamiltonian flow (`pvi`), monodromy of the
generalized Lame equation (`lame`), membership scans of the solvability
region (`region`), and synthesis plus verification of the actual solution u
when the monodromy is unitary (`synth`).
"""

from .elliptic import (
    EllipticContext,
    TorusPoint,
    canonical_representative,
    half_periods,
    invert_wp,
    is_half_period,
    lattice_reduce,
    make_context,
    torus_distance,
    wp,
    wzeta,
)
from .green import (
    CriticalPoint,
    classify_hessian,
    find_critical_points,
    gp_grad,
    green_grad,
)
from .lame import (
    CompletelyReducible,
    GLEParams,
    MonodromyRep,
    NotCompletelyReducible,
    PathSpec,
    apparent_B,
    build_cycles,
    classify,
    gle_params,
    is_unitary,
    monodromy,
    potential,
    transfer_matrix,
)
from .pvi import (
    INDEX_1000,
    INDEX_ZERO,
    HamiltonianState,
    PVIIndex,
    a_from_hitchin,
    epvi_residual,
    hamiltonian_flow,
    hitchin_p,
    hitchin_state,
    okamoto_p_1000,
    z_rs,
)
from .region import RegionSample, Witness, omega_membership, omega_scan
from .synth import (
    EigenBasis,
    SolutionField,
    asymptotics_check,
    eigenbasis,
    evenness_defect,
    pde_residual,
    u_field,
)

__version__ = "0.1.0"
