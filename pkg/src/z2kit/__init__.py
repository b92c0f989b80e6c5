"""Z2 invariants of time-reversal symmetric insulators.

Computes the Z2 topological invariants of gapped fermionic
time-reversal symmetric periodic systems in one, two and three
dimensions by three cross-checking routes (boundary determinant
winding, Fu-Kane polarization difference, vertex recipe) and, whenever
the invariants vanish, explicitly constructs a global continuous
symmetric Bloch frame.
"""

from . import errors, frames, invariants, linalg, models
from .frames import (
    EffectiveCell,
    FrameField,
    TransitionLoop,
    assemble_boundary_frame,
    boundary_transition,
    fill_disc,
    frame_midpoint,
    interpolate_edges,
    midpoint_symmetrize,
    obstruction_unitary,
    run_boundary_pipeline,
    symmetric_frame_1d,
    symmetric_frame_2d,
    transport_input_frame,
    unwind_loop,
)
from .invariants import (
    Z2Quadruple,
    Z2Report,
    classify_orbit,
    delta_2d,
    delta_trim,
    fkm_indices,
    fu_kane_delta,
    gl3z_transform,
    homotopy_invariance_check,
    sewing_line,
    sewing_matrix,
    time_reversal_polarization,
    trim_recipe,
    z2_all_routes,
    z2_quadruple_3d,
)
from .linalg import (
    EpsilonForm,
    Tolerances,
    epsilon_form,
    geodesic_unitary_path,
    kato_nagy_intertwiner,
    loewdin_unitarize,
    pfaffian,
    symplectic_square_root,
    winding_number,
)
from .models import (
    LatticeSpec,
    ModelSpec,
    ProjectorFamily,
    build_model,
    builtin_family,
    constant_family,
    fkm_diamond,
    kane_mele,
    load_model_file,
    restrict_family,
    stacked_kane_mele,
    twisted_family,
    verify_assumptions,
)

__version__ = "0.1.0"
