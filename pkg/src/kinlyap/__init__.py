"""kinlyap: certified Lyapunov boundary stabilization for discrete-velocity schemes."""

from .boundary import (
    CoplanarGain45Law,
    CoplanarGain46Law,
    FaceTrace,
    GeneralLinearLaw,
    OutgoingTrace,
    TrivialLaw,
    admissible_gain_45,
    admissible_gains_46,
    extract_outgoing,
)
from .certify import (
    StabilityCertificate,
    certify_explicit,
    certify_implicit,
    cfl_limit,
    coupling_bounds,
    geometry_extrema,
    interior_damping,
)
from .config import RunConfig, load_config, parse_config
from .grid import (
    Field,
    Grid,
    constant_field,
    interior_index_count,
    l2_norm,
    read_field_csv,
    sample_initial,
    write_field_csv,
    zeros_field,
)
from .lyapunov import (
    StepDiagnostics,
    assert_per_step_decay,
    boundary_term,
    boundary_term_coplanar,
    fit_decay_rate,
    lyapunov_value,
)
from .model import (
    CoplanarSteadyState,
    KineticModel,
    coplanar_model,
    nonlinear_collision_residual,
    new_model,
)
from .runner import certify_only, run_simulation, write_outputs
from .scheme import (
    ImplicitSolver,
    advection_step,
    collision_explicit,
    collision_implicit,
    implicit_solver_build,
    split_step,
)
from .structure import (
    StructuralDecomposition,
    coplanar_lambda0,
    decompose,
    verify_decomposition,
)

__version__ = "0.1.0"
