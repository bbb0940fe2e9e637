"""Smooth, obstacle-aware state trajectories on the Bloch sphere.

Functionality is grouped by layer:

* :mod:`qgc.sphere`     -- round-sphere geometry and jet states
* :mod:`qgc.potentials` -- forbidden-region barrier potentials
* :mod:`qgc.dynamics`   -- continuous fourth-order dynamics and baselines
* :mod:`qgc.su2`        -- the unitary lift and its retraction
* :mod:`qgc.lgvi`       -- discrete variational boundary-value solver
* :mod:`qgc.mpc`        -- receding-horizon controller
* :mod:`qgc.config`     -- scenario files
* :mod:`qgc.runner`     -- scenario execution and data emission
"""

from .dynamics import (
    CubicJetTrajectory,
    constraint_drift,
    consistent_jet,
    continuous_momentum_jz,
    cubic_rhs,
    rk4_integrate,
)
from .errors import (
    AntipodalPoints,
    ChartOverflow,
    GradientSingularity,
    HorizonInfeasible,
    InconsistentJet,
    NonliftableStep,
    ParseError,
    QgcError,
    StepCountOverflow,
    ValidationError,
)
from .lgvi import (
    BoundaryData,
    DiscreteTrajectory,
    SolverReport,
    boundary_from_states,
    del_residual,
    discrete_action,
    discrete_lagrangian,
    discrete_momentum_jz,
    solve_bvp,
)
from .mpc import (
    ClosedLoopLog,
    HorizonSolution,
    MpcConfig,
    MpcLoopState,
    Perturbation,
    apply_perturbation,
    descent_violations,
    mpc_step,
    run_closed_loop,
    run_open_loop,
    solve_horizon,
    terminal_cost,
)
from .potentials import (
    ObstacleSpec,
    is_inside_forbidden,
    potential_gradient,
    potential_gradient_many,
    potential_value,
    potential_value_many,
)
from .sphere import (
    AugmentedState,
    TangentVector,
    bloch_vector,
    covariant_acceleration,
    curvature_op,
    exp_map,
    geodesic_distance,
    log_map,
    project_tangent,
    slerp,
    unit_vector,
)
from .su2 import (
    adjoint_rotate,
    cayley,
    fs_distance,
    inverse_cayley,
    minimal_lift,
    project_bloch,
    reconstruct,
    reconstruct_with_momentum,
    rotation_matrix,
    su2_exp,
    unitarize,
)

__version__ = "0.1.0"
