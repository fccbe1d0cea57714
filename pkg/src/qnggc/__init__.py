"""Natural-gradient and geodesic-corrected optimization of variational circuits.

Exact statevector simulation of small shallow ansatz circuits, shift-rule
estimation of the state-space metric and its Christoffel symbols, the
gd/qng/qnggc optimizer family, and benchmark experiments with CSV output.
"""
from .statevector import (
    PauliString,
    PauliSum,
    StateVector,
    basis_state,
    exact_ground_energy,
    expectation,
    fidelity,
    inner_product,
    zero_state,
)
from .circuits import (
    Circuit,
    GateInstance,
    ParamBinding,
    apply_gate,
    efficient_su2,
    prepare_state,
    shift_rule_eligible,
    state_ex1,
    state_ex2,
)
from .observables import (
    h2_ground_energy,
    h2_ground_state,
    h2_spectrum,
    hamiltonian_ex1,
    hamiltonian_h2,
    hamiltonian_tfim,
)
from .geometry import (
    ChristoffelTensor,
    FidelityCounter,
    IneligibleCircuitError,
    MetricBundle,
    SingularMetricError,
    SingularPointError,
    analytic_christoffel_ex1,
    analytic_inverse_metric_ex2,
    analytic_metric_ex1,
    analytic_metric_ex2,
    christoffel_diag_one_sided,
    christoffel_diag_shift,
    christoffel_from_metric_fd,
    fs_metric_diag,
    fs_metric_full,
    metric_diag_derivative,
    metric_diag_derivative_total,
    qgt_metric_oracle,
    regularize,
    rescale_geometry,
)
from .gradients import (
    CostFunction,
    analytic_gradient_ex1,
    analytic_gradient_ex2,
    evaluate_cost,
    finite_difference_gradient,
    parameter_shift_gradient,
)
from .optimizer import (
    DivergenceError,
    GeometryProviders,
    OptimizerConfig,
    SolveFailure,
    Trajectory,
    TrajectoryRecord,
    gd_step,
    qng_step,
    qnggc_step,
    run_optimization,
)
from .bench import (
    AggregateResult,
    ConfigError,
    ExperimentSpec,
    OptimizerSpec,
    grid_search,
    load_spec,
    random_init,
    run_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
