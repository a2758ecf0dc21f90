"""Multiscale minimization of pairwise discrete energies."""
from .coarsen import (
    AgreementGraph,
    InterpolationMatrix,
    LabelAgreement,
    LabelCoarsener,
    VariableCoarsener,
    agnostic_agreements,
    build_interpolation,
    coarsen_labels,
    coarsen_variables,
    label_agreements,
    sample_agreements,
    select_coarse,
)
from .energy import EnergyInstance, evaluate_discrete, evaluate_fractional, to_binary_matrix
from .exceptions import CapacityError, InvalidArgumentError, ParseError
from .harness import RunReport, SyntheticSpec, gen_synthetic, run_compare
from .pipeline import (
    EnergyPyramid,
    ICMSolver,
    MultiscaleSolver,
    PyramidConfig,
    build_pyramid,
    refine_pyramid,
    round_rows,
    solve_multiscale,
)
from .solve import SolverConfig, exact_min, icm, is_local_minimum, register_solver, winner_take_all

__version__ = "0.1.0"
