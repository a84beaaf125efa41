"""Numerical study of Liénard systems x' = y - F(x), y' = -eps x + e x^2."""
from .census import CensusReport, CycleRecord, census, hopf_probe, lemma1_certificate, parity_report
from .conserved import DriftReport, State4, dirac_flow, linear_case_integral, monodromy_determinant, phi_drift
from .errors import (
    Anomalous,
    BracketFailure,
    ConvergenceFailure,
    InvalidParameters,
    LienardError,
    NoOuterBranch,
    NoReturn,
    NumericalFailure,
    StepSizeUnderflow,
)
from .homoclinic import (
    HomoclinicResult,
    SeparatrixResult,
    escape_analysis,
    find_d0,
    loop_attractivity_probe,
    monotonic_scan,
    quartic,
    stable_intersection,
    unstable_intersection,
)
from .ode import OdeConfig, PhaseState, SystemParams, flow, linearization_at_origin
from .poly import Poly, even_odd_decompose, half_line_minima, odd_unique_root, outer_branches
from .sections import ReturnSample, return_derivative, return_map, spread_bound_probe

__version__ = "0.1.0"
