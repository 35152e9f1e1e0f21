"""Threshold analysis: R0 from the next-generation matrices and the
equilibria E0 and E*.

Guarantees assume the incidence function satisfies (H1)-(H3).
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from .incidence import IncidenceFunction
from .logger import logger
from .model import ModelParams, State, vector_field
from .utils import validate_positive

DEFAULT_TOL = 1e-12
# left bracket for H, as a fraction of the right endpoint
LEFT_BRACKET_FRACTION = 1e-12


class NoEndemicEquilibrium(Exception):
    """R0 <= 1, so only the disease-free equilibrium exists."""

    def __init__(self, report: "EquilibriumReport"):
        super().__init__(f"R0 = {report.R0:.6g} <= 1: no endemic equilibrium")
        self.report = report


@dataclass(frozen=True, eq=False)
class NextGenMatrices:
    F: np.ndarray
    V: np.ndarray
    V_inv: np.ndarray
    FV_inv: np.ndarray
    spectral_radius: float


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    R0: float
    E0: State
    endemic: Optional[State]
    residual: float
    k: float
    matrices: Optional[NextGenMatrices] = None

    @property
    def endemic_present(self) -> bool:
        return self.endemic is not None

    @property
    def stable_equilibrium(self) -> str:
        """The globally asymptotically stable equilibrium under (H1)-(H2)."""
        return "E*" if self.R0 > 1 else "E0"


def spectral_radius_2x2(matrix: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a 2x2 matrix from its trace and determinant."""
    trace = matrix[0, 0] + matrix[1, 1]
    det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
    disc = trace * trace / 4 - det
    if disc >= 0:
        root = math.sqrt(disc)
        return max(abs(trace / 2 + root), abs(trace / 2 - root))
    # complex pair, |lambda|^2 = det
    return math.sqrt(det)


def disease_free_equilibrium(params: ModelParams) -> State:
    return State(params.carrying_capacity, 0.0, 0.0)


def next_generation(params: ModelParams, inc: IncidenceFunction) -> NextGenMatrices:
    slope = float(inc.d2f_at_dfe(params.carrying_capacity))
    F = np.array([[params.beta * slope, 0.0], [0.0, 0.0]])
    # Jacobian of the transition terms ((mu+c+gamma) i - delta r, -gamma i + (mu+delta) r)
    V = np.array([[params.removal, -params.delta], [-params.gamma, params.mu + params.delta]])
    V_inv = np.linalg.inv(V)
    FV_inv = F @ V_inv
    return NextGenMatrices(F=F, V=V, V_inv=V_inv, FV_inv=FV_inv,
                           spectral_radius=spectral_radius_2x2(FV_inv))


def compute_R0(params: ModelParams, inc: IncidenceFunction) -> Tuple[float, NextGenMatrices]:
    matrices = next_generation(params, inc)
    slope = float(inc.d2f_at_dfe(params.carrying_capacity))
    R0 = params.beta * (params.mu + params.delta) * slope / params.r0_denominator
    if not math.isclose(R0, matrices.spectral_radius, rel_tol=1e-10, abs_tol=1e-300):
        logger.warning(f"Closed-form R0 {R0!r} and spectral radius {matrices.spectral_radius!r} disagree")
    return R0, matrices


def right_endpoint(params: ModelParams) -> float:
    """Largest admissible i*: Lambda (mu+delta) / ((mu+delta)(mu+c+gamma) - delta gamma)."""
    return params.Lambda / params.k


def H_of_i(params: ModelParams, inc: IncidenceFunction, i: float) -> float:
    upper = right_endpoint(params)
    if not (0 < i <= upper * (1 + 1e-12)):
        raise ValueError(f"H is defined for 0 < i <= {upper!r}, got {i!r}.")
    s = params.carrying_capacity - params.k / params.mu * i
    if s < 0:
        # only reachable by roundoff at the right endpoint
        s = 0.0
    return params.beta * float(inc.f(s, i)) / i - params.k


def _residual(params: ModelParams, inc: IncidenceFunction, state: State) -> float:
    # constant history i(t - tau) = i for a normalized kernel
    infection = params.beta * float(inc.f(state.s, state.i))
    return float(np.max(np.abs(vector_field(params, state.s, state.i, state.r, infection))))


def analyze(params: ModelParams, inc: IncidenceFunction, tol: float = DEFAULT_TOL) -> EquilibriumReport:
    """Equilibrium report that never raises on R0 <= 1."""
    try:
        return endemic_equilibrium(params, inc, tol)
    except NoEndemicEquilibrium as e:
        return e.report


def endemic_equilibrium(params: ModelParams, inc: IncidenceFunction,
                        tol: float = DEFAULT_TOL) -> EquilibriumReport:
    tol = validate_positive("tol", tol)
    R0, matrices = compute_R0(params, inc)
    E0 = disease_free_equilibrium(params)
    logger.info(f"R0 = {R0:.6g}")
    if R0 <= 1:
        report = EquilibriumReport(R0=R0, E0=E0, endemic=None, residual=_residual(params, inc, E0),
                                   k=params.k, matrices=matrices)
        raise NoEndemicEquilibrium(report)

    right = right_endpoint(params)
    left = LEFT_BRACKET_FRACTION * right
    h_left = H_of_i(params, inc, left)
    if h_left <= 0:
        raise RuntimeError(f"H({left!r}) = {h_left!r} should be positive when R0 > 1; "
                           "the incidence function likely violates (H1)-(H3).")
    logger.debug(f"Bisection for i* on [{left!r}, {right!r}]")
    i_star = bisect(lambda i: H_of_i(params, inc, i), left, right,
                    xtol=tol * left, rtol=max(tol, 4 * np.finfo(float).eps), maxiter=500)
    s_star = params.carrying_capacity - params.k / params.mu * i_star
    r_star = params.gamma * i_star / (params.mu + params.delta)
    endemic = State(s_star, i_star, r_star)
    residual = max(_residual(params, inc, endemic), _residual(params, inc, E0))
    if residual > 10 * tol * params.carrying_capacity * max(1.0, params.Lambda):
        logger.warning(f"Equilibrium residual {residual:.3g} is larger than the bisection tolerance suggests")
    logger.info(f"E* = ({s_star:.6g}, {i_star:.6g}, {r_star:.6g}), residual {residual:.3g}")
    return EquilibriumReport(R0=R0, E0=E0, endemic=endemic, residual=residual, k=params.k,
                             matrices=matrices)
