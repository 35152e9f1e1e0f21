"""Method-of-steps integration of the distributed-delay SIRI system.

Fixed-step classic RK4. Kernel nodes sit on the step grid, so the lagged
values a stage needs are either stored grid values, stored Hermite midpoints
of committed steps, or (for the tau = 0 node) the stage's own provisional
value. Histories are evaluated analytically for t <= 0.
"""
import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .incidence import IncidenceFunction
from .kernel import DelayKernel
from .logger import logger
from .model import ModelParams, State, StateDerivative, vector_field
from .utils import GRID_RTOL, grid_index, validate_positive

DEFAULT_STEP = 0.01
# samples used to check a history for negative values
HISTORY_CHECK_SAMPLES = 1001


class HistoryRangeError(IndexError):
    pass


def sinusoid(kind: str, amplitude: float, frequency: float, offset: float) -> Callable:
    """theta -> amplitude * kind(frequency * theta) + offset."""
    wave = {"sin": np.sin, "cos": np.cos}.get(kind)
    if wave is None:
        raise ValueError(f"Unknown history component kind '{kind}', expected sin or cos")

    def component(theta):
        return amplitude * wave(frequency * np.asarray(theta, dtype=float)) + offset
    return component


def constant(value: float) -> Callable:
    def component(theta):
        return np.full(np.shape(theta), float(value))
    return component


@dataclass(frozen=True)
class HistoryFunction:
    phi1: Callable
    phi2: Callable
    phi3: Callable

    def __call__(self, theta):
        return np.array([self.phi1(theta), self.phi2(theta), self.phi3(theta)], dtype=float)

    def validate(self, h: float, warn_at_zero: bool = True) -> "HistoryFunction":
        theta = np.linspace(-h, 0.0, HISTORY_CHECK_SAMPLES) if h > 0 else np.zeros(1)
        values = np.atleast_2d(self(theta).reshape(3, -1))
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError(f"Initial history must be finite and non-negative on [{-h}, 0].")
        at_zero = self(0.0)
        if warn_at_zero and np.any(at_zero <= 0):
            logger.warning(f"Initial history at theta = 0 is not strictly positive: {tuple(at_zero)}")
        return self


HISTORY_PRESETS = {
    "fig1": HistoryFunction(sinusoid("sin", 1.0, 0.5, 150.0), sinusoid("sin", 1.0, 10.0, 20.0),
                            constant(0.0)),
    "fig2": HistoryFunction(sinusoid("cos", 1.0, 5.0, 200.0), sinusoid("sin", 10.0, 1.0, 30.0),
                            constant(70.0)),
}


def constant_history(state: State) -> HistoryFunction:
    return HistoryFunction(constant(state.s), constant(state.i), constant(state.r))


@dataclass(frozen=True, eq=False)
class Trajectory:
    step: float
    h: float
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    clamp_count: int = 0

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def lag_steps(self) -> int:
        return 0 if self.h == 0 else int(round(self.h / self.step))

    def __len__(self):
        return len(self.times)

    def state(self, index: int) -> State:
        s, i, r = self.states[index]
        return State(float(s), float(i), float(r), float(self.times[index]))

    def derivative(self, index: int) -> StateDerivative:
        return StateDerivative(*map(float, self.derivatives[index]))

    @property
    def samples(self) -> List[Tuple[float, State, StateDerivative]]:
        return [(float(t), self.state(k), self.derivative(k)) for k, t in enumerate(self.times)]

    def index_of(self, t: float) -> int:
        k = grid_index(t, self.t_start, self.step)
        if k is None or not 0 <= k < len(self.times):
            raise ValueError(f"t = {t!r} is not on the trajectory grid")
        return k

    def extended(self, history: HistoryFunction) -> np.ndarray:
        """States on the full grid t_start - h .. t_end, history first, shape (M + N, 3)."""
        M = self.lag_steps
        theta = (np.arange(M) - M) * self.step
        past = history(theta).reshape(3, -1).T if M else np.empty((0, 3))
        return np.vstack([past, self.states])

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.times, self.states, self.derivatives, axis=0)


def interpolate(traj: Trajectory, history: HistoryFunction, t: float) -> State:
    slack = GRID_RTOL * max(1.0, abs(traj.t_end))
    if t < traj.t_start - traj.h - slack or t > traj.t_end + slack:
        raise HistoryRangeError(f"t = {t!r} is outside [{traj.t_start - traj.h!r}, {traj.t_end!r}]")
    if t < traj.t_start:
        s, i, r = history(t - traj.t_start)
        return State(float(s), float(i), float(r), t)
    k = grid_index(t, traj.t_start, traj.step)
    if k is not None:
        return traj.state(min(k, len(traj) - 1))
    s, i, r = traj._spline(t)
    return State(float(s), float(i), float(r), t)


def integrate(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
              history: HistoryFunction, t_end: float, step: float = DEFAULT_STEP) -> Trajectory:
    step = validate_positive("step", step)
    t_end = validate_positive("t_end", t_end)
    kernel = kernel.on_grid(step)
    history.validate(kernel.h)
    M = kernel.n_nodes - 1
    n_steps = int(math.floor(t_end / step + GRID_RTOL))
    if n_steps < 1:
        raise ValueError(f"t_end = {t_end} is shorter than one step of {step}")

    # masses in increasing-time order of the lagged values, tau = h first
    tail_masses = kernel.masses[:0:-1].copy()
    head_mass = float(kernel.masses[0])
    beta, f = params.beta, inc.f

    # i on the grid, index j <-> time (j - M) * step
    i_grid = np.empty(M + n_steps + 1)
    i_grid[:M] = history.phi2((np.arange(M) - M) * step)
    # Hermite midpoints, index j <-> time (j - M + 1/2) * step
    i_mid = np.empty(M + n_steps)
    i_mid[:M] = history.phi2((np.arange(M) - M + 0.5) * step)

    states = np.empty((n_steps + 1, 3))
    derivatives = np.empty((n_steps + 1, 3))
    clamped = 0

    def infection(s, tail, head):
        nonlocal clamped
        if tail.size and tail.min() < 0:
            clamped += int(np.count_nonzero(tail < 0))
            tail = np.maximum(tail, 0.0)
        if head < 0:
            clamped += 1
            head = 0.0
        return beta * (float(tail_masses @ f(s, tail)) + head_mass * float(f(s, head)))

    def field(y, tail):
        return vector_field(params, y[0], y[1], y[2], infection(y[0], tail, y[1]))

    started = time.perf_counter()
    logger.info(f"Integrating to t = {n_steps * step:g} with step {step:g} ({n_steps} steps, {M + 1} kernel nodes)")
    y = np.asarray(history(0.0), dtype=float).reshape(3)
    states[0] = y
    i_grid[M] = y[1]
    derivatives[0] = field(y, i_grid[0:M])
    half = step / 2
    for n in range(n_steps):
        k1 = derivatives[n]
        y2 = y + half * k1
        k2 = field(y2, i_mid[n:n + M])
        y3 = y + half * k2
        k3 = field(y3, i_mid[n:n + M])
        y4 = y + step * k3
        k4 = field(y4, i_grid[n + 1:n + M + 1])
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

        states[n + 1] = y
        i_grid[n + M + 1] = y[1]
        derivatives[n + 1] = field(y, i_grid[n + 1:n + M + 1])
        i_mid[n + M] = (i_grid[n + M] + y[1]) / 2 + step * (derivatives[n, 1] - derivatives[n + 1, 1]) / 8

    if clamped:
        logger.warning(f"Clamped {clamped} negative lagged infective values to 0; consider a smaller step")
    logger.info(f"Integration finished in {time.perf_counter() - started:.2f}s")
    times = np.arange(n_steps + 1) * step
    for array in (times, states, derivatives):
        array.flags.writeable = False
    return Trajectory(step=step, h=kernel.h, times=times, states=states,
                      derivatives=derivatives, clamp_count=clamped)
