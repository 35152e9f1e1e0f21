"""Lyapunov certificates and invariant monitors evaluated on finished
trajectories.

The disease-free functional is

    w = s - s0 - int_{s0}^{s} phi0(s0)/phi0(sigma) dsigma + i
        + k int_0^h g(tau) int_0^tau i(t-u) du dtau + delta/(mu+delta) r

and the endemic one is V = V1 + V2 + V3 with G(x) = x - 1 - ln x,

    V1 = s - s* - int_{s*}^{s} f(s*,i*)/f(sigma,i*) dsigma + i* G(i/i*)
    V2 = beta f(s*,i*) int_0^h g(tau) int_0^tau G(i(t-u)/i*) du dtau
    V3 = delta/(mu+delta) r* G(r/r*)

The sigma-integrals are logarithmic in closed form for bilinear incidence
and use 64-interval composite Simpson otherwise. Delay integrals use the
kernel grid, which coincides with the trajectory grid. phi0(sigma) > 0 for
sigma > 0 is assumed.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .incidence import BILINEAR, IncidenceFunction
from .integrator import HistoryFunction, Trajectory
from .kernel import DelayKernel
from .logger import logger
from .model import ModelParams, State

SIMPSON_INTERVALS = 64
MONOTONE_RTOL = 1e-8
POSITIVITY_FLOOR = -1e-9
BOUND_RTOL = 1e-6
# components at or below this are treated as zero by the ln terms
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Violation:
    t: float
    kind: str
    magnitude: float


@dataclass(eq=False)
class CertificateSeries:
    times: np.ndarray
    w_values: Optional[np.ndarray] = None
    dw_values: Optional[np.ndarray] = None
    V_values: Optional[np.ndarray] = None
    V1_values: Optional[np.ndarray] = None
    V2_values: Optional[np.ndarray] = None
    V3_values: Optional[np.ndarray] = None
    violations: List[Violation] = field(default_factory=list)

    @property
    def w_monotone(self) -> Optional[bool]:
        if self.w_values is None:
            return None
        return not any(v.kind == "w-increase" for v in self.violations)

    @property
    def V_monotone(self) -> Optional[bool]:
        if self.V_values is None:
            return None
        return not any(v.kind == "V-increase" for v in self.violations)


def G(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValueError(f"G is defined for x > 0, got {x!r}")
    value = x_arr - 1 - np.log(x_arr)
    return float(value) if value.ndim == 0 else value


def _G_unchecked(x):
    return x - 1 - np.log(x)


def _simpson_integral(integrand, lower: float, upper: np.ndarray) -> np.ndarray:
    """int_lower^upper integrand(sigma) dsigma by composite Simpson, vectorized over upper."""
    x = np.linspace(0.0, 1.0, SIMPSON_INTERVALS + 1)
    span = upper - lower
    sigma = lower + span[:, np.newaxis] * x[np.newaxis, :]
    return span * simpson(integrand(sigma), dx=1.0 / SIMPSON_INTERVALS, axis=-1)


def _windows(traj: Trajectory, history: HistoryFunction, indices: np.ndarray) -> np.ndarray:
    """i(t_n - u_j) for u_j = j*step, j = 0..M, one row per index."""
    M = traj.lag_steps
    extended_i = traj.extended(history)[:, 1]
    # row n holds times t_n - M*step .. t_n; reverse so column j is lag u_j
    offsets = np.arange(M + 1)
    return extended_i[indices[:, np.newaxis] + offsets[np.newaxis, :]][:, ::-1]


def _delay_double_integral(kernel: DelayKernel, step: float, lagged: np.ndarray) -> np.ndarray:
    """sum_m mass_m int_0^{tau_m} q(u) du, q sampled on the lag grid (rows)."""
    if lagged.shape[1] == 1:
        return np.zeros(lagged.shape[0])
    inner = cumulative_trapezoid(lagged, dx=step, axis=1, initial=0.0)
    return inner @ kernel.masses


def _aligned(kernel: DelayKernel, traj: Trajectory) -> DelayKernel:
    if kernel.h != traj.h:
        raise ValueError(f"Kernel support h = {kernel.h} differs from the trajectory's h = {traj.h}")
    return kernel.on_grid(traj.step)


def _dfe_terms(params, inc, kernel, traj, history, indices):
    s0 = params.carrying_capacity
    s, i, r = (traj.states[indices, c] for c in range(3))
    if inc.family_tag == BILINEAR:
        s_term = s0 * _G_unchecked(s / s0)
    else:
        phi0_s0 = float(inc.phi0(s0))
        s_term = s - s0 - _simpson_integral(lambda sigma: phi0_s0 / inc.phi0(sigma), s0, s)
    delay = params.k * _delay_double_integral(kernel, traj.step, _windows(traj, history, indices))
    return s_term + i + delay + params.delta / (params.mu + params.delta) * r


def dfe_functional(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
                   traj: Trajectory, history: HistoryFunction, t: float) -> float:
    k = traj.index_of(t)
    if traj.states[k, 0] <= LOG_FLOOR:
        raise ValueError(f"s({t!r}) = {traj.states[k, 0]!r} is not positive")
    kernel = _aligned(kernel, traj)
    return float(_dfe_terms(params, inc, kernel, traj, history, np.array([k]))[0])


def _dfe_rate(params, inc, kernel, traj, history, indices):
    s0 = params.carrying_capacity
    s = traj.states[indices, 0]
    ratio = float(inc.phi0(s0)) / np.asarray(inc.phi0(s), dtype=float)
    lagged = np.maximum(_windows(traj, history, indices), 0.0)
    infection = np.asarray(inc.f(s[:, np.newaxis], lagged), dtype=float)
    delay = (params.beta * infection * ratio[:, np.newaxis] - params.k * lagged) @ kernel.masses
    return params.mu * (1 - ratio) * (s0 - s) + delay


def dfe_functional_rate(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
                        traj: Trajectory, history: HistoryFunction, t: float) -> float:
    """Closed-form dw/dt at a grid time; non-positive whenever R0 <= 1."""
    k = traj.index_of(t)
    if traj.states[k, 0] <= LOG_FLOOR:
        raise ValueError(f"s({t!r}) = {traj.states[k, 0]!r} is not positive")
    kernel = _aligned(kernel, traj)
    return float(_dfe_rate(params, inc, kernel, traj, history, np.array([k]))[0])


def _endemic_terms(params, inc, kernel, traj, history, E_star, indices):
    s_star, i_star, r_star = E_star.s, E_star.i, E_star.r
    s, i, r = (traj.states[indices, c] for c in range(3))
    if inc.family_tag == BILINEAR:
        s_term = s_star * _G_unchecked(s / s_star)
    else:
        f_star = float(inc.f(s_star, i_star))
        s_term = s - s_star - _simpson_integral(lambda sigma: f_star / inc.f(sigma, i_star), s_star, s)
    V1 = s_term + i_star * _G_unchecked(i / i_star)
    lagged = _G_unchecked(_windows(traj, history, indices) / i_star)
    V2 = params.beta * float(inc.f(s_star, i_star)) * _delay_double_integral(kernel, traj.step, lagged)
    weight = params.delta / (params.mu + params.delta)
    if weight == 0:
        V3 = np.zeros_like(r)
    elif r_star > 0:
        V3 = weight * r_star * _G_unchecked(r / r_star)
    else:
        # r* = 0 (no recovery): r* ln(r/r*) -> 0
        V3 = weight * r
    return V1 + V2 + V3, V1, V2, V3


def _needs_log(params, E_star):
    return E_star.r > 0 and params.delta > 0


def _endemic_blockers(params, traj, history, E_star, indices):
    """Per index, the name of the first component that breaks a ln term, or ''."""
    windows = _windows(traj, history, indices)
    reasons = np.full(len(indices), "", dtype=object)
    checks = [("s", traj.states[indices, 0] <= LOG_FLOOR),
              ("i", np.any(windows <= LOG_FLOOR, axis=1))]
    if _needs_log(params, E_star):
        checks.append(("r", traj.states[indices, 2] <= LOG_FLOOR))
    for name, mask in reversed(checks):
        reasons[mask] = name
    return reasons


def endemic_functional(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
                       traj: Trajectory, history: HistoryFunction, E_star: State,
                       t: float) -> Tuple[float, float, float, float]:
    k = traj.index_of(t)
    kernel = _aligned(kernel, traj)
    indices = np.array([k])
    reason = _endemic_blockers(params, traj, history, E_star, indices)[0]
    if reason:
        raise ValueError(f"Component {reason} is not positive at t = {t!r}; V is undefined there")
    V, V1, V2, V3 = _endemic_terms(params, inc, kernel, traj, history, E_star, indices)
    return float(V[0]), float(V1[0]), float(V2[0]), float(V3[0])


def nonincreasing_breaches(times: np.ndarray, values: np.ndarray, kind: str,
                           rtol: float = MONOTONE_RTOL) -> List[Violation]:
    """Grid points where value(t_{k+1}) > value(t_k) + rtol * (1 + |value(t_k)|)."""
    previous, following = values[:-1], values[1:]
    excess = following - previous - rtol * (1 + np.abs(previous))
    valid = np.isfinite(previous) & np.isfinite(following)
    bad = np.flatnonzero(valid & (excess > 0))
    return [Violation(float(times[k + 1]), kind, float(excess[k])) for k in bad]


def certify_dfe(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
                traj: Trajectory, history: HistoryFunction) -> CertificateSeries:
    kernel = _aligned(kernel, traj)
    indices = np.arange(len(traj))
    series = CertificateSeries(times=traj.times.copy())
    positive = traj.states[:, 0] > LOG_FLOOR
    w = np.full(len(traj), np.nan)
    dw = np.full(len(traj), np.nan)
    if positive.any():
        w[positive] = _dfe_terms(params, inc, kernel, traj, history, indices[positive])
        dw[positive] = _dfe_rate(params, inc, kernel, traj, history, indices[positive])
    for k in np.flatnonzero(~positive):
        series.violations.append(Violation(float(traj.times[k]), "w-skipped-s", float(traj.states[k, 0])))
    series.w_values, series.dw_values = w, dw
    series.violations.extend(nonincreasing_breaches(traj.times, w, "w-increase"))
    _log_verdict("w", series, series.w_monotone)
    return series


def certify_endemic(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
                    traj: Trajectory, history: HistoryFunction, E_star: State) -> CertificateSeries:
    kernel = _aligned(kernel, traj)
    indices = np.arange(len(traj))
    series = CertificateSeries(times=traj.times.copy())
    reasons = _endemic_blockers(params, traj, history, E_star, indices)
    ok = reasons == ""
    columns = [np.full(len(traj), np.nan) for _ in range(4)]
    if ok.any():
        for column, values in zip(columns, _endemic_terms(params, inc, kernel, traj, history,
                                                          E_star, indices[ok])):
            column[ok] = values
    for k in np.flatnonzero(~ok):
        series.violations.append(Violation(float(traj.times[k]), f"V-skipped-{reasons[k]}", 0.0))
    series.V_values, series.V1_values, series.V2_values, series.V3_values = columns
    series.violations.extend(nonincreasing_breaches(traj.times, columns[0], "V-increase"))
    _log_verdict("V", series, series.V_monotone)
    return series


def _log_verdict(name, series, monotone):
    skipped = sum(1 for v in series.violations if "skipped" in v.kind)
    if skipped:
        logger.warning(f"{name} skipped at {skipped} samples with non-positive components")
    if monotone:
        logger.info(f"{name} is nonincreasing along the trajectory")
    else:
        first = next(v for v in series.violations if v.kind.endswith("increase"))
        logger.warning(f"{name} increases at t = {first.t:g} by {first.magnitude:.3g}")


def monitor_invariants(params: ModelParams, traj: Trajectory, history: HistoryFunction) -> List[Violation]:
    violations = []
    for column, name in enumerate("sir"):
        values = traj.states[:, column]
        for k in np.flatnonzero(values < POSITIVITY_FLOOR):
            violations.append(Violation(float(traj.times[k]), f"negative-{name}", float(values[k])))
    M = traj.lag_steps
    if M:
        past = traj.extended(history)[:M]
        for k in np.flatnonzero(np.any(past < POSITIVITY_FLOOR, axis=1)):
            violations.append(Violation(float((k - M) * traj.step), "negative-history",
                                        float(past[k].min())))
    N = traj.states.sum(axis=1)
    N0 = N[0]
    elapsed = traj.times - traj.t_start
    decay = np.exp(-params.mu * elapsed)
    bound = params.carrying_capacity * (1 - decay) + N0 * decay + BOUND_RTOL * N0
    for k in np.flatnonzero(N > bound):
        violations.append(Violation(float(traj.times[k]), "comparison-bound", float(N[k] - bound[k])))
    violations.sort(key=lambda v: v.t)
    if violations:
        logger.warning(f"{len(violations)} invariant violations, first at t = {violations[0].t:g} ({violations[0].kind})")
    else:
        logger.info("Positivity and the comparison bound hold at every sample")
    return violations
