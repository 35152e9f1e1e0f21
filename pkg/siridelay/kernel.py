"""Incubation-period kernels g on [0, h] and the quadrature behind the
distributed-delay term.

Nodes are uniformly spaced and the weights are composite trapezoid weights,
so node spacing can be matched to the integrator step and every weight is
non-negative. Densities are assumed smooth enough for the trapezoid rule to
reach second order.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .logger import logger
from .utils import steps_in, validate_finite

TRUNCATED_EXPONENTIAL = "truncated-exponential"
UNIFORM = "uniform"
POINT_MASS = "point-mass"
CUSTOM = "custom"

KERNEL_FAMILIES = (TRUNCATED_EXPONENTIAL, UNIFORM, POINT_MASS)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class DelayKernel:
    h: float
    family: str
    raw_density: Callable
    nodes: np.ndarray
    weights: np.ndarray
    masses: np.ndarray
    normalization_factor: float

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def spacing(self) -> float:
        if self.n_nodes < 2:
            return 0.0
        return self.h / (self.n_nodes - 1)

    def density(self, tau):
        """Renormalized density; the raw one divided by its quadrature integral."""
        return np.asarray(self.raw_density(tau), dtype=float) / self.normalization_factor

    def effective_beta(self, beta: float) -> float:
        """Transmission coefficient to pair with the normalized density."""
        return beta * self.normalization_factor

    def mean(self) -> float:
        return convolve(self, lambda tau: tau)

    def on_grid(self, step: float) -> "DelayKernel":
        """Same raw density resampled so that node spacing equals `step`."""
        if self.h == 0:
            return self
        intervals = steps_in(self.h, step)
        if intervals + 1 == self.n_nodes:
            return self
        return kernel_from_density(self.raw_density, self.h, intervals + 1, family=self.family)


def trapezoid_weights(h: float, n_nodes: int) -> np.ndarray:
    spacing = h / (n_nodes - 1)
    weights = np.full(n_nodes, spacing)
    weights[0] = weights[-1] = spacing / 2
    return weights


def kernel_from_density(density: Callable, h: float, n_nodes: int, family: str = CUSTOM) -> DelayKernel:
    h = validate_finite("h", h)
    if h <= 0:
        raise ValueError(f"A continuous kernel needs h > 0, got {h}.")
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise ValueError(f"A continuous kernel needs at least 2 nodes, got {n_nodes}.")
    n_nodes = int(n_nodes)
    nodes = np.linspace(0.0, h, n_nodes)
    weights = trapezoid_weights(h, n_nodes)
    values = np.broadcast_to(np.asarray(density(nodes), dtype=float), nodes.shape)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError(f"Kernel density must be finite and non-negative on [0, {h}].")
    raw_integral = float(weights @ values)
    if raw_integral <= 0:
        raise ValueError("Kernel density integrates to zero on its support.")
    if abs(raw_integral - 1) > 1e-3:
        logger.warning(f"Kernel density integrates to {raw_integral:.6g}; renormalizing "
                       "(use effective_beta to keep the transmission rate)")
    masses = weights * values / raw_integral
    masses = masses / masses.sum()
    logger.debug(f"Built {family} kernel: h={h}, {n_nodes} nodes, raw integral {raw_integral!r}")
    return DelayKernel(h=h, family=family, raw_density=density, nodes=_frozen(nodes),
                       weights=_frozen(weights), masses=_frozen(masses),
                       normalization_factor=raw_integral)


def _truncated_exponential(h):
    scale = -np.expm1(-h)

    def density(tau):
        return np.exp(-np.asarray(tau, dtype=float)) / scale
    return density


def _uniform(h):
    def density(tau):
        return np.full(np.shape(tau), 1.0 / h)
    return density


def _point_mass(tau):
    return np.ones(np.shape(tau))


def make_kernel(family: str, h: float, n_nodes: int) -> DelayKernel:
    if family == POINT_MASS:
        h = validate_finite("h", h)
        if h != 0:
            raise ValueError(f"The point-mass kernel sits at tau = 0 and needs h = 0, got {h}.")
        one = _frozen([1.0])
        return DelayKernel(h=0.0, family=POINT_MASS, raw_density=_point_mass,
                           nodes=_frozen([0.0]), weights=one, masses=one,
                           normalization_factor=1.0)
    if family == TRUNCATED_EXPONENTIAL:
        h = validate_finite("h", h)
        if h <= 0:
            raise ValueError(f"A continuous kernel needs h > 0, got {h}.")
        return kernel_from_density(_truncated_exponential(h), h, n_nodes, family=family)
    if family == UNIFORM:
        h = validate_finite("h", h)
        if h <= 0:
            raise ValueError(f"A continuous kernel needs h > 0, got {h}.")
        return kernel_from_density(_uniform(h), h, n_nodes, family=family)
    raise ValueError(f"Unknown kernel family '{family}'. Known families: {', '.join(KERNEL_FAMILIES)}")


def convolve(kernel: DelayKernel, evaluand) -> float:
    """Quadrature of g(tau)*evaluand(tau) over [0, h].

    `evaluand` is either a callable taking the node array or an array of
    values already sampled at the nodes.
    """
    if callable(evaluand):
        values = evaluand(kernel.nodes)
    else:
        values = evaluand
    values = np.broadcast_to(np.asarray(values, dtype=float), kernel.nodes.shape)
    return float(kernel.masses @ values)
