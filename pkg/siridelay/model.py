from dataclasses import dataclass, fields, replace
from typing import Callable, Mapping, Union

import numpy as np

from .incidence import IncidenceFunction
from .kernel import DelayKernel, convolve
from .utils import validate_finite, validate_positive

RATE_NAMES = ("Lambda", "mu", "gamma", "c", "beta", "delta")


@dataclass(frozen=True)
class ModelParams:
    Lambda: float
    mu: float
    gamma: float
    c: float
    beta: float
    delta: float

    def __post_init__(self):
        for name in RATE_NAMES:
            if name in ("Lambda", "mu"):
                value = validate_positive(name, getattr(self, name))
            else:
                value = validate_finite(name, getattr(self, name))
            object.__setattr__(self, name, value)

    @classmethod
    def from_mapping(cls, values: Mapping) -> "ModelParams":
        missing = [name for name in RATE_NAMES if name not in values]
        if missing:
            raise ValueError(f"Missing model rates: {', '.join(missing)}")
        return cls(**{name: values[name] for name in RATE_NAMES})

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def removal(self) -> float:
        """mu + c + gamma, the total outflow rate of the infective class."""
        return self.mu + self.c + self.gamma

    @property
    def r0_denominator(self) -> float:
        return (self.mu + self.delta) * self.removal - self.delta * self.gamma

    @property
    def k(self) -> float:
        """Net infective outflow once relapse from r is accounted for."""
        return self.r0_denominator / (self.mu + self.delta)

    @property
    def carrying_capacity(self) -> float:
        return self.Lambda / self.mu


@dataclass(frozen=True)
class State:
    s: float
    i: float
    r: float
    t: float = 0.0

    @property
    def N(self) -> float:
        return self.s + self.i + self.r

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.i, self.r])


@dataclass(frozen=True)
class StateDerivative:
    ds: float
    di: float
    dr: float

    def as_array(self) -> np.ndarray:
        return np.array([self.ds, self.di, self.dr])


# i_history: lag-indexed history, a callable of tau or values at the kernel nodes
History = Union[Callable, np.ndarray]


def lagged_values(kernel: DelayKernel, i_history: History) -> np.ndarray:
    values = i_history(kernel.nodes) if callable(i_history) else i_history
    return np.broadcast_to(np.asarray(values, dtype=float), kernel.nodes.shape)


def vector_field(params: ModelParams, s: float, i: float, r: float, infection: float) -> np.ndarray:
    return np.array([
        params.Lambda - params.mu * s - infection,
        infection - params.removal * i + params.delta * r,
        params.gamma * i - (params.mu + params.delta) * r,
    ])


def delayed_incidence(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel,
                      s_now: float, i_history: History) -> float:
    """beta * integral of g(tau) f(s_now, i(t - tau)) over [0, h]."""
    lagged = lagged_values(kernel, i_history)
    return params.beta * convolve(kernel, np.asarray(inc.f(s_now, lagged), dtype=float))


def rhs(params: ModelParams, inc: IncidenceFunction, kernel: DelayKernel, state: State,
        i_history: History) -> StateDerivative:
    infection = delayed_incidence(params, inc, kernel, state.s, i_history)
    return StateDerivative(*vector_field(params, state.s, state.i, state.r, infection))
