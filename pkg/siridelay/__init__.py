from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from .analysis import (EquilibriumReport, NextGenMatrices, NoEndemicEquilibrium, H_of_i, analyze,
                       compute_R0, endemic_equilibrium)
from .config import ConfigError, ScenarioConfig, load_config, load_preset
from .diagnostics import (CertificateSeries, G, Violation, certify_dfe, certify_endemic, dfe_functional,
                          dfe_functional_rate, endemic_functional, monitor_invariants)
from .incidence import HypothesisReport, IncidenceFunction, builtin_incidence, check_hypotheses
from .integrator import HistoryFunction, HistoryRangeError, Trajectory, integrate, interpolate
from .kernel import DelayKernel, convolve, kernel_from_density, make_kernel
from .model import ModelParams, State, StateDerivative, delayed_incidence, rhs

__version__ = "0.1.0"
