import pytest

from siridelay.analysis import analyze
from siridelay.config import load_preset
from siridelay.integrator import integrate


class Scenario:
    def __init__(self, name):
        self.config = load_preset(name)
        self.params = self.config.params
        self.inc = self.config.incidence()
        self.kernel = self.config.kernel()
        self.history = self.config.history()
        self.report = analyze(self.params, self.inc)
        self.t_end = self.config.t_end
        self._traj = None

    @property
    def traj(self):
        if self._traj is None:
            self._traj = integrate(self.params, self.inc, self.kernel, self.history,
                                   self.t_end, self.config.step)
        return self._traj


@pytest.fixture(scope="session")
def fig1():
    return Scenario("fig1")


@pytest.fixture(scope="session")
def fig2():
    return Scenario("fig2")


@pytest.fixture
def fig1_params(fig1):
    return fig1.params


@pytest.fixture
def fig2_params(fig2):
    return fig2.params
