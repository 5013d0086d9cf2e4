import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mildrfde import History, Kernel  # noqa: E402
from oracles import MethodOfSteps  # noqa: E402


@dataclass(frozen=True)
class Fixture:
    """Scalar test problem together with the inputs of its symbolic oracle."""

    name: str
    K: Kernel
    phi: History
    atoms: tuple      # (tau, a) pairs for the oracle
    density: float    # constant density b on [-1, 0]
    history: tuple    # (lo, hi, ascending coeffs)

    def oracle(self, T):
        return MethodOfSteps(self.atoms, self.density, self.K.r, self.history, float(self.phi.value_at_zero[0]), T)


def single_delay(a=-0.5):
    K = Kernel.from_parts(1.0, [(-1.0, a)])
    return Fixture("single_delay", K, History.constant(1.0, 1.0), ((1.0, a),), 0.0, ((-1.0, 0.0, (1.0,)),))


def two_delays():
    K = Kernel.from_parts(1.0, [(-1.0, -0.5), (-0.5, 0.3)])
    phi = History.from_global(1.0, [-1.0, 0.0], [[1.0, 1.0]], [1.0])
    return Fixture("two_delays", K, phi, ((1.0, -0.5), (0.5, 0.3)), 0.0, ((-1.0, 0.0, (1.0, 1.0)),))


def distributed():
    K = Kernel.from_parts(1.0, [], [((-1.0, 0.0), [-0.8])], n=1)
    return Fixture("distributed", K, History.constant(1.0, 1.0), (), -0.8, ((-1.0, 0.0, (1.0,)),))


def indicator_mixed(p=1.0):
    K = Kernel.from_parts(1.0, [(-1.0, -0.5)], [((-1.0, 0.0), [0.4])], n=1)
    phi = History.indicator(1.0, -1.0, -0.5, 1.0, 0.0, p=p)
    return Fixture("indicator_mixed", K, phi, ((1.0, -0.5),), 0.4,
                   ((-1.0, -0.5, (1.0,)), (-0.5, 0.0, (0.0,))))


ALL_FIXTURES = {f().name: f for f in (single_delay, two_delays, distributed, indicator_mixed)}


@pytest.fixture(params=sorted(ALL_FIXTURES))
def any_fixture(request):
    return ALL_FIXTURES[request.param]()


@pytest.fixture
def f1():
    return single_delay()


@pytest.fixture
def f4():
    return indicator_mixed()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.SUMMARY:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.SUMMARY, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
