from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from frachum.fracops import TimeGrid  # noqa: E402
from frachum.hum import HUMProblem  # noqa: E402
from frachum.spectral import (  # noqa: E402
    PointActuator,
    Region,
    SpectralBasis,
    ZoneActuator,
    _region_grid,
    build_target,
)

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# reference configuration
L, N, T = 1.0, 20, 1.0
OMEGA = Region.interval(0.2, 0.5)
ZONE = ZoneActuator(0.1, 0.4)
POINT = PointActuator(0.3)
Y0 = np.r_[1.0, 0.5, np.zeros(N - 2)]
# twin with G spanned by restricted modes 3, 4 (the default G contains chi psi_1(T))
GENERIC_ORDER = (2, 3, 0, 1, 4)


def make_problem(actuator=ZONE, alpha=0.6, nt=1001, generic=False, n_modes=N, g_dim=2, ambient_dim=5):
    basis = SpectralBasis(L, n_modes)
    grid = _region_grid(basis, OMEGA)
    seeds = [grid.modes[i] for i in GENERIC_ORDER] if generic else None
    target = build_target(grid, basis, ambient_dim, g_dim, seeds)
    return HUMProblem(basis, actuator, target, alpha, TimeGrid(T, nt))


def initial_state(problem):
    c = np.zeros(problem.basis.N)
    c[:2] = Y0[:2]
    return problem.basis.field(c)


@pytest.fixture(scope="session")
def basis():
    return SpectralBasis(L, N)


@pytest.fixture(scope="session")
def generic_zone():
    return make_problem(generic=True)


@pytest.fixture(scope="session")
def generic_point():
    return make_problem(POINT, generic=True)


@pytest.fixture(scope="session")
def reference_zone():
    return make_problem()


@pytest.fixture(scope="session")
def reference_point():
    return make_problem(POINT)


# acceptance criteria report: one PASS/FAIL line per criterion in the terminal summary
_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record ``(number, title, ok, detail)`` and echo the line to stdout."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
