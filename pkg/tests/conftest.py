"""Shared fixtures: the acceptance-scale seeded runs, executed once."""
import numpy as np
import pytest

from phasefem import diagnostics as dg
from phasefem.app import initial_phi
from phasefem.assembly import SchemeKind, quadrature
from phasefem.mesh import build_periodic_unit_square
from phasefem.physics import MaterialLaws
from phasefem.schemes import SchemeConfig, initial_state, run
from phasefem.spaces import SpaceKind, build_space

ACCEPTANCE_SEED = 1
RULE6 = quadrature(6)


class RunResult:
    def __init__(self, config, state0, records, final):
        self.config = config
        self.state0 = state0
        self.records = records
        self.final = final
        self.mass0 = dg.mass(state0.phi, RULE6)
        self.energy0 = dg.energy(state0.phi, state0.v, config.laws, RULE6)


def _acceptance_run(scheme: SchemeKind, n: int, t_end: float) -> RunResult:
    laws = MaterialLaws(beta=1 if scheme is SchemeKind.CHNS else 0)
    config = SchemeConfig(scheme=scheme, n=n, tau=1e-3, t_end=t_end, laws=laws,
                          darcy_order=0, seed=ACCEPTANCE_SEED)
    mesh = build_periodic_unit_square(n)
    phi0 = initial_phi(ACCEPTANCE_SEED, build_space(mesh, SpaceKind.P1C))
    state0 = initial_state(config, phi0)
    records = []
    final = run(config, state0, diag_sink=records.append)
    return RunResult(config, state0, records, final)


@pytest.fixture(scope="session")
def run_ch32():
    return _acceptance_run(SchemeKind.CH, 32, 0.1)


@pytest.fixture(scope="session")
def run_chd32():
    return _acceptance_run(SchemeKind.CHD, 32, 0.1)


@pytest.fixture(scope="session")
def run_chns32():
    return _acceptance_run(SchemeKind.CHNS, 32, 0.1)


@pytest.fixture(scope="session")
def run_ch64_spinodal():
    return _acceptance_run(SchemeKind.CH, 64, 0.5)
