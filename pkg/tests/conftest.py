"""Shared fixtures: the two worked example systems and their reductions.

Conventions used throughout the tests: jet coordinates are named
q<order>_<axis>, momenta p<order>_<axis>; the flight system has k = 2,
n = 3 with L = sum_A (q1_A^2 - q2_A^2)/2; the beam has k = 2, n = 1
with L = mu*q2_1^2/2 + rho*q0_1 and mu declared nonzero.
"""

import os

import pytest

from hjmech import Constant, LagrangianSystem, hamiltonian, legendre, parse

MODELS = os.path.join(os.path.dirname(__file__), os.pardir, "models")
FIXTURES = os.path.join(os.path.dirname(__file__), "models")


def model_path(name: str) -> str:
    return os.path.abspath(os.path.join(MODELS, name))


def fixture_path(name: str) -> str:
    return os.path.abspath(os.path.join(FIXTURES, name))


def make_flight() -> LagrangianSystem:
    """k = 2, n = 3: velocities against accelerations, axis by axis."""
    table_less = "1/2*(q1_1^2 - q2_1^2 + q1_2^2 - q2_2^2 + q1_3^2 - q2_3^2)"
    from hjmech import JetSpace

    L = parse(table_less, JetSpace(3, 2).table())
    return LagrangianSystem(2, 3, L)


def make_flight_1d() -> LagrangianSystem:
    from hjmech import JetSpace

    L = parse("1/2*(q1_1^2 - q2_1^2)", JetSpace(1, 2).table())
    return LagrangianSystem(2, 1, L)


def make_beam(mu_value=1.0, rho_value=24.0) -> LagrangianSystem:
    from hjmech import JetSpace

    mu = Constant("mu", mu_value, nonzero=True)
    rho = Constant("rho", rho_value)
    L = parse("1/2*mu*q2_1^2 + rho*q0_1", JetSpace(1, 2).table(("mu", "rho")))
    return LagrangianSystem(2, 1, L, (mu, rho))


def make_beam_symbolic() -> LagrangianSystem:
    """Beam with unbound constants: mu nonzero, rho free."""
    from hjmech import JetSpace

    mu = Constant("mu", nonzero=True)
    rho = Constant("rho")
    L = parse("1/2*mu*q2_1^2 + rho*q0_1", JetSpace(1, 2).table(("mu", "rho")))
    return LagrangianSystem(2, 1, L, (mu, rho))


@pytest.fixture(scope="session")
def flight():
    return make_flight()


@pytest.fixture(scope="session")
def flight_1d():
    return make_flight_1d()


@pytest.fixture(scope="session")
def beam():
    return make_beam()


@pytest.fixture(scope="session")
def beam_symbolic():
    return make_beam_symbolic()


@pytest.fixture(scope="session")
def flight_ham(flight):
    fl = legendre(flight)
    return fl, hamiltonian(flight, fl)


@pytest.fixture(scope="session")
def beam_ham(beam):
    fl = legendre(beam)
    return fl, hamiltonian(beam, fl)


@pytest.fixture(scope="session")
def flight_1d_ham(flight_1d):
    fl = legendre(flight_1d)
    return fl, hamiltonian(flight_1d, fl)
