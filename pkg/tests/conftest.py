import numpy as np
import pytest

from sdsopt.poly import Polynomial
from sdsopt.semialg import Program, SemiAlgebraicFunction, SocpSet, from_polynomial


def quartic_objective() -> SemiAlgebraicFunction:
    return from_polynomial(Polynomial(2, {(4, 0): 1.0, (0, 1): -1.0}))


def disc_set() -> SocpSet:
    a0 = np.eye(3)
    a1 = np.zeros((3, 3))
    a1[0, 2] = a1[2, 0] = 1.0
    a2 = np.zeros((3, 3))
    a2[1, 2] = a2[2, 1] = 1.0
    return SocpSet([a0, a1, a2])


def disc_constraint() -> SemiAlgebraicFunction:
    h0 = Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0})
    hs = [Polynomial(2, {(1, 0): 2.0}), Polynomial(2, {(0, 1): 2.0})]
    return SemiAlgebraicFunction(h0, hs, disc_set())


@pytest.fixture(scope="session")
def golden_program() -> Program:
    """min x1^4 - x2  s.t.  ||x||^2 - 1 + 2||x|| <= 0."""
    return Program(quartic_objective(), [disc_constraint()])


@pytest.fixture(scope="session")
def interval_set() -> SocpSet:
    """One-parameter set equal to [0, 1]: diag(y, 1 - y) sdd."""
    return SocpSet([np.diag([0.0, 1.0]), np.diag([1.0, -1.0])])


def coupled_quadratic(y: float = 1.0) -> Polynomial:
    return Polynomial(2, {(2, 0): 1.0, (0, 2): 2.0, (1, 1): 2.0 * y})
