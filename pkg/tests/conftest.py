from fractions import Fraction

import numpy as np
import pytest

from models.lattice_model import (BoundaryCondition, Lattice, cycle_graph, dumbbell, ladder,
                                  path_graph, site, square_with_ghost)


@pytest.fixture
def bar():
    return dumbbell()


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def cycle4():
    return cycle_graph(4)


@pytest.fixture
def square():
    return square_with_ghost()


@pytest.fixture
def ladder4():
    return ladder(4)


@pytest.fixture
def plus_box():
    return Lattice(1, BoundaryCondition.PLUS)


@pytest.fixture
def corners():
    return site(0, 0), site(1, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def beta():
    return Fraction(1, 2)
