import pytest

from fractions import Fraction

from integrable_lab import tau


def make_pole_excluder(params, radius=0.01):
    cache = {}

    def exclude(pt):
        key = tuple(sorted((k, v) for k, v in pt.items() if k != "x"))
        if key not in cache:
            cache[key] = tau.pole_locations(params, dict(key))
        return any(abs(pt["x"] - x0) < radius for x0 in cache[key])

    return exclude


@pytest.fixture(scope="session")
def params_one():
    return tau.SolitonParams(p=(1,), s=(2,))


@pytest.fixture(scope="session")
def params_two():
    return tau.SolitonParams(p=(1, Fraction(1, 2)), s=(2, 5))


@pytest.fixture(scope="session")
def params_fig4():
    return tau.SolitonParams(p=(1,), s=(2,), q=(3,))


@pytest.fixture(scope="session")
def params_fig5():
    return tau.SolitonParams(p=(1, Fraction(1, 2)), s=(0, 0), q=(3, -3))
