import pytest

from h2fg import build_lubin_tate, build_tate_point, make_unramified


@pytest.fixture(scope="session")
def base2():
    return make_unramified(2, 2, 32)


@pytest.fixture(scope="session")
def G2(base2):
    """Reference group: p = 2, [2] = 2X + X^4, D = 64."""
    return build_lubin_tate(base2, [0, 2, 0, 0, 1], D=64)


@pytest.fixture(scope="session")
def L1(G2):
    return G2.torsion_level(1)


@pytest.fixture(scope="session")
def L2(G2):
    return G2.torsion_level(2)


@pytest.fixture(scope="session")
def t1(G2):
    return build_tate_point(G2, 1, (1, 0))


@pytest.fixture(scope="session")
def t2(G2):
    return build_tate_point(G2, 2, (1, 0))


@pytest.fixture(scope="session")
def G3():
    """Cross-prime instance: p = 3, [3] = 3X + X^9."""
    return build_lubin_tate(make_unramified(3, 2, 24), [0, 3, 0, 0, 0, 0, 0, 0, 0, 1],
                            D=32)
