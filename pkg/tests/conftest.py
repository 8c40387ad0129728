import pytest

from torusroute import make_torus
from torusroute.cli import prepare

_BUNDLES = {}


def prepared(dims, failed_nodes=(), failed_links=()):
    """Cached (topology, routing graph, cdg, added turns) per configuration."""
    key = (tuple(dims), tuple(sorted(failed_nodes)),
           tuple(sorted(failed_links)))
    if key not in _BUNDLES:
        t = make_torus(dims, failed_nodes, failed_links)
        rg, g, added = prepare(t)
        _BUNDLES[key] = (t, rg, g, added)
    return _BUNDLES[key]


@pytest.fixture(scope="session")
def desmos():
    return prepared([4, 2, 2, 2])


@pytest.fixture(scope="session")
def grid33():
    return prepared([3, 3])


@pytest.fixture(scope="session")
def ring4():
    return prepared([4])


@pytest.fixture(scope="session")
def mesh22():
    return prepared([2, 2])
