"""Shared solver runs.

Sweeps are the expensive part of the suite, so each fixture's stretch ladder
is computed once per session and shared between the trend tests and the
acceptance criteria.
"""

import pytest

from confmod.fixtures import named_domain
from confmod.modsolver import SolverOptions
from confmod.verify import DEFAULT_H_LADDER, sweep


@pytest.fixture(scope="session")
def sweep_cache():
    cache = {}

    def get(name, H=DEFAULT_H_LADDER):
        key = (name, tuple(H))
        if key not in cache:
            cache[key] = sweep(named_domain(name), H, SolverOptions())
        return cache[key]

    return get
