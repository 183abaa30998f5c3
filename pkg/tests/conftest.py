from __future__ import annotations

import functools

import numpy as np
import pytest

from hypwave.data import gaussian_shell
from hypwave.evolve import StatePair
from hypwave.transform import make_plan


@functools.lru_cache(maxsize=None)
def cached_plan(n: int, n_r: int = 1024):
    return make_plan(n, n_r=n_r)


@pytest.fixture(scope="session")
def plan_for():
    return cached_plan


@pytest.fixture(params=[3, 4, 5], ids=lambda n: f"n{n}")
def plan(request):
    return cached_plan(request.param)


@pytest.fixture(scope="session")
def plan3():
    return cached_plan(3)


def bump_state(plan, amplitude=1.0, r0=0.0, width=1.0):
    return StatePair.from_fields(plan, gaussian_shell(plan.radial, amplitude, r0, width))


def random_bumps(grid, count, seed):
    """Seeded ensemble of smooth, decayed Gaussian-shell superpositions."""
    from hypwave.data import random_field

    rng = np.random.default_rng(seed)
    return [random_field(grid, rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion at the end of the session

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def report(number: int, title: str, passed: bool, detail: str) -> None:
    """Record a criterion outcome; printed by the terminal summary and asserted by the caller."""
    previous = ACCEPTANCE.get(number)
    if previous is not None:
        passed = passed and previous[1]
        detail = f"{previous[2]}; {detail}"
    ACCEPTANCE[number] = (title, passed, detail)
    print(f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
