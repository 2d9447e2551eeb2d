import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from surfacepde.lattice import (
    DivisorClass,
    blowup_general_point,
    builtin,
    in_positive_cone,
    is_kahler,
    suggest_ample,
)

import acceptance_log

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow]
)
settings.load_profile("default")

BASE_NAMES = ("bl2p2", "p1xp1", "fermat_quartic_4lines")


def blown_up(L):
    Y = blowup_general_point(L)
    return Y.with_ample(suggest_ample(Y, L.ample))


def all_surfaces():
    out = {}
    for name in BASE_NAMES:
        L = builtin(name)
        out[name] = L
        out[f"blowup({name})"] = blown_up(L)
    return out


SURFACES = all_surfaces()


def rand_q(rng, span=6, den=4):
    return Fraction(rng.randint(-span * den, span * den), rng.randint(1, den))


def random_positive(rng, L, span=3):
    """A random class in the positive cone: t*ample + noise, rejection sampled."""
    while True:
        t = Fraction(rng.randint(1, 12), rng.randint(1, 3))
        v = DivisorClass(tuple(rand_q(rng, span) for _ in range(L.rank)))
        tau = t * L.ample + v
        if in_positive_cone(L, tau):
            return tau


def random_kahler(rng, L, span=2):
    while True:
        tau = random_positive(rng, L, span)
        if is_kahler(L, tau):
            return tau


@st.composite
def positive_classes(draw, L, span=3):
    t = draw(st.fractions(min_value=Fraction(1, 3), max_value=12, max_denominator=3))
    v = draw(st.lists(st.fractions(min_value=-span, max_value=span, max_denominator=4), min_size=L.rank, max_size=L.rank))
    tau = t * L.ample + DivisorClass(tuple(v))
    from hypothesis import assume

    assume(in_positive_cone(L, tau))
    return tau


@st.composite
def kahler_classes(draw, L, span=2):
    tau = draw(positive_classes(L, span))
    from hypothesis import assume

    assume(is_kahler(L, tau))
    return tau


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def bl2p2():
    return builtin("bl2p2")


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, secs, detail in sorted(acceptance_log.RESULTS):
        line = f"criterion {number:>2} {verdict}  {title}  ({secs:.2f}s)"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
