import random
import warnings
from fractions import Fraction

import pytest
from hypothesis import given

from surfacepde.errors import GuardError, NotPseudoeffective, PreconditionError
from surfacepde.lattice import DivisorClass, SurfaceLattice, builtin, pullback
from surfacepde.zariski import (
    BoundWarning,
    decompose,
    decompose_infinitesimal,
    decompose_oracle,
    destabilizer_bound,
    destabilizer_set,
    neg_limit,
    uniform_test_set,
)

import oracle
from conftest import SURFACES, positive_classes, random_positive

D = DivisorClass.of


def test_negative_part_on_exceptional_curve(bl2p2):
    L = bl2p2
    dec = decompose(L, L.divisor("H+2E1"))
    assert dec.zpart == L.divisor("H")
    assert dec.npart == ((0, Fraction(2)),)
    assert dec == decompose_oracle(L, L.divisor("H+2E1"))
    assert all(dec.verify(L).values())
    assert dec.to_document(L)["npart"] == [["E1", "2"]]


def test_negative_part_on_line(bl2p2):
    L = bl2p2
    tau = L.divisor("2H-E1-E2") + 3 * L.curve("T")
    dec = decompose(L, tau)
    assert dec.support == frozenset({2})
    assert dec.coefficient(2) == 3
    assert dec.zpart == L.divisor("2H-E1-E2")


def test_fermat_worked_instance():
    L = builtin("fermat_quartic_4lines")
    tau = L.divisor("2l_jj+l_jk+3l_kk+l_kj")
    dec = decompose(L, tau)
    P = L.divisor("l_jj+l_jk+l_kk+l_kj")
    assert dec.zpart == P
    assert dec.npart == ((0, Fraction(1)), (2, Fraction(2)))
    m, rest = oracle.zariski_by_hand_fermat(2, 1, 3, 1)
    assert dec.coefficients(L) == list(rest) and m == 1


def test_rejections(bl2p2):
    L = bl2p2
    for bad in ("-H", "E1-E2", "H-2E1-2E2"):
        with pytest.raises(NotPseudoeffective):
            decompose(L, L.divisor(bad))
        with pytest.raises(NotPseudoeffective):
            decompose_oracle(L, L.divisor(bad))


def test_not_pseudoeffective_carries_diagnostics(bl2p2):
    with pytest.raises(NotPseudoeffective) as info:
        decompose(bl2p2, bl2p2.divisor("E1-E2"))
    assert info.value.support is not None


def test_oracle_guard():
    n = 21
    gram = [[Fraction(0)] * (n + 1) for _ in range(n + 1)]
    gram[0][0] = Fraction(1)
    for i in range(1, n + 1):
        gram[i][i] = Fraction(-1)
    curves = [tuple(int(k == i) for k in range(n + 1)) for i in range(1, n + 1)]
    L = SurfaceLattice("many", gram, [f"g{i}" for i in range(n + 1)], curves, (), (5,) + (-1,) * n)
    with pytest.raises(GuardError):
        decompose_oracle(L, L.ample)
    assert decompose(L, L.ample).npart == ()


@pytest.mark.parametrize("name", sorted(SURFACES))
def test_iteration_matches_oracle(name):
    L = SURFACES[name]
    rng = random.Random(f"oracle-{name}")
    for _ in range(40):
        tau = random_positive(rng, L)
        dec = decompose(L, tau)
        assert dec == decompose_oracle(L, tau)
        assert all(dec.verify(L).values())


@pytest.mark.parametrize("name", ["bl2p2", "fermat_quartic_4lines", "blowup(bl2p2)"])
def test_homogeneity_and_convexity(name):
    L = SURFACES[name]
    rng = random.Random(f"conv-{name}")
    for _ in range(25):
        t1, t2 = random_positive(rng, L), random_positive(rng, L)
        r = Fraction(rng.randint(1, 20), rng.randint(1, 7))
        d1, d2 = decompose(L, t1), decompose(L, t2)
        scaled = decompose(L, r * t1)
        assert scaled.zpart == r * d1.zpart
        assert scaled.coefficients(L) == [r * a for a in d1.coefficients(L)]
        both = decompose(L, t1 + t2)
        for a, b, c in zip(both.coefficients(L), d1.coefficients(L), d2.coefficients(L)):
            assert a <= b + c


def test_pullback_law():
    L = builtin("bl2p2")
    Y = SURFACES["blowup(bl2p2)"]
    rng = random.Random(11)
    for _ in range(30):
        tau = random_positive(rng, L)
        down, up = decompose(L, tau), decompose(Y, pullback(tau))
        assert up.zpart == pullback(down.zpart)
        assert up.npart == down.npart


@given(positive_classes(builtin("bl2p2")))
def test_decomposition_invariants_bl2p2(tau):
    L = builtin("bl2p2")
    dec = decompose(L, tau)
    checks = dec.verify(L)
    assert all(checks.values()), checks
    assert L.square(dec.zpart) > 0  # P+ classes are big


def test_neg_limit_on_nef_boundary(bl2p2):
    L = bl2p2
    for mode in ("infinitesimal", "rational"):
        assert neg_limit(L, L.divisor("2H-E2"), mode=mode) == frozenset({0})
        assert neg_limit(L, L.divisor("2H-E1-E2"), mode=mode) == frozenset({2})
        assert neg_limit(L, L.ample, mode=mode) == frozenset()


def test_neg_limit_coefficients_are_first_order(bl2p2):
    L = bl2p2
    dec = decompose_infinitesimal(L, L.divisor("2H-E1-E2"), L.ample)
    (idx, coef), = dec.npart
    assert idx == 2 and coef.value == 0 and coef.slope == 1


def test_neg_limit_fermat_cycle_is_not_defined():
    # P is nef with P^2 = 0; P - eps*h has negative square for every eps
    L = builtin("fermat_quartic_4lines")
    P = L.divisor("l_jj+l_jk+l_kk+l_kj")
    for mode in ("infinitesimal", "rational"):
        with pytest.raises(NotPseudoeffective):
            neg_limit(L, P, mode=mode)


def test_neg_limit_preconditions(bl2p2):
    L = bl2p2
    with pytest.raises(PreconditionError):
        neg_limit(L, L.divisor("H+2E1"))
    with pytest.raises(PreconditionError):
        neg_limit(L, L.ample, a=L.divisor("H"))
    with pytest.raises(ValueError):
        neg_limit(L, L.ample, mode="float")


def test_destabilizer_sets(bl2p2):
    L = bl2p2
    assert destabilizer_set(L, D("109/7", "-55/7", "-55/7")) == frozenset({2})
    assert destabilizer_set(L, L.divisor("4H-2E1-2E2")) == frozenset({2})
    assert destabilizer_set(L, L.ample) == frozenset()
    assert destabilizer_bound(L) == 2
    with pytest.raises(PreconditionError):
        destabilizer_set(L, L.divisor("H-E1"))


def test_uniform_test_set(bl2p2):
    L = bl2p2
    hull = [L.divisor("4H-2E1-2E2"), L.divisor("2H-E2")]
    result = uniform_test_set(L, hull)
    assert result == frozenset({0, 2})
    assert len(result) <= len(hull) * L.rank
    # any positive combination failing a curve fails it on some member
    rng = random.Random(5)
    for _ in range(50):
        s, t = Fraction(rng.randint(1, 9), rng.randint(1, 9)), Fraction(rng.randint(1, 9), rng.randint(1, 9))
        tau = s * hull[0] + t * hull[1]
        bad = {i for i, p in enumerate(L.curve_pairings(tau)) if p <= 0}
        assert bad <= result


def test_uniform_test_set_boundary_member(bl2p2):
    L = bl2p2
    # H - E1 pairs to zero with E2 and T
    assert uniform_test_set(L, [L.divisor("H-E1")]) == frozenset({1, 2})
    with pytest.raises(PreconditionError):
        uniform_test_set(L, [L.divisor("E1-E2")])


def test_bound_warning_on_non_projective_surface():
    # rank-2 lattice, one curve; the bound for a non-projective surface is rho
    L = SurfaceLattice("np", ((1, 0), (0, -1)), ("H", "E"), ((0, 1),), ("E",), (2, -1), projective=False)
    assert destabilizer_bound(L) == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error", BoundWarning)
        destabilizer_set(L, L.divisor("H"))
