import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from surfacepde.errors import DegenerateCharge, PhaseCollision, PreconditionError
from surfacepde.exact import EpsRational, QComplex, sign
from surfacepde.lattice import DivisorClass, builtin, pullback, suggest_ample
from surfacepde.pde import (
    StabilityData,
    candidate_set,
    certify,
    certify_class,
    dhym_problem,
    flow_singular_locus,
    j_problem,
    j_tau,
    large_volume_j,
    nef_threshold,
    optimal_destabilizers,
    dhym_split_coefficients,
    z_charge,
    z_problem,
)
from surfacepde.walls import evaluate_cell, dhym_slice_spec
from surfacepde.zariski import decompose_infinitesimal, neg_limit

import oracle
from conftest import SURFACES, kahler_classes, random_kahler, random_positive, rand_q

D = DivisorClass.of


@pytest.fixture
def worked(bl2p2):
    L = bl2p2
    return L, j_problem(L, L.divisor("11H-E1-E2"), L.divisor("3H-E1-E2"))


def test_j_worked_instance(worked):
    L, prob = worked
    # c = 2*31/7, tau = c*omega - theta, by hand
    assert prob.c == Fraction(62, 7)
    assert prob.tau == D("109/7", "-55/7", "-55/7")
    assert oracle.dot(L.gram, prob.tau, L.curve("T")) == Fraction(-1, 7)
    cert = certify(L, prob)
    assert not cert.solvable and cert.status == "unsolvable"
    assert cert.failing == ((2, Fraction(-1, 7)),)
    assert cert.to_document(L)["failing"] == [["T", "-1/7"]]


def test_optimal_destabilizers_worked(worked):
    L, prob = worked
    opt = optimal_destabilizers(L, prob)
    assert opt.delta == Fraction(-1, 7)
    assert opt.curves == frozenset({2})
    assert opt.hypotheses_met and opt.cross_check
    th = opt.threshold
    assert th.u_star == Fraction(9, 8) and th.binding == "curve"
    assert th.a == L.divisor("2H-E1-E2") and th.t == Fraction(1, 9)
    assert th.zero_curves == frozenset({2})


def test_flow_locus_worked(worked):
    L, prob = worked
    locus = flow_singular_locus(L, prob)
    assert locus == [(2, EpsRational(Fraction(1, 7), Fraction(9)))]
    # at a concrete small eps the rational decomposition has the same coefficient
    eps = Fraction(1, 1000)
    from surfacepde.zariski import decompose

    dec = decompose(L, prob.tau - eps * prob.theta)
    assert dec.npart == ((2, Fraction(1, 7) + 9 * eps),)


def test_threshold_binding_on_exceptional_curve(bl2p2):
    L = bl2p2
    th = nef_threshold(L, L.divisor("4H-2E1-E2"), L.divisor("3H-E1-E2"))
    assert th.u_star == 2 and th.a == L.divisor("2H-E2")
    assert th.zero_curves == frozenset({0}) and th.t == Fraction(1, 2)


def test_threshold_absent_along_kahler_segment(bl2p2):
    # the ray from omega towards 2*omega never leaves the Kähler cone
    L = bl2p2
    th = nef_threshold(L, L.ample, 2 * L.ample)
    assert not th.exists and th.binding == "none"
    with pytest.raises(PreconditionError):
        nef_threshold(L, L.ample, L.ample)


def test_threshold_square_binding():
    L = builtin("p1xp1")
    th = nef_threshold(L, L.divisor("1,1"), L.divisor("1,3"))
    # (1, 1 + 2u)^2 = 2(1 + 2u) never vanishes for u > 0; the opposite ray does
    assert not th.exists
    th = nef_threshold(L, L.divisor("1,3"), L.divisor("1,1"))
    # (1, 3 - 2u): square 2(3 - 2u) vanishes at u = 3/2
    assert th.binding == "square" and th.u_star == Fraction(3, 2)
    assert th.a == L.divisor("1,0")


def test_boundary_instance(bl2p2):
    L = bl2p2
    prob = j_problem(L, L.divisor("10H-E1-E2"), L.ample)
    assert prob.c == 8 and prob.tau == D(14, -7, -7)
    cert = certify(L, prob)
    assert cert.status == "boundary" and not cert.solvable and cert.margin == 0
    assert optimal_destabilizers(L, prob).delta == 0


def test_j_preconditions(bl2p2):
    L = bl2p2
    with pytest.raises(PreconditionError):
        j_problem(L, L.ample, L.divisor("2H-E2"))
    with pytest.raises(PreconditionError):
        j_problem(L, L.divisor("H-E1"), L.ample)


@pytest.mark.parametrize("name", sorted(SURFACES))
def test_j_identities(name):
    L = SURFACES[name]
    rng = random.Random(f"j-{name}")
    for _ in range(30):
        theta, omega = random_positive(rng, L), random_kahler(rng, L)
        prob = j_problem(L, theta, omega)
        assert all(prob.identities(L).values())
        # solvable iff the threshold is positive
        opt = optimal_destabilizers(L, prob)
        if opt.delta is not None:
            assert certify(L, prob).solvable == (opt.delta > 0)


def test_dhym_scalar_pair(bl2p2):
    L = bl2p2
    prob = dhym_problem(L, L.ample, 2 * L.ample)
    assert prob.cot_phase == Fraction(-3, 4) and prob.tau == Fraction(5, 4) * L.ample
    assert prob.supercritical and certify(L, prob).solvable
    assert prob.c_tilde == Fraction(3, 4)


@pytest.mark.parametrize("name", sorted(SURFACES))
def test_dhym_identities_and_split(name):
    L = SURFACES[name]
    rng = random.Random(f"d-{name}")
    for _ in range(30):
        beta, alpha = random_kahler(rng, L), random_kahler(rng, L)
        prob = dhym_problem(L, beta, alpha)
        b2, a2 = L.square(beta), L.square(alpha)
        assert L.square(prob.tau) == (1 + prob.cot_phase**2) * b2
        assert L.pair(prob.tau, alpha) == (b2 + a2) / 2
        lam, k = dhym_split_coefficients(L, prob)
        ab = L.pair(alpha, beta)
        assert lam == a2 / (2 * ab) and k == b2 / (2 * ab) and lam > 0 and k > 0
        jp = large_volume_j(L, prob)
        # J solvable implies dHYM solvable
        if certify(L, jp).solvable:
            assert certify(L, prob).solvable


def test_dhym_flow_locus_inside_j_locus(bl2p2):
    L = bl2p2
    rng = random.Random(8)
    seen = 0
    while seen < 15:
        beta, alpha = random_kahler(rng, L, span=4), random_kahler(rng, L, span=4)
        prob = dhym_problem(L, beta, alpha)
        if certify(L, prob).solvable:
            continue
        seen += 1
        dh = {i for i, _ in flow_singular_locus(L, prob)}
        jl = {i for i, _ in flow_singular_locus(L, large_volume_j(L, prob))}
        assert dh <= jl


def test_dhym_thresholds(bl2p2):
    L = bl2p2
    prob = dhym_problem(L, L.ample, 2 * L.ample)
    opt = optimal_destabilizers(L, prob)
    # 1/c~ - beta.C/alpha.C = 4/3 - 1/2 on every curve
    assert opt.delta == Fraction(5, 6) and opt.curves == frozenset()
    with pytest.raises(PreconditionError):
        optimal_destabilizers(L, dhym_problem(L, 2 * L.ample, L.ample))


def test_p1xp1_always_solvable():
    L = builtin("p1xp1")
    rng = random.Random(2)
    for _ in range(100):
        prob = dhym_problem(L, random_kahler(rng, L), random_kahler(rng, L))
        assert certify(L, prob).solvable
    opt = optimal_destabilizers(L, j_problem(L, L.ample, L.divisor("1,2")))
    assert opt.delta is None and opt.curves == frozenset()


def plane_slice_data(L, s):
    return StabilityData(L.ample, (1, -s, s * s * Fraction(1, 2)), DivisorClass.zero(L.rank), 0)


def test_plane_slice_charge_at_i(bl2p2):
    L = bl2p2
    s = QComplex(Fraction(0), Fraction(1))
    data = plane_slice_data(L, s)
    assert z_charge(L, data, L.divisor("E1")) == QComplex(Fraction(-4), Fraction(-1))
    prob = z_problem(L, data, L.divisor("E1"))
    assert prob.V == 119 and prob.sign_s == 1
    assert not prob.valid["charge_upper_half_plane"] and prob.valid["V_positive"]


def test_plane_slice_matches_z_route(bl2p2):
    L = bl2p2
    spec = dhym_slice_spec(L, resolution=(2, 2))
    rng = random.Random(4)
    for _ in range(120):
        a, b = Fraction(rng.randint(-320, 14), 100), Fraction(rng.randint(5, 200), 100)
        for label in ("E1", "T"):
            prob = z_problem(L, plane_slice_data(L, QComplex(a, b)), L.divisor(label))
            status = certify_class(L, prob.tau).status if prob.valid["V_positive"] else "invalid"
            assert status == evaluate_cell(spec, L.divisor(label), a, b).status


cplx = st.builds(
    QComplex,
    st.fractions(min_value=-3, max_value=3, max_denominator=4),
    st.fractions(min_value=-3, max_value=3, max_denominator=4),
)


@given(
    kahler_classes(builtin("bl2p2")),
    st.tuples(cplx, cplx, cplx),
    st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=3), min_size=3, max_size=3),
    st.fractions(min_value=-2, max_value=2, max_denominator=3),
    st.lists(st.integers(-3, 3), min_size=3, max_size=3),
)
def test_z_critical_identities(beta, rho, u1, u2, c1):
    L = builtin("bl2p2")
    data = StabilityData(beta, rho, D(*u1), u2)
    try:
        prob = z_problem(L, data, D(*c1))
    except (DegenerateCharge, PhaseCollision):
        assume(False)
    assert L.square(prob.sigma) == prob.V
    assert prob.sign_s == sign(L.pair(prob.sigma, beta))
    assert prob.tau == (prob.sigma if prob.sign_s >= 0 else -prob.sigma)
    assert prob.cot_phi * prob.charge.im == prob.charge.re


def test_z_degenerate_inputs(bl2p2):
    L = bl2p2
    zero = DivisorClass.zero(3)
    with pytest.raises(DegenerateCharge):
        z_problem(L, StabilityData(L.ample, (1, 2, 3), zero, 0), L.divisor("E1"))
    with pytest.raises(PhaseCollision):
        z_problem(L, StabilityData(L.ample, ((0, 1), 0, (0, 1)), zero, 0), L.divisor("E1"))
    # trivial bundle: Z = 7 s^2 / 2, real at s = i, purely imaginary at s = 1 + i
    with pytest.raises(DegenerateCharge):
        z_problem(L, plane_slice_data(L, QComplex(Fraction(0), Fraction(1))), zero)
    prob = z_problem(L, plane_slice_data(L, QComplex(Fraction(1), Fraction(1))), zero)
    assert prob.charge == QComplex(Fraction(0), Fraction(7))
    assert prob.sigma == prob.eta / 2
    flags = StabilityData(L.ample, (1, 0, (0, -1)), zero, 0).flags()
    assert flags == {"rho_nonzero": False, "im_rho2_positive": False}


def test_z_certificate_requires_volume_form(bl2p2):
    L = bl2p2
    # V = eta^2/4 - gamma with eta parallel to beta and gamma chosen large
    data = StabilityData(L.ample, (1, (0, 1), 1), DivisorClass.zero(3), 50)
    prob = z_problem(L, data, L.divisor("E1"))
    if not prob.valid["V_positive"]:
        with pytest.raises(PreconditionError):
            certify(L, prob)
    else:
        assert certify(L, prob).kind == "Z"


# -- candidate sets -----------------------------------------------------------------


@pytest.mark.parametrize("name", ["bl2p2", "fermat_quartic_4lines", "blowup(p1xp1)"])
def test_candidate_set_scaling_and_perturbation(name):
    L = SURFACES[name]
    rng = random.Random(f"s-{name}")
    for _ in range(15):
        theta, omega = random_positive(rng, L), random_kahler(rng, L)
        base = candidate_set(L, theta, omega)
        assert candidate_set(L, theta, omega, mode="rational") == base
        for _ in range(3):
            r = Fraction(rng.randint(1, 30), rng.randint(1, 7))
            assert candidate_set(L, theta, r * omega) == base
            e = Fraction(rng.randint(1, 30), rng.randint(1, 7))
            assert candidate_set(L, theta + e * omega, omega) <= base


@pytest.mark.parametrize("name", ["bl2p2", "fermat_quartic_4lines", "p1xp1"])
def test_candidate_set_blowup_law(name):
    L = SURFACES[name]
    Y = SURFACES[f"blowup({name})"]
    rng = random.Random(f"b-{name}")
    for _ in range(15):
        theta, omega = random_positive(rng, L), random_kahler(rng, L)
        down = candidate_set(L, theta, omega)
        up = candidate_set(Y, pullback(theta), pullback(omega), direction=suggest_ample(Y, omega))
        assert up == down | {len(Y.negative_curves) - 1}


def test_candidate_set_worked(worked):
    L, prob = worked
    assert candidate_set(L, prob.theta, prob.omega) == frozenset({2})
    _, tau = j_tau(L, prob.theta, prob.omega)
    assert tau == prob.tau
