"""Reduced cohomological data for the J, dHYM and rank-one Z-critical equations.

On a surface each equation is solvable exactly when an explicit class ``tau``
is Kähler, so everything here reduces to building ``tau`` exactly and handing
it to the finite curve test in :mod:`surfacepde.lattice`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .errors import DegenerateCharge, PhaseCollision, PreconditionError
from .exact import QComplex, qstr, sign
from .lattice import DivisorClass, SurfaceLattice, in_positive_cone, is_kahler
from .zariski import BoundWarning, decompose_infinitesimal, destabilizer_bound, neg_limit

__all__ = [
    "JProblem",
    "DHYMProblem",
    "StabilityData",
    "ZProblem",
    "SolvabilityCertificate",
    "NefThresholdResult",
    "OptimalDestabilizers",
    "j_tau",
    "j_problem",
    "dhym_tau",
    "dhym_problem",
    "z_charge",
    "z_problem",
    "certify",
    "nef_threshold",
    "optimal_destabilizers",
    "flow_singular_locus",
    "large_volume_j",
    "dhym_split_coefficients",
    "candidate_set",
]


# --- J-equation ----------------------------------------------------------------


@dataclass(frozen=True)
class JProblem:
    theta: DivisorClass
    omega: DivisorClass
    c: Fraction
    tau: DivisorClass
    kind = "J"

    def identities(self, L: SurfaceLattice) -> dict:
        return {
            "tau.omega = theta.omega": L.pair(self.tau, self.omega) == L.pair(self.theta, self.omega),
            "tau^2 = theta^2": L.square(self.tau) == L.square(self.theta),
        }


def j_tau(L: SurfaceLattice, theta: DivisorClass, omega: DivisorClass):
    """``(c, c*omega - theta)`` with ``c = 2 theta.omega / omega^2``; no positivity checks."""
    w2 = L.square(omega)
    if w2 == 0:
        raise PreconditionError("omega^2 = 0")
    c = 2 * L.pair(theta, omega) / w2
    return c, c * omega - theta


def j_problem(L: SurfaceLattice, theta: DivisorClass, omega: DivisorClass) -> JProblem:
    if not is_kahler(L, omega):
        raise PreconditionError("omega must be Kähler")
    if not in_positive_cone(L, theta):
        raise PreconditionError("theta must lie in the positive cone")
    c, tau = j_tau(L, theta, omega)
    prob = JProblem(theta, omega, c, tau)
    _assert_identities(prob.identities(L))
    return prob


def _assert_identities(checks: dict):
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise AssertionError(f"exact identity failed: {', '.join(bad)}")


# --- dHYM ----------------------------------------------------------------------


@dataclass(frozen=True)
class DHYMProblem:
    beta: DivisorClass
    alpha: DivisorClass
    cot_phase: Fraction
    tau: DivisorClass
    supercritical: bool
    kind = "dHYM"

    def identities(self, L: SurfaceLattice) -> dict:
        b2, a2 = L.square(self.beta), L.square(self.alpha)
        return {
            "tau^2 = (1+cot^2) beta^2": L.square(self.tau) == (1 + self.cot_phase**2) * b2,
            "tau.alpha = (beta^2+alpha^2)/2": L.pair(self.tau, self.alpha) == (b2 + a2) / 2,
        }

    @property
    def c_tilde(self) -> Fraction:
        """``(alpha^2 - beta^2)/(2 alpha.beta)``, i.e. ``-cot``."""
        return -self.cot_phase


def dhym_tau(L: SurfaceLattice, beta: DivisorClass, alpha: DivisorClass):
    ab = L.pair(alpha, beta)
    if ab == 0:
        raise PreconditionError("alpha.beta = 0")
    cot = (L.square(beta) - L.square(alpha)) / (2 * ab)
    return cot, alpha + cot * beta


def dhym_problem(L: SurfaceLattice, beta: DivisorClass, alpha: DivisorClass) -> DHYMProblem:
    if not is_kahler(L, beta) or not is_kahler(L, alpha):
        raise PreconditionError("beta and alpha must be Kähler")
    cot, tau = dhym_tau(L, beta, alpha)
    prob = DHYMProblem(beta, alpha, cot, tau, L.square(alpha) > L.square(beta))
    _assert_identities(prob.identities(L))
    return prob


# --- Z-critical ----------------------------------------------------------------


@dataclass(frozen=True)
class StabilityData:
    """``(beta, (rho0, rho1, rho2), U)`` with ``U = 1 + U1 + U2``."""

    beta: DivisorClass
    rho: tuple  # three QComplex
    U1: DivisorClass
    U2: Fraction

    def __post_init__(self):
        rho = tuple(QComplex.lift(r) for r in self.rho)
        if len(rho) != 3:
            raise ValueError("rho needs exactly three components")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "U2", Fraction(self.U2))

    def flags(self) -> dict:
        return {
            "rho_nonzero": all(bool(r) for r in self.rho),
            "im_rho2_positive": self.rho[2].im > 0,
        }


@dataclass(frozen=True)
class ZProblem:
    data: StabilityData
    c1L: DivisorClass
    charge: QComplex
    cot_phi: Fraction
    ck: tuple
    eta: DivisorClass
    gamma: Fraction
    V: Fraction
    sigma: DivisorClass
    sign_s: int
    tau: DivisorClass
    valid: dict = field(compare=False)
    kind = "Z"

    def identities(self, L: SurfaceLattice) -> dict:
        return {"sigma^2 = V": L.square(self.sigma) == self.V}


def z_charge(L: SurfaceLattice, data: StabilityData, c1L: DivisorClass) -> QComplex:
    """Degree-(2,2) part of ``rho(beta) . U . ch(L)`` integrated over the surface."""
    beta, U1, U2 = data.beta, data.U1, data.U2
    r0, r1, r2 = data.rho
    t0 = L.square(c1L) / 2 + L.pair(c1L, U1) + U2
    t1 = L.pair(beta, c1L) + L.pair(beta, U1)
    t2 = L.square(beta)
    return r0 * t0 + r1 * t1 + r2 * t2


def z_problem(L: SurfaceLattice, data: StabilityData, c1L: DivisorClass) -> ZProblem:
    charge = z_charge(L, data, c1L)
    if charge.im == 0:
        raise DegenerateCharge(f"Im Z = 0 (Z = {charge}); phase undefined")
    cot = charge.re / charge.im
    c0, c1, c2 = (r.im * cot - r.re for r in data.rho)
    if c0 == 0:
        raise PhaseCollision("c0 = 0: the phase coincides with arg(+-rho0)")
    beta, U1 = data.beta, data.U1
    eta = 2 * U1 + (2 * c1 / c0) * beta
    gamma = (2 / c0) * (c0 * data.U2 + c1 * L.pair(beta, U1) + c2 * L.square(beta))
    V = L.square(eta) / 4 - gamma
    sigma = c1L + eta / 2
    s = sign(L.pair(sigma, beta))
    tau = sigma if s >= 0 else -sigma
    valid = {
        "charge_upper_half_plane": charge.im > 0,
        "phase_ok": True,
        "V_positive": V > 0,
        **data.flags(),
    }
    prob = ZProblem(data, c1L, charge, cot, (c0, c1, c2), eta, gamma, V, sigma, s, tau, valid)
    _assert_identities(prob.identities(L))
    return prob


# --- certificates --------------------------------------------------------------

Problem = Union[JProblem, DHYMProblem, ZProblem]


@dataclass(frozen=True)
class SolvabilityCertificate:
    kind: str
    tau: DivisorClass
    solvable: bool
    status: str  # solvable | boundary | unsolvable
    square: Fraction
    ample_pairing: Fraction
    tested_curves: tuple  # ((index, pairing), ...)
    failing: tuple
    margin: Optional[Fraction]

    def to_document(self, L: SurfaceLattice) -> dict:
        return {
            "schema": "certificate/1",
            "kind": self.kind,
            "tau": self.tau.to_strings(),
            "solvable": self.solvable,
            "status": self.status,
            "square": qstr(self.square),
            "ample_pairing": qstr(self.ample_pairing),
            "tested_curves": [[L.curve_labels[i], qstr(p)] for i, p in self.tested_curves],
            "failing": [[L.curve_labels[i], qstr(p)] for i, p in self.failing],
            "margin": None if self.margin is None else qstr(self.margin),
        }


def certify_class(L: SurfaceLattice, tau: DivisorClass, kind: str = "tau") -> SolvabilityCertificate:
    """Kähler test of ``tau`` packaged as a certificate."""
    pairings = tuple(enumerate(L.curve_pairings(tau)))
    failing = tuple((i, p) for i, p in pairings if p <= 0)
    sq = L.square(tau)
    ap = L.pair(tau, L.ample)
    margin = min((p for _, p in pairings), default=None)
    solvable = sq > 0 and ap > 0 and not failing
    if solvable:
        status = "solvable"
    elif sq > 0 and ap > 0 and all(p >= 0 for _, p in failing):
        status = "boundary"
    else:
        status = "unsolvable"
    return SolvabilityCertificate(kind, tau, solvable, status, sq, ap, pairings, failing, margin)


def certify(L: SurfaceLattice, problem: Problem) -> SolvabilityCertificate:
    if isinstance(problem, ZProblem):
        if not (problem.valid["V_positive"] and problem.valid["phase_ok"]):
            raise PreconditionError("Z-critical certificate needs V > 0 and c0 != 0")
    return certify_class(L, problem.tau, problem.kind)


# --- nef threshold -------------------------------------------------------------


@dataclass(frozen=True)
class NefThresholdResult:
    exists: bool
    u_star: Optional[Fraction]
    a: Optional[DivisorClass]
    t: Optional[Fraction]
    zero_curves: frozenset
    binding: str  # curve | square | none | irrational
    boundary_quadratic: tuple = ()  # (q2, q1, q0) of (theta + u d)^2 when it binds


def _rational_sqrt(x: Fraction) -> Optional[Fraction]:
    if x < 0:
        return None
    from math import isqrt

    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def nef_threshold(L: SurfaceLattice, theta: DivisorClass, omega: DivisorClass) -> NefThresholdResult:
    """First non-Kähler class ``a = theta + u*(omega - theta)`` along the ray."""
    if not (is_kahler(L, theta) and is_kahler(L, omega)):
        raise PreconditionError("theta and omega must be Kähler")
    d = omega - theta
    if d.is_zero():
        raise PreconditionError("theta = omega: the ray is degenerate")
    u_curve = None
    for C in L.negative_curves:
        dc = L.pair(d, C)
        if dc < 0:
            u = L.pair(theta, C) / (-dc)
            u_curve = u if u_curve is None else min(u_curve, u)
    # the square (theta + u d)^2 = q2 u^2 + q1 u + q0, q0 > 0
    q2, q1, q0 = L.square(d), 2 * L.pair(theta, d), L.square(theta)
    if u_curve is not None:
        at = theta + u_curve * d
        if L.square(at) >= 0 and L.pair(at, L.ample) >= 0:
            return _threshold(L, theta, d, u_curve, "curve")
    # otherwise the positive-cone boundary binds (first positive root)
    roots = []
    if q2 == 0:
        if q1 < 0:
            roots.append(-q0 / q1)
    else:
        disc = q1 * q1 - 4 * q2 * q0
        if disc >= 0:
            r = _rational_sqrt(disc)
            if r is None:
                return NefThresholdResult(True, None, None, None, frozenset(), "irrational", (q2, q1, q0))
            roots += [u for u in ((-q1 - r) / (2 * q2), (-q1 + r) / (2 * q2)) if u > 0]
    if not roots:
        return NefThresholdResult(False, None, None, None, frozenset(), "none", (q2, q1, q0))
    return _threshold(L, theta, d, min(roots), "square", (q2, q1, q0))


def _threshold(L, theta, d, u, binding, quad=()):
    a = theta + u * d
    zero = frozenset(i for i, p in enumerate(L.curve_pairings(a)) if p == 0)
    return NefThresholdResult(True, u, a, 1 - 1 / u, zero, binding, quad)


# --- optimal destabilizers -----------------------------------------------------


@dataclass(frozen=True)
class OptimalDestabilizers:
    delta: Optional[Fraction]  # None means +infinity (no declared curves)
    curves: frozenset
    values: tuple  # ((index, c - theta.C/omega.C), ...)
    hypotheses_met: bool
    threshold: Optional[NefThresholdResult]
    cross_check: Optional[bool]  # argmin == zero curves of a, when hypotheses hold
    note: str = ""


def _ratio_deltas(L, const, theta, omega):
    return tuple((i, const - L.pair(theta, C) / L.pair(omega, C)) for i, C in enumerate(L.negative_curves))


def optimal_destabilizers(L: SurfaceLattice, problem: Union[JProblem, DHYMProblem]) -> OptimalDestabilizers:
    """The threshold ``Delta`` and the curves realising it.

    For J: ``Delta_NM = min_C (c - theta.C/omega.C)``.  For dHYM (supercritical
    only): ``min_C (1/c~ - beta.C/alpha.C)``.  The minimum runs over every
    declared negative curve; other curves pair positively with tau.
    """
    if isinstance(problem, JProblem):
        theta, omega, const = problem.theta, problem.omega, problem.c
    elif isinstance(problem, DHYMProblem):
        if not problem.supercritical:
            raise PreconditionError("dHYM threshold needs alpha^2 > beta^2 (supercritical)")
        theta, omega, const = problem.beta, problem.alpha, 1 / problem.c_tilde
    else:
        raise PreconditionError("optimal destabilizers are defined for J and dHYM problems")
    values = _ratio_deltas(L, const, theta, omega)
    if not values:
        return OptimalDestabilizers(None, frozenset(), (), False, None, None, "no declared negative curves")
    delta = min(v for _, v in values)
    curves = frozenset(i for i, v in values if v == delta) if delta <= 0 else frozenset()
    threshold = None
    hyp = False
    check = None
    note = ""
    if delta <= 0 and is_kahler(L, theta) and theta != omega:
        threshold = nef_threshold(L, theta, omega)
        if threshold.a is not None and in_positive_cone(L, threshold.a):
            hyp = True
            check = curves == threshold.zero_curves
        else:
            note = "hypotheses not met: threshold class not in the positive cone"
    elif delta <= 0:
        note = "hypotheses not met: theta not Kähler"
    return OptimalDestabilizers(delta, curves, values, hyp, threshold, check, note)


# --- flows and candidate sets --------------------------------------------------


def flow_singular_locus(L: SurfaceLattice, problem: Union[JProblem, DHYMProblem]) -> list:
    """Support of ``N(tau - eps*beta)`` with EpsRational coefficients.

    ``beta`` is theta for a J problem and the B-field class for dHYM.
    """
    if certify(L, problem).solvable:
        raise PreconditionError("flow singular locus needs an unsolvable problem")
    direction = problem.theta if isinstance(problem, JProblem) else problem.beta
    dec = decompose_infinitesimal(L, problem.tau, direction)
    if len(dec.npart) > destabilizer_bound(L):
        warnings.warn(
            f"flow locus has {len(dec.npart)} curves, bound is {destabilizer_bound(L)}",
            BoundWarning,
            stacklevel=2,
        )
    return list(dec.npart)


def large_volume_j(L: SurfaceLattice, problem: DHYMProblem) -> JProblem:
    """The J problem on the same pair: theta = beta, omega = alpha."""
    return j_problem(L, problem.beta, problem.alpha)


def dhym_split_coefficients(L: SurfaceLattice, problem: DHYMProblem):
    """``(lam, k)`` with ``tau_dHYM = lam*tau_J + k*beta``; both positive.

    ``lam = alpha^2/(2 alpha.beta)`` and ``k = beta^2/(2 alpha.beta)``.
    """
    ab = L.pair(problem.alpha, problem.beta)
    lam = L.square(problem.alpha) / (2 * ab)
    k = L.square(problem.beta) / (2 * ab)
    _, tau_j = j_tau(L, problem.beta, problem.alpha)
    if lam * tau_j + k * problem.beta != problem.tau:
        raise AssertionError("tau_dHYM decomposition identity failed")
    return lam, k


def candidate_set(
    L: SurfaceLattice,
    theta: DivisorClass,
    omega: DivisorClass,
    direction: Optional[DivisorClass] = None,
    mode: str = "infinitesimal",
) -> frozenset:
    """Zariski J-negative candidates: ``Neg(tau_{theta,omega})``.

    The perturbation runs along ``direction`` (default omega), which must be
    Kähler. On a blowup, omega pulled back is only nef, so pass a Kähler class
    of the blowup explicitly.
    """
    _, tau = j_tau(L, theta, omega)
    return neg_limit(L, tau, omega if direction is None else direction, mode=mode)
