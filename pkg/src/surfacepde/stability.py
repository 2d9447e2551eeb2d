"""Slope test configurations (deformation to the normal cone of a curve).

For a curve C and parameter kappa the non-Archimedean J-energy and the
minimum norm are cubic in kappa with vanishing constant and linear terms:

    E^NA = A1 k^2 + B1 k^3,     ||Phi|| = A2 k^2 + B2 k^3

so every sign question reduces to a linear form ``A + B k`` on ``(0, kbar)``.
"""
from __future__ import annotations

import itertools
from math import gcd as _gcd
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import PreconditionError, SearchFailure
from .exact import Q
from .lattice import DivisorClass, SurfaceLattice, is_kahler, is_nef
from .pde import (
    SolvabilityCertificate,
    certify_class,
    j_problem,
    j_tau,
    optimal_destabilizers,
)

__all__ = [
    "SlopeTestConfig",
    "SlopeInvariants",
    "SemistabilityVerdict",
    "RatioThreshold",
    "JStableNotUniform",
    "default_kappa_bar",
    "slope_invariants",
    "slope_semistability",
    "ratio_threshold",
    "construct_jstable_not_uniform",
    "DEFAULT_GRID",
    "DEFAULT_HEIGHT",
]

DEFAULT_GRID = 64
DEFAULT_HEIGHT = 64

CurveRef = Union[int, DivisorClass]


def _curve(L: SurfaceLattice, curve: CurveRef) -> DivisorClass:
    if isinstance(curve, DivisorClass):
        return curve
    return L.negative_curves[curve]


def default_kappa_bar(L: SurfaceLattice, omega: DivisorClass, curve: CurveRef) -> Fraction:
    """Conservative stand-in for the Seshadri constant.

    ``1`` when ``C^2 <= 0``; otherwise ``3(omega.C)/(2 C^2)``, where the norm's
    linear factor ``A2 + B2 k`` vanishes.
    """
    C = _curve(L, curve)
    c2 = L.square(C)
    if c2 <= 0:
        return Fraction(1)
    return 3 * L.pair(omega, C) / (2 * c2)


@dataclass(frozen=True)
class SlopeTestConfig:
    curve: CurveRef
    kappa: Fraction
    kappa_bar: Fraction

    def __post_init__(self):
        object.__setattr__(self, "kappa", Q(self.kappa))
        object.__setattr__(self, "kappa_bar", Q(self.kappa_bar))
        if not (0 < self.kappa < self.kappa_bar):
            raise PreconditionError(f"need 0 < kappa < kappa_bar, got {self.kappa}, {self.kappa_bar}")


@dataclass(frozen=True)
class SlopeInvariants:
    A1: Fraction
    B1: Fraction
    A2: Fraction
    B2: Fraction
    kappa: Fraction
    e_na: Fraction
    norm: Fraction
    ratio: Optional[Fraction]

    def to_document(self) -> dict:
        return {
            "schema": "slope/1",
            **{k: str(getattr(self, k)) for k in ("A1", "B1", "A2", "B2", "kappa", "e_na", "norm")},
            "ratio": None if self.ratio is None else str(self.ratio),
        }


def _coefficients(L: SurfaceLattice, theta, omega, C):
    c, _ = j_tau(L, theta, omega)
    w2 = L.square(omega)
    tw = L.pair(theta, omega)
    c2 = L.square(C)
    wc = L.pair(omega, C)
    A1 = c * wc - L.pair(theta, C)
    B1 = -(2 * tw / (3 * w2)) * c2
    A2 = wc
    B2 = -Fraction(2, 3) * c2
    return A1, B1, A2, B2


def slope_invariants(L: SurfaceLattice, theta: DivisorClass, omega: DivisorClass, cfg: SlopeTestConfig) -> SlopeInvariants:
    if not is_kahler(L, omega):
        raise PreconditionError("omega must be Kähler")
    A1, B1, A2, B2 = _coefficients(L, theta, omega, _curve(L, cfg.curve))
    k = cfg.kappa
    e = A1 * k**2 + B1 * k**3
    n = A2 * k**2 + B2 * k**3
    return SlopeInvariants(A1, B1, A2, B2, k, e, n, e / n if n != 0 else None)


def _linear_sign_on_interval(A, B, kbar):
    """Classify ``A + B k`` on the open interval ``(0, kbar)``.

    Returns ``("negative", witness_k)``, ``("zero", None)`` or ``("positive", None)``.
    A linear form is positive on the open interval iff both endpoint values
    are >= 0 and it is not identically zero.
    """
    end = A + B * kbar
    if A < 0:
        if B <= 0:
            return "negative", kbar / 2
        return "negative", min(kbar, -A / B) / 2
    if end < 0:
        root = -A / B  # B < 0 here, root in [0, kbar)
        return "negative", (root + kbar) / 2
    if A == 0 and B == 0:
        return "zero", None
    return "positive", None


@dataclass(frozen=True)
class SemistabilityVerdict:
    verdict: str  # unstable | semistable | stable
    witness: Optional[tuple]  # (curve index, kappa) when unstable
    per_curve: tuple  # ((index, A1, B1, kappa_bar, sign), ...)


def slope_semistability(
    L: SurfaceLattice,
    theta: DivisorClass,
    omega: DivisorClass,
    kappa_bars: Optional[Mapping[int, Fraction]] = None,
) -> SemistabilityVerdict:
    """J-(semi)stability over slope configurations of every declared curve."""
    if not is_kahler(L, omega):
        raise PreconditionError("omega must be Kähler")
    kappa_bars = dict(kappa_bars or {})
    rows = []
    witness = None
    zero = False
    for i, C in enumerate(L.negative_curves):
        kbar = Q(kappa_bars.get(i, default_kappa_bar(L, omega, i)))
        if kbar <= 0:
            raise PreconditionError("kappa_bar must be positive")
        A1, B1, _, _ = _coefficients(L, theta, omega, C)
        s, k = _linear_sign_on_interval(A1, B1, kbar)
        rows.append((i, A1, B1, kbar, s))
        if s == "negative" and witness is None:
            witness = (i, k)
        zero = zero or s == "zero"
    if witness is not None:
        verdict = "unstable"
    elif zero:
        verdict = "semistable"
    else:
        verdict = "stable"
    return SemistabilityVerdict(verdict, witness, tuple(rows))


@dataclass(frozen=True)
class RatioThreshold:
    delta_alg: Optional[Fraction]
    realized_by_slope: bool
    flag: str
    grid_ok: bool  # every sampled ratio strictly above delta
    per_curve: tuple  # ((index, numerator A, numerator B, kappa_bar), ...)


def ratio_threshold(
    L: SurfaceLattice,
    theta: DivisorClass,
    omega: DivisorClass,
    kappa_bars: Optional[Mapping[int, Fraction]] = None,
    grid: int = DEFAULT_GRID,
) -> RatioThreshold:
    """``Delta_NM`` over the finite curve set and whether a slope config attains it.

    ``ratio(k) <= Delta`` iff ``(A1 - Delta A2) + (B1 - Delta B2) k <= 0``
    (the norm is positive), so attainment is decided exactly by endpoint
    analysis; a grid of ``grid`` interior samples is checked as well.
    """
    prob = j_problem(L, theta, omega)
    opt = optimal_destabilizers(L, prob)
    delta = opt.delta
    flag = ""
    if certify_class(L, prob.tau).solvable:
        flag = "tau Kähler; equality hypothesis not met"
    if delta is None:
        return RatioThreshold(None, False, flag or "no declared negative curves", True, ())
    kappa_bars = dict(kappa_bars or {})
    realized = False
    grid_ok = True
    rows = []
    for i, C in enumerate(L.negative_curves):
        kbar = Q(kappa_bars.get(i, default_kappa_bar(L, omega, i)))
        A1, B1, A2, B2 = _coefficients(L, theta, omega, C)
        nA, nB = A1 - delta * A2, B1 - delta * B2
        rows.append((i, nA, nB, kbar))
        s, _ = _linear_sign_on_interval(nA, nB, kbar)
        realized = realized or s != "positive"
        for j in range(1, grid + 1):
            k = kbar * j / (grid + 1)
            e = A1 * k**2 + B1 * k**3
            n = A2 * k**2 + B2 * k**3
            if n <= 0 or not (e / n > delta):
                grid_ok = False
    return RatioThreshold(delta, realized, flag, grid_ok, tuple(rows))


@dataclass(frozen=True)
class JStableNotUniform:
    curve: int
    theta: DivisorClass
    omega_prime: DivisorClass
    omega_half: DivisorClass
    c: Fraction
    tau: DivisorClass
    certificate: SolvabilityCertificate
    delta_nm: Fraction
    reflection_vector: tuple

    def verify(self, L: SurfaceLattice) -> dict:
        return {
            "theta_kahler": is_kahler(L, self.theta),
            "equal_squares": L.square(self.theta) == L.square(self.omega_prime),
            "c_is_2": self.c == 2,
            "tau_is_omega_prime": self.tau == self.omega_prime,
            "tau_nef": is_nef(L, self.tau),
            "tau_not_kahler": not is_kahler(L, self.tau),
            "delta_zero": self.delta_nm == 0,
        }


def _search_vectors(rank: int, height: int):
    for h in range(1, height + 1):
        for v in itertools.product(range(-h, h + 1), repeat=rank):
            if max(abs(x) for x in v) == h:
                yield v


def _simplicity(x: DivisorClass):
    den = 1
    for c in x.coords:
        den = den * c.denominator // _gcd(den, c.denominator)
    naive = max(max(abs(c.numerator), c.denominator) for c in x.coords)
    return (den, naive, x.coords)


def _certify_pair(L, idx, theta, wp, v=()):
    omega_half = (theta + wp) / 2
    prob = j_problem(L, theta, omega_half)
    cert = certify_class(L, prob.tau, "J")
    delta = optimal_destabilizers(L, prob).delta
    result = JStableNotUniform(idx, theta, wp, omega_half, prob.c, prob.tau, cert, delta, tuple(v))
    checks = result.verify(L)
    if not all(checks.values()):
        raise PreconditionError(f"pair fails the construction checks: {checks}")
    return result


def _projection(L: SurfaceLattice, idx: int) -> DivisorClass:
    """``A - (A.C/C^2) C``: the ample class moved onto ``C``'s orthogonal complement."""
    C = L.negative_curves[idx]
    return L.ample - (L.pair(L.ample, C) / L.square(C)) * C


def _default_curve(L: SurfaceLattice) -> int:
    """The curve whose projection stays farthest from the other curves' walls.

    Among curves whose projection is nef and big, pick the one maximising the
    smallest pairing of the projection with the remaining curves, so the
    defect of ``tau`` sits on ``C`` alone. Ties go to the earlier curve.
    """
    best, best_key = 0, None
    for i in range(len(L.negative_curves)):
        wp = _projection(L, i)
        if not is_nef(L, wp) or L.square(wp) <= 0:
            continue
        others = [p for j, p in enumerate(L.curve_pairings(wp)) if j != i]
        key = min(others) if others else None
        if best_key is None or (key is not None and key > best_key):
            best, best_key = i, key
    return best


def construct_jstable_not_uniform(
    L: SurfaceLattice,
    curve: Optional[int] = None,
    height: int = DEFAULT_HEIGHT,
    partition: tuple = (0, 1),
    theta: Optional[DivisorClass] = None,
) -> JStableNotUniform:
    """A pair that is J-semistable on slope configurations but not uniformly stable.

    ``omega' = A - (A.C/C^2) C`` is nef, big and orthogonal to C. A Kähler
    ``theta`` with ``theta^2 = omega'^2`` is the second intersection of a
    rational line ``omega' + t v`` with that quadric; integer directions
    ``v`` are enumerated by height. With ``omega = (theta + omega')/2`` one
    gets ``c = 2`` and ``tau = omega'``.

    Directions are enumerated by height; once a partner turns up at height
    h the search continues to height 2h and returns the simplest partner
    (smallest common denominator, then naive height, then lexicographic).
    Passing ``theta`` skips the search and certifies that partner instead.
    Without ``curve`` the choice is made by :func:`_default_curve`.

    ``partition=(k, n)`` restricts the enumeration to every n-th direction
    starting at k, for splitting the search deterministically.
    """
    if not L.negative_curves:
        raise PreconditionError("no negative curves declared")
    if not L.projective:
        raise PreconditionError("lattice is not flagged projective")
    if L.ample is None:
        raise PreconditionError("ample class pending")
    idx = _default_curve(L) if curve is None else curve
    wp = _projection(L, idx)
    if not is_nef(L, wp) or L.square(wp) <= 0:
        raise SearchFailure(f"projection of the ample class off {L.curve_labels[idx]} is not nef and big")
    if theta is not None:
        if not is_kahler(L, theta) or L.square(theta) != L.square(wp):
            raise PreconditionError("supplied theta must be Kähler with theta^2 = omega'^2")
        return _certify_pair(L, idx, theta, wp)
    part, nparts = partition
    found = []
    stop = height
    for n, v in enumerate(_search_vectors(L.rank, height)):
        h = max(abs(x) for x in v)
        if h > stop:
            break
        if n % nparts != part:
            continue
        vc = DivisorClass.of(*v)
        v2 = L.square(vc)
        if v2 == 0:
            continue
        t = -2 * L.pair(wp, vc) / v2
        if t == 0:
            continue
        theta = wp + t * vc
        if is_kahler(L, theta):
            found.append((_simplicity(theta), v, theta))
            stop = min(stop, 2 * h)
    if found:
        _, v, theta = min(found, key=lambda item: item[0])
        return _certify_pair(L, idx, theta, wp, v)
    raise SearchFailure(f"no equal-square Kähler partner up to height {height}")
