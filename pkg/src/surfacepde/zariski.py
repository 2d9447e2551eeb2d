"""Zariski decompositions on surfaces given by an intersection lattice.

``decompose`` runs the monotone (Fujita) iteration: start from the curves the
class is negative on, make the remainder orthogonal to them, add every curve
the remainder is still negative on, repeat.  The same loop runs over
:class:`~surfacepde.exact.EpsRational` pairings, which is how the limit sets
``Neg(tau)`` of ``tau - eps*a`` are computed without choosing a concrete eps.
``decompose_oracle`` enumerates supports and is kept independent of the
iteration on purpose.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DimensionError, GuardError, NotPseudoeffective, PreconditionError
from .exact import EpsRational, is_negative_definite, qstr, solve
from .lattice import DivisorClass, SurfaceLattice, in_positive_cone, is_kahler

__all__ = [
    "ZariskiDecomposition",
    "BoundWarning",
    "decompose",
    "decompose_oracle",
    "neg_limit",
    "destabilizer_set",
    "uniform_test_set",
    "destabilizer_bound",
    "ORACLE_GUARD",
]

ORACLE_GUARD = 20


class BoundWarning(UserWarning):
    """A cardinality bound (rho, rho - 1 when projective, k*rho) was exceeded."""


@dataclass(frozen=True)
class ZariskiDecomposition:
    input: DivisorClass
    zpart: DivisorClass
    npart: tuple  # ((curve index, coefficient), ...) sorted by index

    @property
    def support(self) -> frozenset:
        return frozenset(i for i, _ in self.npart)

    def coefficient(self, i: int):
        for j, a in self.npart:
            if j == i:
                return a
        return Fraction(0)

    def coefficients(self, L: SurfaceLattice) -> list:
        return [self.coefficient(i) for i in range(len(L.negative_curves))]

    def negative_part(self, L: SurfaceLattice) -> DivisorClass:
        total = DivisorClass.zero(L.rank)
        for i, a in self.npart:
            total = total + a * L.negative_curves[i]
        return total

    def verify(self, L: SurfaceLattice) -> dict:
        """Check every structural invariant; returns name -> bool."""
        curves = L.negative_curves
        support = sorted(self.support)
        gram = [[L.pair(curves[i], curves[j]) for j in support] for i in support]
        z = self.zpart
        zc = L.curve_pairings(z)
        return {
            "sum": self.zpart + self.negative_part(L) == self.input,
            "nef": all(p >= 0 for p in zc) and L.pair(z, L.ample) >= 0,
            "orthogonal": all(zc[i] == 0 for i in support),
            "positive_coefficients": all(a > 0 for _, a in self.npart),
            "negative_definite": is_negative_definite(gram),
            "support_bound": len(support) <= L.rank,
        }

    def to_document(self, L: SurfaceLattice) -> dict:
        checks = self.verify(L)
        return {
            "schema": "zariski/1",
            "input": self.input.to_strings(),
            "zpart": self.zpart.to_strings(),
            "npart": [[L.curve_labels[i], str(a)] for i, a in self.npart],
            "verification": checks,
        }


def _support_gram(L: SurfaceLattice, support: Sequence[int]):
    curves = L.negative_curves
    return [[L.pair(curves[i], curves[j]) for j in support] for i in support]


def _require(L: SurfaceLattice, tau: DivisorClass):
    if len(tau) != L.rank:
        raise DimensionError(f"class has {len(tau)} coordinates, lattice rank is {L.rank}")
    if L.ample is None:
        raise PreconditionError(f"{L.name}: ample class pending")


def _is_zero(x) -> bool:
    return x == 0


def _iterate(L: SurfaceLattice, tau: DivisorClass):
    """Core monotone iteration. Works for Fraction or EpsRational coordinates.

    Returns ``(support, coefficients, zpart)``.
    """
    curves = L.negative_curves
    tau_c = [L.pair(tau, c) for c in curves]
    support = sorted(i for i, p in enumerate(tau_c) if p < 0)
    coeffs: list = []
    z = tau
    while support:
        gram = _support_gram(L, support)
        if not is_negative_definite(gram):
            raise NotPseudoeffective(
                "support Gram matrix is not negative-definite",
                support=support,
                signs=[(-1 if p < 0 else (0 if _is_zero(p) else 1)) for p in tau_c],
            )
        coeffs = solve(gram, [tau_c[i] for i in support])
        if any(a <= 0 for a in coeffs):
            raise NotPseudoeffective(
                "nonpositive coefficient in the negative part",
                support=support,
                signs=[1 if a > 0 else -1 for a in coeffs],
            )
        z = tau
        for i, a in zip(support, coeffs):
            z = z - a * curves[i]
        added = [i for i in range(len(curves)) if i not in support and L.pair(z, curves[i]) < 0]
        if not added:
            break
        support = sorted(support + added)
    if L.pair(z, L.ample) < 0 or L.square(z) < 0:
        raise NotPseudoeffective(
            "remainder is not nef (outside the closed positive cone)", support=support
        )
    return support, coeffs, z


def decompose(L: SurfaceLattice, tau: DivisorClass) -> ZariskiDecomposition:
    """Zariski decomposition ``tau = Z + sum a_i C_i`` of a pseudoeffective class.

    Raises :class:`NotPseudoeffective` when the iteration certifies that
    ``tau`` is not pseudoeffective (singular/indefinite support, nonpositive
    coefficient, or a remainder outside the closed positive cone).
    """
    _require(L, tau)
    support, coeffs, z = _iterate(L, tau)
    return ZariskiDecomposition(tau, z, tuple(zip(support, coeffs)))


def decompose_oracle(L: SurfaceLattice, tau: DivisorClass, guard: int = ORACLE_GUARD) -> ZariskiDecomposition:
    """Decomposition by exhaustive search over candidate supports.

    Every subset of the declared curves with negative-definite Gram matrix is
    tried; the unique one giving positive coefficients and a nef remainder is
    returned.
    """
    _require(L, tau)
    curves = L.negative_curves
    if len(curves) > guard:
        raise GuardError(f"{len(curves)} curves exceed the subset-enumeration guard {guard}")
    tau_c = [L.pair(tau, c) for c in curves]
    found = []
    for size in range(len(curves) + 1):
        for subset in itertools.combinations(range(len(curves)), size):
            gram = _support_gram(L, subset)
            if not is_negative_definite(gram):
                continue
            coeffs = solve(gram, [tau_c[i] for i in subset]) if subset else []
            if any(a <= 0 for a in coeffs):
                continue
            z = tau
            for i, a in zip(subset, coeffs):
                z = z - a * curves[i]
            if any(L.pair(z, c) < 0 for c in curves):
                continue
            if L.pair(z, L.ample) < 0 or L.square(z) < 0:
                continue
            found.append(ZariskiDecomposition(tau, z, tuple(zip(subset, coeffs))))
    if not found:
        raise NotPseudoeffective("no support subset yields a valid decomposition")
    if len(found) > 1:
        raise AssertionError(f"decomposition not unique: {len(found)} candidate supports")
    return found[0]


def _eps_class(tau: DivisorClass, a: DivisorClass) -> DivisorClass:
    return DivisorClass(tuple(EpsRational(t, -s) for t, s in zip(tau.coords, a.coords)))


def decompose_infinitesimal(L: SurfaceLattice, tau: DivisorClass, a: DivisorClass) -> ZariskiDecomposition:
    """Decomposition of ``tau - eps*a`` for infinitesimal eps > 0.

    Coefficients and the Z-part come back as :class:`EpsRational` values.
    The Gram matrices never involve eps, so the linear solves stay exactly
    first order and every sign decision is the one valid for all small eps.
    """
    _require(L, tau)
    support, coeffs, z = _iterate(L, _eps_class(tau, a))
    return ZariskiDecomposition(_eps_class(tau, a), z, tuple(zip(support, coeffs)))


def _check_closure_p_plus(L: SurfaceLattice, tau: DivisorClass):
    if tau.is_zero() or L.square(tau) < 0 or L.pair(tau, L.ample) < 0:
        raise PreconditionError("class must lie in the closure of the positive cone")


def neg_limit(
    L: SurfaceLattice,
    tau: DivisorClass,
    a: DivisorClass | None = None,
    mode: str = "infinitesimal",
    eps0=Fraction(1, 8),
    max_halvings: int = 64,
) -> frozenset:
    """Support of ``N(tau - eps*a)`` for all sufficiently small eps > 0.

    ``a`` defaults to the lattice's ample class. ``mode="rational"`` works
    with concrete rationals only: it decomposes at ``eps`` and, with that
    support S fixed, every coefficient and every pairing ``Z.C`` (C outside
    S) is affine in eps. If none of them crosses zero in ``(0, eps)`` the
    support is S all the way down; otherwise eps drops below the smallest
    crossing and the step repeats.
    """
    _require(L, tau)
    a = L.ample if a is None else a
    _check_closure_p_plus(L, tau)
    if not is_kahler(L, a):
        raise PreconditionError("perturbation direction must be Kähler")
    if mode == "infinitesimal":
        return decompose_infinitesimal(L, tau, a).support
    if mode != "rational":
        raise ValueError(f"unknown epsilon mode {mode!r}")
    eps = Fraction(eps0)
    decomposed = False
    for _ in range(max_halvings):
        try:
            dec = decompose(L, tau - eps * a)
        except NotPseudoeffective:
            eps /= 2
            continue
        decomposed = True
        crossings = _affine_crossings(L, tau, a, sorted(dec.support), eps)
        if not crossings:
            return dec.support
        eps = min(crossings) / 2
    if not decomposed:
        raise NotPseudoeffective("tau - eps*a is not pseudoeffective at any sampled eps")
    raise GuardError("support of N(tau - eps*a) did not stabilise")


def _affine_crossings(L: SurfaceLattice, tau: DivisorClass, a: DivisorClass, support, eps) -> list:
    """Zeros in ``(0, eps)`` of the support-S coefficients and outside pairings."""
    curves = L.negative_curves
    if support:
        gram = _support_gram(L, support)
        x0 = solve(gram, [L.pair(tau, curves[i]) for i in support])
        x1 = solve(gram, [L.pair(a, curves[i]) for i in support])
    else:
        x0 = x1 = []
    # value(e) = v0 - e*v1 for each tracked quantity
    lines = list(zip(x0, x1))
    z0, z1 = tau, a
    for i, u, v in zip(support, x0, x1):
        z0 = z0 - u * curves[i]
        z1 = z1 - v * curves[i]
    lines += [(L.pair(z0, C), L.pair(z1, C)) for j, C in enumerate(curves) if j not in support]
    return [v0 / v1 for v0, v1 in lines if v1 != 0 and 0 < v0 / v1 < eps]


def destabilizer_bound(L: SurfaceLattice) -> int:
    return L.rank - 1 if L.projective else L.rank


def _warn_bound(size: int, bound: int, what: str):
    if size > bound:
        warnings.warn(f"{what} has {size} curves, bound is {bound}", BoundWarning, stacklevel=3)


def destabilizer_set(L: SurfaceLattice, tau: DivisorClass) -> frozenset:
    """Indices of declared curves with ``tau.C <= 0`` for ``tau`` in P+.

    For tau in P+ only negative curves can pair nonpositively, so this is the
    full destabilizer set. Exceeding the rho (rho - 1 if projective) bound is
    reported as a :class:`BoundWarning`.
    """
    _require(L, tau)
    if not in_positive_cone(L, tau):
        raise PreconditionError("destabilizer sets require tau in the positive cone")
    result = frozenset(i for i, p in enumerate(L.curve_pairings(tau)) if p <= 0)
    _warn_bound(len(result), destabilizer_bound(L), "destabilizer set")
    return result


def uniform_test_set(L: SurfaceLattice, hull: Iterable[DivisorClass]) -> frozenset:
    """A curve set testing Kählerness uniformly on the positive span of ``hull``.

    If ``tau = sum t_i tau_i`` with ``t_i > 0`` and ``tau.C <= 0`` then some
    ``tau_i.C <= 0``, so the union of the members' nonpositive curves works.
    Boundary members (pseudoeffective but outside P+) also contribute their
    ``Neg`` set when it is defined.
    """
    hull = list(hull)
    result: set = set()
    for tau in hull:
        _require(L, tau)
        if in_positive_cone(L, tau):
            result |= destabilizer_set(L, tau)
            continue
        try:
            decompose(L, tau)
        except NotPseudoeffective:
            raise PreconditionError(f"hull member {tau} is not pseudoeffective") from None
        result |= {i for i, p in enumerate(L.curve_pairings(tau)) if p <= 0}
        try:
            result |= neg_limit(L, tau)
        except (NotPseudoeffective, PreconditionError):
            pass
    result = frozenset(result)
    _warn_bound(len(result), len(hull) * L.rank, "uniform test set")
    return result


def eps_to_strings(x) -> str:
    if isinstance(x, EpsRational):
        return str(x)
    return qstr(x)
