"""Intersection lattices of compact Kähler surfaces.

A surface is modelled by its Néron-Severi lattice with exact rational Gram
matrix, a declared list of *all* irreducible curves of negative
self-intersection (the completeness contract) and a reference ample class.
Every Kähler/nef test in the engine is conditional on that list being
complete; nothing here tries to enumerate curves.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CurveError, DimensionError, ParseError, PreconditionError, SignatureError
from .exact import Q, inertia, parse_vector, qstr

__all__ = [
    "DivisorClass",
    "SurfaceLattice",
    "PositivityReport",
    "load_surface",
    "builtin",
    "BUILTINS",
    "pair",
    "classify",
    "blowup_general_point",
    "pullback",
    "pushforward",
    "suggest_ample",
    "is_kahler",
    "is_nef",
    "in_positive_cone",
]


@dataclass(frozen=True)
class DivisorClass:
    """A (1,1)-class as exact coordinates in the generator basis.

    Coordinates are normally :class:`~fractions.Fraction`; the Zariski engine
    also feeds :class:`~surfacepde.exact.EpsRational` coordinates through the
    same arithmetic.
    """

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))

    @classmethod
    def of(cls, *coords) -> "DivisorClass":
        if len(coords) == 1 and not isinstance(coords[0], (int, Fraction, str)):
            coords = tuple(coords[0])
        return cls(tuple(Q(c) for c in coords))

    @classmethod
    def zero(cls, rank: int) -> "DivisorClass":
        return cls((Fraction(0),) * rank)

    @classmethod
    def basis(cls, rank: int, i: int) -> "DivisorClass":
        return cls(tuple(Fraction(int(j == i)) for j in range(rank)))

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def _check(self, other):
        if len(other.coords) != len(self.coords):
            raise DimensionError(f"rank mismatch: {len(self.coords)} vs {len(other.coords)}")

    def __add__(self, other):
        if not isinstance(other, DivisorClass):
            return NotImplemented
        self._check(other)
        return DivisorClass(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        if not isinstance(other, DivisorClass):
            return NotImplemented
        self._check(other)
        return DivisorClass(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return DivisorClass(tuple(-a for a in self.coords))

    def __mul__(self, scalar):
        if isinstance(scalar, DivisorClass):
            return NotImplemented
        return DivisorClass(tuple(scalar * a for a in self.coords))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return DivisorClass(tuple(a / scalar for a in self.coords))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coords)

    def to_strings(self) -> list[str]:
        return [str(a) for a in self.coords]

    def __str__(self):
        return "(" + ", ".join(str(a) for a in self.coords) + ")"


@dataclass(frozen=True)
class SurfaceLattice:
    """Lorentzian intersection lattice with its declared negative curves.

    ``ample`` may be ``None`` after a blowup; such a lattice is "ample pending"
    and cannot be used for positivity tests until an ample class is supplied
    via :meth:`with_ample`.
    """

    name: str
    gram: tuple
    generators: tuple
    negative_curves: tuple
    curve_labels: tuple
    ample: DivisorClass | None
    projective: bool = True

    def __post_init__(self):
        gram = tuple(tuple(Q(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "generators", tuple(self.generators))
        curves = tuple(c if isinstance(c, DivisorClass) else DivisorClass.of(c) for c in self.negative_curves)
        object.__setattr__(self, "negative_curves", curves)
        labels = tuple(self.curve_labels) if self.curve_labels else tuple(f"C{i}" for i in range(len(curves)))
        object.__setattr__(self, "curve_labels", labels)
        if self.ample is not None and not isinstance(self.ample, DivisorClass):
            object.__setattr__(self, "ample", DivisorClass.of(self.ample))
        self._validate()

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def ample_pending(self) -> bool:
        return self.ample is None

    def _validate(self):
        n = len(self.gram)
        if n == 0:
            raise SignatureError("empty lattice")
        if any(len(row) != n for row in self.gram):
            raise DimensionError("gram must be square")
        if len(self.generators) != n:
            raise DimensionError(f"{len(self.generators)} generator labels for rank {n}")
        for i in range(n):
            for j in range(i):
                if self.gram[i][j] != self.gram[j][i]:
                    raise SignatureError("gram is not symmetric")
        pos, neg, zero = inertia(self.gram)
        if (pos, neg, zero) != (1, n - 1, 0):
            raise SignatureError(
                f"intersection form has inertia (+{pos}, -{neg}, 0:{zero}); need (1, {n - 1}, 0)"
            )
        if len(self.curve_labels) != len(self.negative_curves):
            raise DimensionError("one label per negative curve required")
        for label, c in zip(self.curve_labels, self.negative_curves):
            if len(c) != n:
                raise DimensionError(f"curve {label} has {len(c)} coordinates, rank is {n}")
            if self.pair(c, c) >= 0:
                raise CurveError(f"curve {label} has self-intersection {self.pair(c, c)} >= 0")
        if self.ample is not None:
            if len(self.ample) != n:
                raise DimensionError("ample class has wrong rank")
            if self.pair(self.ample, self.ample) <= 0:
                raise CurveError("ample class has nonpositive square")
            for label, c in zip(self.curve_labels, self.negative_curves):
                if self.pair(self.ample, c) <= 0:
                    raise CurveError(f"ample class pairs nonpositively with curve {label}")

    # -- pairing and helpers -------------------------------------------------

    def pair(self, a: DivisorClass, b: DivisorClass):
        n = self.rank
        if len(a) != n or len(b) != n:
            raise DimensionError(f"pairing needs rank-{n} classes, got {len(a)} and {len(b)}")
        g = self.gram
        total = Fraction(0)
        for i in range(n):
            ai = a.coords[i]
            if ai == 0:
                continue
            row = g[i]
            s = 0
            for j in range(n):
                if row[j]:
                    s = s + row[j] * b.coords[j]
            total = total + ai * s
        return total

    def square(self, a: DivisorClass):
        return self.pair(a, a)

    def curve_pairings(self, a: DivisorClass) -> list:
        return [self.pair(a, c) for c in self.negative_curves]

    def curve_index(self, label: str) -> int:
        try:
            return self.curve_labels.index(label)
        except ValueError:
            raise ParseError(f"unknown curve label {label!r} on {self.name}") from None

    def curve(self, label: str) -> DivisorClass:
        return self.negative_curves[self.curve_index(label)]

    def labels(self, indices: Iterable[int]) -> list[str]:
        return [self.curve_labels[i] for i in sorted(indices)]

    def divisor(self, spec) -> DivisorClass:
        """Build a class from coordinates or a linear expression.

        ``spec`` may be a coordinate sequence, a csv string ``"3,-1,-1"``, or an
        expression in generator/curve labels such as ``"3H-E1-E2"`` or
        ``"(7/2)H-2E1-(1/2)E2"``.
        """
        if isinstance(spec, DivisorClass):
            if len(spec) != self.rank:
                raise DimensionError("class has wrong rank")
            return spec
        if not isinstance(spec, str):
            return DivisorClass(parse_vector(spec, self.rank))
        text = spec.replace(" ", "").replace("−", "-")
        if re.fullmatch(r"[-+0-9./,]+", text):
            return DivisorClass(parse_vector(text, self.rank))
        return self._parse_expression(text)

    def _parse_expression(self, text: str) -> DivisorClass:
        names = {g: DivisorClass.basis(self.rank, i) for i, g in enumerate(self.generators)}
        for lab, c in zip(self.curve_labels, self.negative_curves):
            names.setdefault(lab, c)
        keys = sorted(names, key=len, reverse=True)
        name_re = "|".join(re.escape(k) for k in keys)
        term_re = re.compile(
            r"([+-]?)(?:\(([-+0-9./]+)\)|([0-9./]+))?\*?(" + name_re + r")"
        )
        pos = 0
        total = DivisorClass.zero(self.rank)
        while pos < len(text):
            m = term_re.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"cannot parse class expression {text!r} at {text[pos:]!r}")
            sgn, paren, plain, name = m.groups()
            coef = Q(paren or plain or "1")
            if sgn == "-":
                coef = -coef
            total = total + coef * names[name]
            pos = m.end()
        return total

    def with_ample(self, ample) -> "SurfaceLattice":
        return SurfaceLattice(
            self.name,
            self.gram,
            self.generators,
            self.negative_curves,
            self.curve_labels,
            self.divisor(ample),
            self.projective,
        )

    def to_document(self) -> dict:
        return {
            "schema": "surface/1",
            "name": self.name,
            "rank": self.rank,
            "generators": list(self.generators),
            "gram": [[qstr(x) for x in row] for row in self.gram],
            "negative_curves": [c.to_strings() for c in self.negative_curves],
            "curve_labels": list(self.curve_labels),
            "ample": None if self.ample is None else self.ample.to_strings(),
            "projective": self.projective,
        }


# -- builtin catalog ---------------------------------------------------------


def _bl2p2() -> SurfaceLattice:
    # H, E1, E2 with T = H - E1 - E2 the strict transform of the line p1p2
    return SurfaceLattice(
        name="bl2p2",
        gram=((1, 0, 0), (0, -1, 0), (0, 0, -1)),
        generators=("H", "E1", "E2"),
        negative_curves=((0, 1, 0), (0, 0, 1), (1, -1, -1)),
        curve_labels=("E1", "E2", "T"),
        ample=(3, -1, -1),
        projective=True,
    )


def _p1xp1() -> SurfaceLattice:
    return SurfaceLattice(
        name="p1xp1",
        gram=((0, 1), (1, 0)),
        generators=("F1", "F2"),
        negative_curves=(),
        curve_labels=(),
        ample=(1, 1),
        projective=True,
    )


def _p2() -> SurfaceLattice:
    return SurfaceLattice(
        name="p2",
        gram=((1,),),
        generators=("H",),
        negative_curves=(),
        curve_labels=(),
        ample=(1,),
        projective=True,
    )


def _fermat_quartic_4lines() -> SurfaceLattice:
    # Four lines l(j,j), l(j,k), l(k,k), l(k,j) on the Fermat quartic form a
    # 4-cycle of (-2)-curves; their Gram matrix alone is degenerate (the
    # cycle sum P is isotropic and orthogonal to every line), so the
    # hyperplane class h (h^2 = 4, h.l = 1) is adjoined to obtain a
    # Lorentzian lattice carrying an ample class.
    lines = 4
    gram = [[Fraction(0)] * (lines + 1) for _ in range(lines + 1)]
    gram[0][0] = Fraction(4)
    for i in range(1, lines + 1):
        gram[0][i] = gram[i][0] = Fraction(1)
        gram[i][i] = Fraction(-2)
    for i in range(lines):
        j = (i + 1) % lines
        gram[1 + i][1 + j] = gram[1 + j][1 + i] = Fraction(1)
    curves = [tuple(int(k == i + 1) for k in range(lines + 1)) for i in range(lines)]
    return SurfaceLattice(
        name="fermat_quartic_4lines",
        gram=tuple(tuple(r) for r in gram),
        generators=("h", "l_jj", "l_jk", "l_kk", "l_kj"),
        negative_curves=tuple(curves),
        curve_labels=("l_jj", "l_jk", "l_kk", "l_kj"),
        ample=(1, 0, 0, 0, 0),
        projective=True,
    )


BUILTINS = {
    "bl2p2": _bl2p2,
    "p1xp1": _p1xp1,
    "p2": _p2,
    "fermat_quartic_4lines": _fermat_quartic_4lines,
}


def builtin(name: str) -> SurfaceLattice:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ParseError(f"unknown builtin surface {name!r}; choose from {sorted(BUILTINS)}") from None


def load_surface(spec) -> SurfaceLattice:
    """Resolve a builtin name, a path to a JSON surface document, or a parsed document."""
    if isinstance(spec, SurfaceLattice):
        return spec
    if isinstance(spec, str):
        if spec in BUILTINS:
            return builtin(spec)
        path = Path(spec)
        if not path.exists():
            raise ParseError(f"{spec!r} is neither a builtin surface nor a file")
        try:
            spec = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid surface document {path}: {exc}") from None
    if isinstance(spec, Path):
        return load_surface(str(spec))
    if not isinstance(spec, dict):
        raise ParseError("surface document must be a mapping")
    if "builtin" in spec:
        return builtin(spec["builtin"])
    try:
        gram = [[Q(x) for x in row] for row in spec["gram"]]
        rank = int(spec.get("rank", len(gram)))
        if rank != len(gram):
            raise ParseError(f"rank {rank} does not match {len(gram)}x{len(gram)} gram")
        generators = spec.get("generators") or [f"g{i}" for i in range(rank)]
        curves = [parse_vector(c, rank) for c in spec.get("negative_curves", [])]
        ample = spec.get("ample")
        return SurfaceLattice(
            name=str(spec.get("name", "custom")),
            gram=gram,
            generators=generators,
            negative_curves=curves,
            curve_labels=spec.get("curve_labels") or (),
            ample=None if ample is None else parse_vector(ample, rank),
            projective=bool(spec.get("projective", False)),
        )
    except KeyError as exc:
        raise ParseError(f"surface document missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DimensionError):
            raise
        raise ParseError(f"malformed surface document: {exc}") from None


def pair(L: SurfaceLattice, a: DivisorClass, b: DivisorClass):
    return L.pair(a, b)


# -- positivity ----------------------------------------------------------------


@dataclass(frozen=True)
class PositivityReport:
    square: Fraction
    ample_pairing: Fraction
    in_P_plus: bool
    nef: bool
    kahler: bool
    big: bool
    pseudoeffective_verdict: str  # "yes" | "no" | "undecided"
    failing_curves: tuple  # tau.C <= 0
    nef_failing_curves: tuple  # tau.C < 0
    curve_pairings: tuple

    def to_document(self, L: SurfaceLattice) -> dict:
        return {
            "schema": "positivity/1",
            "square": qstr(self.square),
            "ample_pairing": qstr(self.ample_pairing),
            "in_P_plus": self.in_P_plus,
            "nef": self.nef,
            "kahler": self.kahler,
            "big": self.big,
            "pseudoeffective": self.pseudoeffective_verdict,
            "failing_curves": [
                {"curve": L.curve_labels[i], "pairing": qstr(self.curve_pairings[i])}
                for i in self.failing_curves
            ],
            "curve_pairings": {L.curve_labels[i]: qstr(p) for i, p in enumerate(self.curve_pairings)},
        }


def _require_ample(L: SurfaceLattice):
    if L.ample is None:
        raise PreconditionError(f"{L.name}: ample class pending; supply one with with_ample()")


def is_kahler(L: SurfaceLattice, tau: DivisorClass) -> bool:
    """Lamari's criterion against the declared curve list."""
    _require_ample(L)
    return (
        L.square(tau) > 0
        and L.pair(tau, L.ample) > 0
        and all(p > 0 for p in L.curve_pairings(tau))
    )


def is_nef(L: SurfaceLattice, tau: DivisorClass) -> bool:
    _require_ample(L)
    return (
        L.square(tau) >= 0
        and L.pair(tau, L.ample) >= 0
        and all(p >= 0 for p in L.curve_pairings(tau))
    )


def in_positive_cone(L: SurfaceLattice, tau: DivisorClass) -> bool:
    _require_ample(L)
    return L.square(tau) > 0 and L.pair(tau, L.ample) > 0


def classify(L: SurfaceLattice, tau: DivisorClass) -> PositivityReport:
    """Positivity report for ``tau``; raises only for an ample-pending lattice."""
    from .zariski import decompose  # zariski depends on this module
    from .errors import GuardError, NotPseudoeffective

    _require_ample(L)
    tau = L.divisor(tau)
    sq = L.square(tau)
    ap = L.pair(tau, L.ample)
    pairings = tuple(L.curve_pairings(tau))
    in_p = sq > 0 and ap > 0
    nef = sq >= 0 and ap >= 0 and all(p >= 0 for p in pairings)
    kahler = sq > 0 and ap > 0 and all(p > 0 for p in pairings)
    failing = tuple(i for i, p in enumerate(pairings) if p <= 0)
    nef_failing = tuple(i for i, p in enumerate(pairings) if p < 0)

    if ap < 0:
        verdict, big = "no", False
    else:
        try:
            dec = decompose(L, tau)
        except NotPseudoeffective:
            verdict, big = "no", False
        except GuardError:
            verdict, big = "undecided", in_p
        else:
            verdict = "yes"
            # vol(tau) = Z(tau)^2 on a surface
            big = L.square(dec.zpart) > 0
    return PositivityReport(
        square=sq,
        ample_pairing=ap,
        in_P_plus=in_p,
        nef=nef,
        kahler=kahler,
        big=big,
        pseudoeffective_verdict=verdict,
        failing_curves=failing,
        nef_failing_curves=nef_failing,
        curve_pairings=pairings,
    )


# -- blowups ---------------------------------------------------------------------


def _fresh_label(taken: Sequence[str]) -> str:
    label = "E"
    while label in taken:
        label += "'"
    return label


def blowup_general_point(L: SurfaceLattice, ample=None) -> SurfaceLattice:
    """Blow up a point lying on none of the declared curves.

    Pullbacks of the old curves are their strict transforms, and the new
    exceptional curve E (E^2 = -1) is orthogonal to every pulled-back class.
    The old ample class only pulls back to a nef class, so the result is
    "ample pending" unless ``ample`` is given (see :func:`suggest_ample`).
    """
    n = L.rank
    gram = [list(row) + [Fraction(0)] for row in L.gram]
    gram.append([Fraction(0)] * n + [Fraction(-1)])
    label = _fresh_label(list(L.generators) + list(L.curve_labels))
    curves = [pullback(c) for c in L.negative_curves] + [DivisorClass.basis(n + 1, n)]
    new = SurfaceLattice(
        name=f"blowup({L.name})",
        gram=gram,
        generators=tuple(L.generators) + (label,),
        negative_curves=curves,
        curve_labels=tuple(L.curve_labels) + (label,),
        ample=None,
        projective=L.projective,
    )
    if ample is not None:
        new = new.with_ample(ample)
    return new


def pullback(tau: DivisorClass, extra: int = 1) -> DivisorClass:
    """Pull a class back along ``extra`` general-point blowups (pads with zeros)."""
    return DivisorClass(tuple(tau.coords) + (Fraction(0),) * extra)


def pushforward(tau: DivisorClass, rank: int) -> DivisorClass:
    """Push forward to the first ``rank`` coordinates (exceptional classes map to 0)."""
    return DivisorClass(tuple(tau.coords[:rank]))


def suggest_ample(Y: SurfaceLattice, base_ample: DivisorClass, delta=Fraction(1, 2)) -> DivisorClass:
    """An ample class ``pi^*A - delta E`` on a one-point blowup, halving delta until Kähler."""
    n = Y.rank
    e = DivisorClass.basis(n, n - 1)
    a = pullback(base_ample)
    delta = Q(delta)
    for _ in range(64):
        cand = a - delta * e
        trial = Y.with_ample(cand) if Y.ample is None else Y
        try:
            if is_kahler(trial, cand):
                return cand
        except (CurveError, SignatureError):
            pass
        delta /= 2
    raise PreconditionError("could not find an ample class of the form pi^*A - delta E")
