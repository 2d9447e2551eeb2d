"""Exact arithmetic primitives: rational parsing, first-order infinitesimals,
Gaussian rationals, and symmetric-form signatures over Q.

Nothing here touches floating point.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from .errors import ParseError

_MINUS_SIGNS = str.maketrans({"−": "-", "–": "-"})
_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def Q(value) -> Fraction:
    """Coerce ``value`` to an exact :class:`Fraction`.

    Accepts ints, Fractions, and strings such as ``"-3/2"``, ``"−1"`` or
    ``"0.14"`` (decimal strings convert exactly). Floats are refused.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParseError(f"boolean is not a rational: {value!r}")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip().translate(_MINUS_SIGNS).replace(" ", "")
        if not text:
            raise ParseError("empty rational literal")
        if _RATIONAL_RE.match(text):
            return Fraction(text)
        try:
            dec = Decimal(text)
        except InvalidOperation:
            raise ParseError(f"not a rational literal: {value!r}") from None
        if not dec.is_finite():
            raise ParseError(f"not a finite rational: {value!r}")
        return Fraction(dec)
    raise ParseError(f"cannot convert {type(value).__name__} to an exact rational")


def qstr(x) -> str:
    """Canonical string for an exact rational (``"3"``, ``"-1/7"``)."""
    return str(Q(x))


def sign(x) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True, order=False)
class EpsRational:
    """``value + slope*eps`` for an infinitesimal ``eps > 0``.

    Ordering is lexicographic, i.e. it reports the sign for every sufficiently
    small positive eps. Products of two infinitesimal quantities drop the
    ``eps**2`` term; the Zariski engine never multiplies two of them (its Gram
    matrices are eps-free), so that truncation is never hit on the main path.
    """

    value: Fraction = Fraction(0)
    slope: Fraction = Fraction(0)

    @staticmethod
    def lift(x) -> "EpsRational":
        if isinstance(x, EpsRational):
            return x
        return EpsRational(Fraction(x), Fraction(0))

    def __add__(self, other):
        try:
            o = EpsRational.lift(other)
        except TypeError:
            return NotImplemented
        return EpsRational(self.value + o.value, self.slope + o.slope)

    __radd__ = __add__

    def __neg__(self):
        return EpsRational(-self.value, -self.slope)

    def __sub__(self, other):
        try:
            o = EpsRational.lift(other)
        except TypeError:
            return NotImplemented
        return EpsRational(self.value - o.value, self.slope - o.slope)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, EpsRational):
            return EpsRational(
                self.value * other.value,
                self.value * other.slope + self.slope * other.value,
            )
        if isinstance(other, (int, Fraction)):
            return EpsRational(self.value * other, self.slope * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return EpsRational(self.value / other, self.slope / other)
        if isinstance(other, EpsRational) and other.slope == 0:
            return self / other.value
        return NotImplemented

    def _cmp(self, other) -> int:
        d = self - other
        if d.value != 0:
            return sign(d.value)
        return sign(d.slope)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self.slope == 0:
            return hash(self.value)
        return hash((self.value, self.slope))

    def at(self, eps) -> Fraction:
        """Evaluate at a concrete rational ``eps``."""
        return self.value + self.slope * Q(eps)

    def __str__(self):
        if self.slope == 0:
            return str(self.value)
        op = "+" if self.slope > 0 else "-"
        return f"{self.value} {op} {abs(self.slope)}*eps"

    def __repr__(self):
        return f"EpsRational({self.value}, {self.slope})"


@dataclass(frozen=True)
class QComplex:
    """A complex number with exact rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @staticmethod
    def lift(x) -> "QComplex":
        if isinstance(x, QComplex):
            return x
        if isinstance(x, tuple):
            return QComplex(Q(x[0]), Q(x[1]))
        return QComplex(Q(x), Fraction(0))

    def __add__(self, other):
        o = QComplex.lift(other)
        return QComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QComplex(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-QComplex.lift(other))

    def __rsub__(self, other):
        return QComplex.lift(other) - self

    def __mul__(self, other):
        o = QComplex.lift(other)
        return QComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self):
        return QComplex(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __truediv__(self, other):
        o = QComplex.lift(other)
        n = o.norm2()
        if n == 0:
            raise ZeroDivisionError("division by complex zero")
        p = self * o.conjugate()
        return QComplex(p.re / n, p.im / n)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        op = "+" if self.im > 0 else "-"
        return f"{self.re} {op} {abs(self.im)}i"


I = QComplex(Fraction(0), Fraction(1))


def parse_complex(text: str) -> QComplex:
    """Parse ``"re,im"`` into a :class:`QComplex`."""
    parts = [p for p in text.split(",")]
    if len(parts) != 2:
        raise ParseError(f"complex literal needs 're,im': {text!r}")
    return QComplex(Q(parts[0]), Q(parts[1]))


def symmetric_diagonalization(matrix: Sequence[Sequence]) -> list[Fraction]:
    """Diagonal of a congruence ``P^T M P = D`` of a symmetric rational matrix.

    Symmetric Gaussian elimination (an LDL^T factorisation with the usual
    ``e_i + e_j`` fix-up when every remaining diagonal entry vanishes). The
    signs of the returned entries give the signature by Sylvester's law.
    """
    a = [[Q(x) for x in row] for row in matrix]
    n = len(a)
    for row in a:
        if len(row) != n:
            raise ValueError("matrix must be square")
    diag: list[Fraction] = []
    active = list(range(n))
    while active:
        piv = next((i for i in active if a[i][i] != 0), None)
        if piv is None:
            pair = next(
                ((i, j) for i in active for j in active if i < j and a[i][j] != 0),
                None,
            )
            if pair is None:
                diag.extend(Fraction(0) for _ in active)
                break
            i, j = pair
            # row/col i += row/col j: new a_ii = 2 a_ij != 0
            for k in range(n):
                a[i][k] += a[j][k]
            for k in range(n):
                a[k][i] += a[k][j]
            piv = i
        p = a[piv][piv]
        active.remove(piv)
        for r in active:
            f = a[r][piv] / p
            if f == 0:
                continue
            for c in active:
                a[r][c] -= f * a[piv][c]
        diag.append(p)
    return diag


def inertia(matrix) -> tuple[int, int, int]:
    """(positive, negative, zero) counts of a symmetric rational matrix."""
    d = symmetric_diagonalization(matrix)
    return (sum(1 for x in d if x > 0), sum(1 for x in d if x < 0), sum(1 for x in d if x == 0))


def is_negative_definite(matrix) -> bool:
    if len(matrix) == 0:
        return True
    pos, neg, zero = inertia(matrix)
    return neg == len(matrix)


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> list:
    """Solve ``M x = b`` for a nonsingular rational ``M``.

    Entries of ``b`` may be any type closed under subtraction and division by
    a Fraction (Fraction, :class:`EpsRational`). Raises ``ZeroDivisionError``
    for singular ``M``.
    """
    n = len(matrix)
    a = [[Q(x) for x in row] for row in matrix]
    b = list(rhs)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        p = a[col][col]
        for r in range(n):
            if r == col or a[r][col] == 0:
                continue
            f = a[r][col] / p
            for c in range(col, n):
                a[r][c] -= f * a[col][c]
            b[r] = b[r] - f * b[col]
    return [b[i] / a[i][i] for i in range(n)]


def parse_vector(text: str | Iterable, rank: int | None = None) -> tuple[Fraction, ...]:
    """Parse ``"3,-1,-1/2"`` (or an iterable of literals) into exact coordinates."""
    if isinstance(text, str):
        items = [t for t in text.split(",") if t.strip() != ""]
    else:
        items = list(text)
    coords = tuple(Q(t) for t in items)
    if rank is not None and len(coords) != rank:
        raise ParseError(f"expected {rank} coordinates, got {len(coords)}")
    return coords
