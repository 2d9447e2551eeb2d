"""Wall-and-chamber scans over two-parameter families of stability data.

Each grid node carries the exact pairing vector ``tau.C`` of every bundle's
reduced class against every declared curve, so sign changes along grid edges
are certain; one bisection step then halves the location uncertainty.
"""
from __future__ import annotations

import csv
import json
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import DegenerateCharge, PhaseCollision, SpecError
from .exact import Q, qstr
from .lattice import DivisorClass, SurfaceLattice
from .pde import StabilityData, certify_class, dhym_tau, z_problem

__all__ = [
    "FamilySpec",
    "CellResult",
    "ChamberMap",
    "dhym_slice_spec",
    "reduced_class",
    "scan",
    "wall_values",
    "printed_walls",
    "comparison_report",
    "export",
    "load_chambermap",
    "wall_polylines",
]

DHYM_SLICE = "dhym-slice"


@dataclass(frozen=True)
class FamilySpec:
    """A family ``(a, b) -> problem`` scanned against several line bundles.

    ``parametrization`` is ``"dhym-slice"`` (the dHYM slice with fixed ``beta``:
    class ``c1L - a*beta`` and auxiliary class ``b*beta``) or a picklable
    callable ``(a, b) -> StabilityData`` used through the Z-critical reduction.
    """

    surface: SurfaceLattice
    bundles: tuple
    bundle_labels: tuple
    region: tuple  # ((a0, a1), (b0, b1))
    resolution: tuple  # (na, nb) grid nodes, endpoints included
    parametrization: Union[str, Callable] = DHYM_SLICE
    beta: Optional[DivisorClass] = None

    def __post_init__(self):
        (a0, a1), (b0, b1) = self.region
        region = ((Q(a0), Q(a1)), (Q(b0), Q(b1)))
        object.__setattr__(self, "region", region)
        if not (region[0][0] < region[0][1] and region[1][0] < region[1][1]):
            raise SpecError("degenerate region")
        na, nb = self.resolution
        if na < 2 or nb < 2:
            raise SpecError("resolution must be at least 2x2")
        if len(self.bundles) != len(self.bundle_labels) or not self.bundles:
            raise SpecError("need one label per bundle and at least one bundle")
        if self.parametrization == DHYM_SLICE:
            beta = self.surface.ample if self.beta is None else self.beta
            if beta is None:
                raise SpecError("dHYM slice needs beta (surface ample pending)")
            object.__setattr__(self, "beta", beta)
        elif not callable(self.parametrization):
            raise SpecError(f"unknown parametrization {self.parametrization!r}")

    @property
    def is_dhym_slice(self) -> bool:
        return self.parametrization == DHYM_SLICE

    def a_values(self) -> tuple:
        (a0, a1), _ = self.region
        n = self.resolution[0]
        return tuple(a0 + (a1 - a0) * i / (n - 1) for i in range(n))

    def b_values(self) -> tuple:
        _, (b0, b1) = self.region
        n = self.resolution[1]
        return tuple(b0 + (b1 - b0) * j / (n - 1) for j in range(n))


def dhym_slice_spec(
    surface: SurfaceLattice,
    labels: Sequence[str] = ("E1", "T"),
    region=(("-3.2", "0.14"), ("0.05", "2")),
    resolution=(128, 128),
    beta: Optional[DivisorClass] = None,
) -> FamilySpec:
    bundles = tuple(surface.divisor(lbl) for lbl in labels)
    return FamilySpec(surface, bundles, tuple(labels), region, tuple(resolution), DHYM_SLICE, beta)


@dataclass(frozen=True)
class CellResult:
    status: str  # solvable | unsolvable | boundary | invalid
    reason: str
    pairings: tuple  # tau.C per declared curve ((), when invalid)
    min_pairing: Optional[Fraction]


def reduced_class(spec: FamilySpec, bundle: DivisorClass, a, b):
    """The class whose Kähler property decides solvability at ``(a, b)``.

    Returns ``(tau, None)`` or ``(None, reason)``.
    """
    L = spec.surface
    a, b = Q(a), Q(b)
    if spec.is_dhym_slice:
        beta = spec.beta
        D = bundle - a * beta
        if L.pair(beta, D) <= 0:
            return None, "β·(c1L−aβ) ≤ 0"
        if b == 0:
            return None, "b = 0"
        _, tau = dhym_tau(L, b * beta, D)
        return tau, None
    data = spec.parametrization(a, b)
    try:
        prob = z_problem(L, data, bundle)
    except DegenerateCharge:
        return None, "Im Z = 0"
    except PhaseCollision:
        return None, "c0 = 0"
    if not prob.valid["V_positive"]:
        return None, "V ≤ 0"
    return prob.tau, None


def evaluate_cell(spec: FamilySpec, bundle: DivisorClass, a, b) -> CellResult:
    tau, reason = reduced_class(spec, bundle, a, b)
    if tau is None:
        return CellResult("invalid", reason, (), None)
    cert = certify_class(spec.surface, tau)
    pairings = tuple(p for _, p in cert.tested_curves)
    return CellResult(cert.status, "", pairings, cert.margin)


@dataclass(frozen=True)
class ChamberMap:
    a_values: tuple
    b_values: tuple
    bundle_labels: tuple
    curve_labels: tuple
    cells: tuple  # cells[i][j][k]: CellResult at (a_i, b_j) for bundle k
    walls: dict = field(default_factory=dict)  # (bundle label, curve label) -> ((a, b), ...)
    chambers: tuple = ()  # chambers[i][j]: component label
    chamber_status: tuple = ()  # label -> status vector
    dhym_slice: bool = False

    def status_vector(self, i: int, j: int) -> tuple:
        return tuple(c.status for c in self.cells[i][j])

    def distinct_status_vectors(self) -> set:
        return {self.status_vector(i, j) for i in range(len(self.a_values)) for j in range(len(self.b_values))}

    def chamber_constancy(self) -> bool:
        for i in range(len(self.a_values)):
            for j in range(len(self.b_values)):
                if self.status_vector(i, j) != self.chamber_status[self.chambers[i][j]]:
                    return False
        return True

    def adjacency(self) -> set:
        """Pairs of status vectors whose chambers share a grid edge."""
        pairs = set()
        na, nb = len(self.a_values), len(self.b_values)
        for i in range(na):
            for j in range(nb):
                for di, dj in ((1, 0), (0, 1)):
                    p, q = i + di, j + dj
                    if p < na and q < nb:
                        s, t = self.status_vector(i, j), self.status_vector(p, q)
                        if s != t:
                            pairs.add(frozenset((s, t)))
        return pairs


def _scan_columns(payload):
    spec, indices = payload
    bs = spec.b_values()
    a_vals = spec.a_values()
    out = []
    for i in indices:
        a = a_vals[i]
        out.append(tuple(tuple(evaluate_cell(spec, L, a, b) for L in spec.bundles) for b in bs))
    return out


def _label_chambers(cells, na, nb):
    labels = [[-1] * nb for _ in range(na)]
    status = []
    for i in range(na):
        for j in range(nb):
            if labels[i][j] >= 0:
                continue
            vec = tuple(c.status for c in cells[i][j])
            lab = len(status)
            status.append(vec)
            labels[i][j] = lab
            queue = deque([(i, j)])
            while queue:
                x, y = queue.popleft()
                for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if 0 <= nx < na and 0 <= ny < nb and labels[nx][ny] < 0:
                        if tuple(c.status for c in cells[nx][ny]) == vec:
                            labels[nx][ny] = lab
                            queue.append((nx, ny))
    return tuple(tuple(r) for r in labels), tuple(status)


def _pairing_at(spec, k, curve, a, b):
    tau, _ = reduced_class(spec, spec.bundles[k], a, b)
    if tau is None:
        return None
    return spec.surface.pair(tau, spec.surface.negative_curves[curve])


def _sgn(x):
    return (x > 0) - (x < 0)


def _locate_walls(spec, cells, a_vals, b_vals):
    walls = {}
    na, nb = len(a_vals), len(b_vals)
    L = spec.surface
    for k, blabel in enumerate(spec.bundle_labels):
        for c, clabel in enumerate(L.curve_labels):
            points = set()
            for i in range(na):
                for j in range(nb):
                    here = cells[i][j][k]
                    if here.status == "invalid":
                        continue
                    v = here.pairings[c]
                    p0 = (a_vals[i], b_vals[j])
                    if v == 0:
                        points.add(p0)
                        continue
                    for di, dj in ((1, 0), (0, 1)):
                        p, q = i + di, j + dj
                        if p >= na or q >= nb:
                            continue
                        there = cells[p][q][k]
                        if there.status == "invalid" or there.pairings[c] == 0:
                            continue
                        w = there.pairings[c]
                        if _sgn(v) == _sgn(w):
                            continue
                        p1 = (a_vals[p], b_vals[q])
                        mid = ((p0[0] + p1[0]) / 2, (p0[1] + p1[1]) / 2)
                        vm = _pairing_at(spec, k, c, *mid)
                        if vm is None or vm == 0:
                            points.add(mid)
                        elif _sgn(vm) != _sgn(v):
                            points.add(((p0[0] + mid[0]) / 2, (p0[1] + mid[1]) / 2))
                        else:
                            points.add(((mid[0] + p1[0]) / 2, (mid[1] + p1[1]) / 2))
            if points:
                walls[(blabel, clabel)] = tuple(sorted(points))
    return walls


def scan(spec: FamilySpec, jobs: int = 1) -> ChamberMap:
    """Evaluate every grid node exactly, then locate walls and label chambers."""
    a_vals, b_vals = spec.a_values(), spec.b_values()
    na = len(a_vals)
    if jobs and jobs > 1:
        chunks = [list(range(s, na, jobs)) for s in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scan_columns, [(spec, ch) for ch in chunks]))
        columns = [None] * na
        for ch, res in zip(chunks, results):
            for i, col in zip(ch, res):
                columns[i] = col
        cells = tuple(columns)
    else:
        cells = tuple(_scan_columns((spec, range(na))))
    chambers, chamber_status = _label_chambers(cells, na, len(b_vals))
    walls = _locate_walls(spec, cells, a_vals, b_vals)
    return ChamberMap(
        a_vals,
        b_vals,
        tuple(spec.bundle_labels),
        tuple(spec.surface.curve_labels),
        cells,
        walls,
        chambers,
        chamber_status,
        spec.is_dhym_slice,
    )


def wall_values(spec: FamilySpec, bundle: Union[int, str], curve: Union[int, str], point) -> Fraction:
    """Exact pairing ``tau(L, (a, b)).C``: the engine's own wall function."""
    k = spec.bundle_labels.index(bundle) if isinstance(bundle, str) else bundle
    c = spec.surface.curve_index(curve) if isinstance(curve, str) else curve
    a, b = point
    value = _pairing_at(spec, k, c, Q(a), Q(b))
    if value is None:
        _, reason = reduced_class(spec, spec.bundles[k], Q(a), Q(b))
        raise SpecError(f"point {point} is outside the valid region: {reason}")
    return value


def printed_walls(a, b) -> tuple:
    """The two closed forms printed for the blown-up plane slice."""
    a, b = Q(a), Q(b)
    w1 = (7 * b * b + 8 * a) / (1 - 7 * a)
    w2 = (7 * b * b + 4 * (a + 1) ** 2 - 8) / (5 - 11 * a)
    return w1, w2


def comparison_report(spec: FamilySpec, cmap: Optional[ChamberMap] = None, samples: Sequence = ((0, 1),)) -> dict:
    """Engine walls against the printed closed forms.

    Only meaningful for the builtin slice with bundles labelled ``E1`` and
    ``T``; W1 pairs ``tau(E1)`` with ``E1`` and W2 pairs ``tau(T)`` with ``T``.
    Neither side is asserted; the report just records agreement.
    """
    if not spec.is_dhym_slice or not {"E1", "T"} <= set(spec.bundle_labels):
        return {"schema": "wallreport/1", "applicable": False}
    rows = []
    for a, b in samples:
        p1, p2 = printed_walls(a, b)
        rows.append(
            {
                "a": qstr(Q(a)),
                "b": qstr(Q(b)),
                "engine_W1": qstr(wall_values(spec, "E1", "E1", (a, b))),
                "printed_W1": qstr(p1),
                "engine_W2": qstr(wall_values(spec, "T", "T", (a, b))),
                "printed_W2": qstr(p2),
            }
        )
    report = {"schema": "wallreport/1", "applicable": True, "samples": rows}
    if cmap is not None:
        agree = [0, 0]
        total = 0
        k1, k2 = cmap.bundle_labels.index("E1"), cmap.bundle_labels.index("T")
        c1, c2 = cmap.curve_labels.index("E1"), cmap.curve_labels.index("T")
        for i, a in enumerate(cmap.a_values):
            for j, b in enumerate(cmap.b_values):
                x, y = cmap.cells[i][j][k1], cmap.cells[i][j][k2]
                if x.status == "invalid" or y.status == "invalid":
                    continue
                p1, p2 = printed_walls(a, b)
                total += 1
                agree[0] += _sgn(x.pairings[c1]) == _sgn(p1)
                agree[1] += _sgn(y.pairings[c2]) == _sgn(p2)
        report["sign_agreement"] = {
            "cells": total,
            "W1": agree[0],
            "W2": agree[1],
        }
        report["engine_status_vectors"] = sorted(
            ["/".join(v) for v in cmap.distinct_status_vectors()]
        )
    return report


# --- serialization -------------------------------------------------------------


def _cell_doc(c: CellResult) -> dict:
    return {
        "status": c.status,
        "reason": c.reason,
        "pairings": [qstr(p) for p in c.pairings],
        "min_pairing": None if c.min_pairing is None else qstr(c.min_pairing),
    }


def _cell_from(doc) -> CellResult:
    mp = doc["min_pairing"]
    return CellResult(doc["status"], doc["reason"], tuple(Q(p) for p in doc["pairings"]), None if mp is None else Q(mp))


def to_document(cmap: ChamberMap) -> dict:
    return {
        "schema": "chambermap/1",
        "dhym_slice": cmap.dhym_slice,
        "a_values": [qstr(a) for a in cmap.a_values],
        "b_values": [qstr(b) for b in cmap.b_values],
        "bundle_labels": list(cmap.bundle_labels),
        "curve_labels": list(cmap.curve_labels),
        "cells": [[[_cell_doc(c) for c in node] for node in col] for col in cmap.cells],
        "walls": [
            {"bundle": bl, "curve": cl, "points": [[qstr(a), qstr(b)] for a, b in pts]}
            for (bl, cl), pts in sorted(cmap.walls.items())
        ],
        "chambers": [list(r) for r in cmap.chambers],
        "chamber_status": [list(v) for v in cmap.chamber_status],
    }


def from_document(doc: dict) -> ChamberMap:
    if doc.get("schema") != "chambermap/1":
        raise SpecError(f"unsupported schema {doc.get('schema')!r}")
    return ChamberMap(
        tuple(Q(a) for a in doc["a_values"]),
        tuple(Q(b) for b in doc["b_values"]),
        tuple(doc["bundle_labels"]),
        tuple(doc["curve_labels"]),
        tuple(tuple(tuple(_cell_from(c) for c in node) for node in col) for col in doc["cells"]),
        {(w["bundle"], w["curve"]): tuple((Q(a), Q(b)) for a, b in w["points"]) for w in doc["walls"]},
        tuple(tuple(r) for r in doc["chambers"]),
        tuple(tuple(v) for v in doc["chamber_status"]),
        bool(doc.get("dhym_slice", False)),
    )


def load_chambermap(path) -> ChamberMap:
    with open(path, encoding="utf-8") as fh:
        return from_document(json.load(fh))


def _write_csv(cmap: ChamberMap, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "bundle_label", "status", "min_pairing"])
        for i, a in enumerate(cmap.a_values):
            for j, b in enumerate(cmap.b_values):
                for k, lbl in enumerate(cmap.bundle_labels):
                    c = cmap.cells[i][j][k]
                    w.writerow([qstr(a), qstr(b), lbl, c.status, "" if c.min_pairing is None else qstr(c.min_pairing)])


# --- SVG -----------------------------------------------------------------------

_PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#ff9da7", "#9c755f"]


def _marching_segments(values, xs, ys):
    """Zero-level segments of a node field (None = missing) by marching squares."""
    segs = []

    def interp(p, q, vp, vq):
        t = vp / (vp - vq)
        return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))

    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            vals = [values[x][y] for x, y in corners]
            if any(v is None for v in vals):
                continue
            vals = [float(v) for v in vals]
            pts = [(xs[x], ys[y]) for x, y in corners]
            crossings = []
            for e in range(4):
                f = (e + 1) % 4
                if (vals[e] >= 0) != (vals[f] >= 0):
                    crossings.append(interp(pts[e], pts[f], vals[e], vals[f]))
            if len(crossings) == 2:
                segs.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:
                centre = sum(vals) / 4
                if (centre >= 0) == (vals[0] >= 0):
                    segs += [(crossings[0], crossings[3]), (crossings[1], crossings[2])]
                else:
                    segs += [(crossings[0], crossings[1]), (crossings[2], crossings[3])]
    return segs


def _chain(segs, digits=9):
    """Join segments sharing endpoints into polylines."""
    key = lambda p: (round(p[0], digits), round(p[1], digits))
    ends = {}
    for n, (p, q) in enumerate(segs):
        ends.setdefault(key(p), []).append(n)
        ends.setdefault(key(q), []).append(n)
    used = [False] * len(segs)
    lines = []
    for n in range(len(segs)):
        if used[n]:
            continue
        used[n] = True
        line = list(segs[n])
        for direction in (0, 1):
            while True:
                tip = line[-1] if direction == 0 else line[0]
                nxt = next((m for m in ends.get(key(tip), []) if not used[m]), None)
                if nxt is None:
                    break
                used[nxt] = True
                p, q = segs[nxt]
                other = q if key(p) == key(tip) else p
                if direction == 0:
                    line.append(other)
                else:
                    line.insert(0, other)
        lines.append(line)
    return lines


def wall_polylines(cmap: ChamberMap) -> dict:
    """(bundle, curve) -> list of float polylines tracing ``tau.C = 0``."""
    xs = [float(a) for a in cmap.a_values]
    ys = [float(b) for b in cmap.b_values]
    out = {}
    for k, bl in enumerate(cmap.bundle_labels):
        for c, cl in enumerate(cmap.curve_labels):
            field_ = [
                [None if node[k].status == "invalid" else node[k].pairings[c] for node in col]
                for col in cmap.cells
            ]
            segs = _marching_segments(field_, xs, ys)
            if segs:
                out[(bl, cl)] = _chain(segs)
    return out


def _write_svg(cmap: ChamberMap, path, cell_px: int = 4):
    na, nb = len(cmap.a_values), len(cmap.b_values)
    margin, legend_h = 50, 22 * (len(cmap.chamber_status) + 1)
    width, height = na * cell_px, nb * cell_px
    x0, x1 = float(cmap.a_values[0]), float(cmap.a_values[-1])
    y0, y1 = float(cmap.b_values[0]), float(cmap.b_values[-1])
    sx = lambda x: margin + (x - x0) / (x1 - x0) * width
    sy = lambda y: margin + height - (y - y0) / (y1 - y0) * height
    vectors = sorted({v for v in cmap.chamber_status})
    colour = {v: _PALETTE[n % len(_PALETTE)] for n, v in enumerate(vectors)}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 2 * margin + 220}" '
        f'height="{max(height + 2 * margin, legend_h + margin)}">'
    ]
    half = cell_px / 2
    for i, a in enumerate(cmap.a_values):
        for j, b in enumerate(cmap.b_values):
            v = cmap.status_vector(i, j)
            out.append(
                f'<rect x="{sx(float(a)) - half:.2f}" y="{sy(float(b)) - half:.2f}" '
                f'width="{cell_px}" height="{cell_px}" fill="{colour[v]}" stroke="none"/>'
            )
    for (bl, cl), lines in sorted(wall_polylines(cmap).items()):
        for line in lines:
            pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in line)
            out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"><title>{bl}·{cl} = 0</title></polyline>')
    xl, yl = ("Re s", "Im s") if cmap.dhym_slice else ("a", "b")
    out.append(f'<text x="{margin + width / 2}" y="{margin + height + 35}" text-anchor="middle">{xl}</text>')
    out.append(
        f'<text x="15" y="{margin + height / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {margin + height / 2})">{yl}</text>'
    )
    out.append(f'<text x="{margin}" y="{margin + height + 18}">{x0:g}</text>')
    out.append(f'<text x="{margin + width}" y="{margin + height + 18}" text-anchor="end">{x1:g}</text>')
    out.append(f'<text x="{margin - 5}" y="{margin + height}" text-anchor="end">{y0:g}</text>')
    out.append(f'<text x="{margin - 5}" y="{margin + 10}" text-anchor="end">{y1:g}</text>')
    lx = margin + width + 20
    out.append(f'<text x="{lx}" y="{margin}">{" / ".join(cmap.bundle_labels)}</text>')
    for n, v in enumerate(vectors):
        y = margin + 22 * (n + 1)
        out.append(f'<rect x="{lx}" y="{y - 12}" width="14" height="14" fill="{colour[v]}"/>')
        out.append(f'<text x="{lx + 20}" y="{y}">{" / ".join(v)}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def export(cmap: ChamberMap, fmt: str, path) -> None:
    if not cmap.cells:
        raise SpecError("empty chamber map")
    if fmt == "csv":
        _write_csv(cmap, path)
    elif fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(to_document(cmap), fh, indent=1, ensure_ascii=False, sort_keys=True)
            fh.write("\n")
    elif fmt == "svg":
        _write_svg(cmap, path)
    else:
        raise SpecError(f"unknown export format {fmt!r}")
