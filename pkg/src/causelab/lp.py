"""
Exact rational linear programming and convex-hull membership.

The solver is a dense two-phase simplex over :class:`fractions.Fraction` with
Bland's anti-cycling pivot rule, so every result is an exact rational and
repeated runs are bit-identical.  Problem sizes in this package are at most a
few thousand variables, which a dense tableau handles comfortably; there is
deliberately no floating-point path.

All variables are constrained non-negative.  Free quantities (as in the
separating-functional search) are modelled by their callers as differences of
two non-negative variables.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CapExceeded, InvalidTable

HULL_VERTEX_CAP = 100_000

Row = tuple[tuple[Fraction, ...], Fraction]


def _rows(raw: Sequence[tuple[Sequence, object]]) -> tuple[Row, ...]:
    return tuple(
        (tuple(Fraction(c) for c in coeffs), Fraction(rhs)) for coeffs, rhs in raw
    )


@dataclass(frozen=True)
class LinearProgram:
    """max/min of objective . x subject to eq rows, le rows, and x >= 0."""

    objective: tuple[Fraction, ...]
    maximize: bool = False
    eq: tuple[Row, ...] = ()
    le: tuple[Row, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "objective", tuple(Fraction(c) for c in self.objective))
        object.__setattr__(self, "eq", _rows(self.eq))
        object.__setattr__(self, "le", _rows(self.le))
        n = len(self.objective)
        for coeffs, _ in self.eq + self.le:
            if len(coeffs) != n:
                raise InvalidTable(f"constraint row has {len(coeffs)} coefficients, expected {n}")

    @property
    def n_vars(self) -> int:
        return len(self.objective)


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None


def format_lp(lp: LinearProgram) -> str:
    """Plain-text equation dump for debugging."""

    def term(coeffs: Sequence[Fraction]) -> str:
        parts = [f"{c}*x{j}" for j, c in enumerate(coeffs) if c != 0]
        return " + ".join(parts) if parts else "0"

    lines = [("maximize " if lp.maximize else "minimize ") + term(lp.objective)]
    for coeffs, rhs in lp.eq:
        lines.append(f"  {term(coeffs)} == {rhs}")
    for coeffs, rhs in lp.le:
        lines.append(f"  {term(coeffs)} <= {rhs}")
    lines.append("  x >= 0")
    return "\n".join(lines)


ZERO = Fraction(0)
ONE = Fraction(1)


def _pivot(rows: list[list[Fraction]], obj: list[Fraction], pr: int, pc: int) -> None:
    pivot_row = rows[pr]
    inv = ONE / pivot_row[pc]
    if inv != 1:
        rows[pr] = pivot_row = [v * inv for v in pivot_row]
    for i, row in enumerate(rows):
        if i == pr:
            continue
        factor = row[pc]
        if factor != 0:
            rows[i] = [v - factor * p for v, p in zip(row, pivot_row)]
    factor = obj[pc]
    if factor != 0:
        obj[:] = [v - factor * p for v, p in zip(obj, pivot_row)]


def _reduced_costs(
    rows: list[list[Fraction]], basis: list[int], cost: list[Fraction], ncols: int
) -> list[Fraction]:
    obj = list(cost) + [ZERO]
    for i, b in enumerate(basis):
        cb = cost[b]
        if cb != 0:
            row = rows[i]
            obj = [v - cb * r for v, r in zip(obj, row)]
    return obj


def _run_simplex(
    rows: list[list[Fraction]],
    basis: list[int],
    cost: list[Fraction],
    ncols: int,
) -> LpStatus:
    """Minimize cost over the canonical tableau in place; Bland's rule throughout."""
    obj = _reduced_costs(rows, basis, cost, ncols)
    while True:
        entering = -1
        for j in range(ncols):
            if obj[j] < 0:
                entering = j
                break
        if entering < 0:
            return LpStatus.OPTIMAL
        leaving = -1
        best_ratio: Fraction | None = None
        for i, row in enumerate(rows):
            coeff = row[entering]
            if coeff > 0:
                ratio = row[-1] / coeff
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return LpStatus.UNBOUNDED
        _pivot(rows, obj, leaving, entering)
        basis[leaving] = entering


def lp_solve(lp: LinearProgram) -> LpSolution:
    """Exact optimum and an optimal vertex, or an infeasible/unbounded status."""
    n = lp.n_vars
    n_slack = len(lp.le)
    ncols = n + n_slack

    rows: list[list[Fraction]] = []
    slack_basic: list[int | None] = []
    for coeffs, rhs in lp.eq:
        rows.append(list(coeffs) + [ZERO] * n_slack + [rhs])
        slack_basic.append(None)
    for idx, (coeffs, rhs) in enumerate(lp.le):
        row = list(coeffs) + [ZERO] * n_slack + [rhs]
        row[n + idx] = ONE
        rows.append(row)
        slack_basic.append(n + idx)

    for i, row in enumerate(rows):
        if row[-1] < 0:
            rows[i] = [-v for v in row]
            slack_basic[i] = None  # slack coefficient flipped to -1

    # Phase 1: artificials for rows without a ready-made basic column.
    art_rows = [i for i, b in enumerate(slack_basic) if b is None]
    n_art = len(art_rows)
    total_cols = ncols + n_art
    basis: list[int] = []
    for i, row in enumerate(rows):
        row[-1:-1] = [ZERO] * n_art  # insert artificial columns before rhs
        basis.append(slack_basic[i] if slack_basic[i] is not None else -1)
    for a_idx, i in enumerate(art_rows):
        rows[i][ncols + a_idx] = ONE
        basis[i] = ncols + a_idx

    if n_art:
        cost1 = [ZERO] * ncols + [ONE] * n_art
        status = _run_simplex(rows, basis, cost1, total_cols)
        if status is not LpStatus.OPTIMAL:  # pragma: no cover - phase 1 is always bounded
            raise AssertionError("phase-1 simplex cannot be unbounded")
        infeasibility = sum(
            rows[i][-1] for i, b in enumerate(basis) if b >= ncols
        )
        if infeasibility != 0:
            return LpSolution(LpStatus.INFEASIBLE)
        # Drive remaining artificials out of the basis or drop redundant rows.
        keep: list[int] = []
        for i in range(len(rows)):
            if basis[i] < ncols:
                keep.append(i)
                continue
            pivot_col = next(
                (j for j in range(ncols) if rows[i][j] != 0),
                -1,
            )
            if pivot_col < 0:
                continue  # redundant constraint
            dummy = [ZERO] * (total_cols + 1)
            _pivot(rows, dummy, i, pivot_col)
            basis[i] = pivot_col
            keep.append(i)
        rows = [rows[i] for i in keep]
        basis = [basis[i] for i in keep]

    # Phase 2 on the original columns only.
    rows = [row[:ncols] + [row[-1]] for row in rows]
    sign = Fraction(-1) if lp.maximize else Fraction(1)
    cost2 = [sign * c for c in lp.objective] + [ZERO] * n_slack
    status = _run_simplex(rows, basis, cost2, ncols)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED)

    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = rows[i][-1]
    value = sum((c * v for c, v in zip(lp.objective, x)), start=ZERO)
    return LpSolution(LpStatus.OPTIMAL, value, tuple(x))


@dataclass(frozen=True)
class HullQuery:
    """A rational point and the vertex list it is tested against."""

    point: tuple[Fraction, ...]
    vertices: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", tuple(Fraction(v) for v in self.point))
        object.__setattr__(
            self, "vertices", tuple(tuple(Fraction(v) for v in vert) for vert in self.vertices)
        )
        if not self.vertices:
            raise InvalidTable("hull query needs at least one vertex")
        dim = len(self.point)
        if any(len(v) != dim for v in self.vertices):
            raise InvalidTable("hull vertices must match the point's dimension")


@dataclass(frozen=True)
class HullResult:
    inside: bool
    weights: tuple[Fraction, ...] | None = None
    functional: tuple[Fraction, ...] | None = None
    separation: Fraction | None = None  # functional . point - max over vertices


def hull_membership(query: HullQuery, cap: int = HULL_VERTEX_CAP) -> HullResult:
    """Exact convex-hull membership by LP feasibility.

    Inside: returns convex weights reproducing the point.  Outside: returns a
    rational functional phi with phi . point strictly above phi . v for every
    vertex (checked exactly before returning).
    """
    n_verts = len(query.vertices)
    if n_verts > cap:
        raise CapExceeded(f"{n_verts} hull vertices exceed the cap {cap}")
    dim = len(query.point)

    eq_rows = []
    for j in range(dim):
        eq_rows.append((tuple(v[j] for v in query.vertices), query.point[j]))
    eq_rows.append((tuple(ONE for _ in range(n_verts)), ONE))
    feasibility = LinearProgram(
        objective=tuple(ZERO for _ in range(n_verts)),
        maximize=False,
        eq=tuple(eq_rows),
    )
    sol = lp_solve(feasibility)
    if sol.status is LpStatus.OPTIMAL:
        return HullResult(inside=True, weights=sol.x)

    # Separation LP: phi = phi_plus - phi_minus with |phi_j| <= 1, t free.
    # maximize phi . q - t  subject to  phi . v - t <= 0 for every vertex.
    n = 2 * dim + 2  # phi_plus, phi_minus, t_plus, t_minus
    objective = list(query.point) + [-v for v in query.point] + [Fraction(-1), ONE]
    le_rows = []
    for vert in query.vertices:
        le_rows.append((tuple(vert) + tuple(-v for v in vert) + (Fraction(-1), ONE), ZERO))
    for j in range(dim):
        box = [ZERO] * n
        box[j] = ONE
        box[dim + j] = ONE
        le_rows.append((tuple(box), ONE))
    sep = lp_solve(
        LinearProgram(objective=tuple(objective), maximize=True, le=tuple(le_rows))
    )
    if sep.status is not LpStatus.OPTIMAL or sep.value is None or sep.value <= 0:
        raise AssertionError("separation LP must have a positive optimum for an outside point")
    phi = tuple(sep.x[j] - sep.x[dim + j] for j in range(dim))
    at_point = sum((p * q for p, q in zip(phi, query.point)), start=ZERO)
    best_vertex = max(
        sum((p * v for p, v in zip(phi, vert)), start=ZERO) for vert in query.vertices
    )
    if at_point <= best_vertex:  # pragma: no cover - guarded by the LP optimum
        raise AssertionError("separating functional failed its exact strictness check")
    return HullResult(
        inside=False, functional=phi, separation=at_point - best_vertex
    )
