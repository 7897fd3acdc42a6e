"""Dense linear programming over H-polyhedra.

Every geometric predicate in the library (emptiness, bounds, membership,
safety intersection) reduces to calls into this module.  The solver is a
self-contained two-phase tableau simplex: Dantzig pricing with a Bland's-rule
fallback against cycling, lowest-index tie-breaking everywhere, so results
are deterministic for fixed inputs.  Unboundedness is a first-class outcome
(with a recession ray), not an error.
"""

import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Constraint slack tolerance: a point x is accepted when Cx <= d + eps.
FEASIBILITY_TOL = 1e-9
# Objective agreement tolerance used by callers comparing optimal values.
OBJECTIVE_TOL = 1e-7

_PIVOT_TOL = 1e-10
_BLAND_AFTER = 2000

_call_lock = threading.Lock()
_call_count = 0


def lp_call_count():
    """Total number of solve() invocations so far (monotone, thread-safe)."""
    return _call_count


def _count_call():
    global _call_count
    with _call_lock:
        _call_count += 1


class LpNumericalError(RuntimeError):
    """The simplex exceeded its iteration budget; the result would be unreliable."""


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """H-representation constraint system {a : C a <= d} over m variables.

    m = 0 is permitted (the predicate space of a point star); such a
    polyhedron is nonempty iff every rhs entry is >= -eps.
    """

    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.constraint_matrix, dtype=float)
        vec = np.asarray(self.rhs, dtype=float).ravel()
        if mat.ndim == 1:
            mat = mat.reshape(1, -1) if mat.size else np.zeros((0, 0))
        if mat.ndim != 2:
            raise ValueError(f"constraint matrix must be 2-D, got shape {mat.shape}")
        if mat.shape[0] != vec.shape[0]:
            raise ValueError(
                f"constraint matrix has {mat.shape[0]} rows but rhs has {vec.shape[0]} entries"
            )
        mat = mat.copy()
        vec = vec.copy()
        mat.flags.writeable = False
        vec.flags.writeable = False
        object.__setattr__(self, "constraint_matrix", mat)
        object.__setattr__(self, "rhs", vec)

    @property
    def num_vars(self):
        return self.constraint_matrix.shape[1]

    @property
    def num_constraints(self):
        return self.constraint_matrix.shape[0]

    @classmethod
    def box(cls, lower, upper):
        """Axis-aligned box {lower <= x <= upper} as 2n constraint rows."""
        lo = np.asarray(lower, dtype=float).ravel()
        up = np.asarray(upper, dtype=float).ravel()
        if lo.shape != up.shape:
            raise ValueError("lower and upper must have the same length")
        if np.any(lo > up):
            raise ValueError("box has lower > upper")
        n = lo.shape[0]
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), np.concatenate([up, -lo]))

    def with_rows(self, rows, rhs):
        """New polyhedron with extra constraint rows appended."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if rows.shape[1] != self.num_vars:
            raise ValueError(
                f"appended rows have {rows.shape[1]} columns, expected {self.num_vars}"
            )
        return Polyhedron(
            np.vstack([self.constraint_matrix, rows]),
            np.concatenate([self.rhs, rhs]),
        )


@dataclass(frozen=True, eq=False)
class LpOutcome:
    """Result of one LP solve.

    value/witness are present iff OPTIMAL.  For UNBOUNDED, feasible_point is
    a feasible point and ray an improving recession direction (objective
    strictly improves along it).
    """

    status: LpStatus
    value: float = None
    witness: np.ndarray = None
    ray: np.ndarray = None
    feasible_point: np.ndarray = None


@dataclass(frozen=True, eq=False)
class InteriorPoint:
    point: np.ndarray
    radius: float
    on_boundary: bool


def _pivot(tab, basis, row, col):
    piv = tab[row] / tab[row, col]
    column = tab[:, col].copy()
    tab -= np.outer(column, piv)
    tab[row] = piv
    basis[row] = col


def _pivot_loop(tab, basis, allowed, iter_cap):
    """Run simplex pivots until optimal or unbounded.

    Returns ("optimal", None) or ("unbounded", entering_col).  Raises
    LpNumericalError if iter_cap is exceeded.
    """
    it = 0
    nrows = tab.shape[0] - 1
    while True:
        red = tab[-1, :-1]
        tol = 1e-9 * (1.0 + np.abs(red).max(initial=0.0))
        cand = (red < -tol) & allowed
        if not cand.any():
            return "optimal", None
        if it < _BLAND_AFTER:
            masked = np.where(cand, red, np.inf)
            col = int(np.argmin(masked))
        else:
            col = int(np.argmax(cand))  # Bland: first improving column
        column = tab[:nrows, col]
        pos = column > _PIVOT_TOL
        if not pos.any():
            return "unbounded", col
        rows_pos = np.nonzero(pos)[0]
        ratios = tab[:nrows, -1][rows_pos] / column[rows_pos]
        rmin = ratios.min()
        ties = rows_pos[ratios == rmin]
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, row, col)
        it += 1
        if it > iter_cap:
            raise LpNumericalError(
                f"simplex did not converge within {iter_cap} pivots; "
                "problem is numerically unstable"
            )


def _extract_x(tab, basis, n_real, m):
    z = np.zeros(n_real)
    vals = tab[:-1, -1]
    keep = basis < n_real
    z[basis[keep]] = vals[keep]
    return z[:m] - z[m : 2 * m]


def solve(objective, sense, poly, feas_tol=None):
    """Minimize or maximize objective . x over {x : Cx <= d}, x free.

    Returns an LpOutcome with status OPTIMAL, INFEASIBLE or UNBOUNDED.
    Deterministic: two calls with identical inputs yield identical outcomes.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    if feas_tol is None:
        feas_tol = FEASIBILITY_TOL
    obj = np.asarray(objective, dtype=float).ravel()
    m = poly.num_vars
    if obj.shape[0] != m:
        raise ValueError(f"objective has length {obj.shape[0]}, polyhedron has {m} variables")
    _count_call()

    A = poly.constraint_matrix
    d = poly.rhs
    p = A.shape[0]

    if m == 0:
        if p == 0 or np.all(d >= -feas_tol * (1.0 + np.abs(d))):
            return LpOutcome(LpStatus.OPTIMAL, value=0.0, witness=np.zeros(0))
        return LpOutcome(LpStatus.INFEASIBLE)
    if p == 0:
        if np.all(obj == 0.0):
            return LpOutcome(LpStatus.OPTIMAL, value=0.0, witness=np.zeros(m))
        ray = obj.copy() if sense == "max" else -obj
        return LpOutcome(LpStatus.UNBOUNDED, ray=ray, feasible_point=np.zeros(m))

    c = obj if sense == "min" else -obj

    # Standard form: [A  -A  I][u v s]^T = b with u, v, s >= 0 and x = u - v.
    n_real = 2 * m + p
    tab = np.empty((p + 1, n_real + 1))
    tab[:p, :m] = A
    tab[:p, m : 2 * m] = -A
    tab[:p, 2 * m : n_real] = np.eye(p)
    tab[:p, -1] = d
    flip = d < 0
    tab[:p][flip] *= -1.0

    basis = np.empty(p, dtype=np.intp)
    basis[~flip] = 2 * m + np.nonzero(~flip)[0]
    art_rows = np.nonzero(flip)[0]
    iter_cap = 5000 + 50 * (p + n_real)

    if art_rows.size:
        n_art = art_rows.size
        art = np.zeros((p + 1, n_art))
        art[art_rows, np.arange(n_art)] = 1.0
        tab = np.hstack([tab[:, :-1], art, tab[:, -1:]])
        basis[art_rows] = n_real + np.arange(n_art)
        cost = np.zeros(tab.shape[1])
        cost[n_real : n_real + n_art] = 1.0
        tab[-1] = cost - cost[basis] @ tab[:p]
        allowed = np.ones(tab.shape[1] - 1, dtype=bool)
        allowed[n_real:] = False
        status, _ = _pivot_loop(tab, basis, allowed, iter_cap)
        assert status == "optimal"  # phase-1 objective is bounded below by 0
        if -tab[-1, -1] > feas_tol * (1.0 + np.abs(d).max(initial=0.0)):
            return LpOutcome(LpStatus.INFEASIBLE)
        # Pivot remaining artificials out; all-zero rows are redundant.
        drop = []
        for r in np.nonzero(basis >= n_real)[0]:
            row = tab[r, :n_real]
            elig = np.nonzero(np.abs(row) > 1e-9)[0]
            if elig.size:
                _pivot(tab, basis, int(r), int(elig[0]))
            else:
                drop.append(int(r))
        if drop:
            keep = np.setdiff1d(np.arange(p), drop)
            tab = tab[np.concatenate([keep, [p]])]
            basis = basis[keep]
            p = basis.shape[0]
        tab = np.hstack([tab[:, :n_real], tab[:, -1:]])

    cost = np.zeros(n_real + 1)
    cost[:m] = c
    cost[m : 2 * m] = -c
    tab[-1] = cost - cost[basis] @ tab[:-1]
    allowed = np.ones(n_real, dtype=bool)
    status, col = _pivot_loop(tab, basis, allowed, iter_cap)

    if status == "unbounded":
        direction = np.zeros(n_real)
        direction[col] = 1.0
        direction[basis] = -tab[:-1, col]
        ray = direction[:m] - direction[m : 2 * m]
        point = _extract_x(tab, basis, n_real, m)
        return LpOutcome(LpStatus.UNBOUNDED, ray=ray, feasible_point=point)

    x = _extract_x(tab, basis, n_real, m)
    return LpOutcome(LpStatus.OPTIMAL, value=float(obj @ x), witness=x)


def is_feasible(poly, feas_tol=None):
    """True iff the polyhedron contains a point (phase-1 LP)."""
    if feas_tol is None:
        feas_tol = FEASIBILITY_TOL
    d = poly.rhs
    # x = 0 certifies feasibility without touching the simplex.
    if d.size == 0 or np.all(d >= -feas_tol * (1.0 + np.abs(d))):
        _count_call()
        return True
    out = solve(np.zeros(poly.num_vars), "min", poly, feas_tol=feas_tol)
    return out.status is not LpStatus.INFEASIBLE


def interior_point(poly, feas_tol=None, radius_cap=1e6):
    """Chebyshev center of the polyhedron (max-inradius LP).

    Returns InteriorPoint, or None when the polyhedron is empty.  If the
    polyhedron has empty interior the returned point is feasible and flagged
    on_boundary.  The inradius is capped at radius_cap so unbounded
    polyhedra still yield a deterministic point.
    """
    m = poly.num_vars
    if m == 0:
        if is_feasible(poly, feas_tol=feas_tol):
            return InteriorPoint(np.zeros(0), 0.0, True)
        return None
    A = poly.constraint_matrix
    d = poly.rhs
    norms = np.linalg.norm(A, axis=1)
    mat = np.zeros((A.shape[0] + 2, m + 1))
    mat[: A.shape[0], :m] = A
    mat[: A.shape[0], m] = norms
    mat[-2, m] = -1.0  # r >= 0
    mat[-1, m] = 1.0  # r <= cap
    rhs = np.concatenate([d, [0.0, radius_cap]])
    out = solve(
        np.concatenate([np.zeros(m), [1.0]]), "max", Polyhedron(mat, rhs), feas_tol=feas_tol
    )
    if out.status is LpStatus.INFEASIBLE:
        return None
    assert out.status is LpStatus.OPTIMAL  # the radius cap rules out unboundedness
    point = out.witness[:m]
    radius = float(out.witness[m])
    return InteriorPoint(point, radius, radius <= 1e-9)
