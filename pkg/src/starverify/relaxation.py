"""Per-neuron exact splitting and convex relaxation of piece-wise linear activations.

Supported kinds: ReLU, leaky ReLU, hard tanh, hard sigmoid, unit step and
identity, all with parameters.  Exact analysis splits a star into one branch
per activation piece whose input region is nonempty, applying the piece's
per-dimension affine transform to each branch.  Over-approximate analysis
keeps a single star: when the dimension's range straddles a breakpoint it
introduces one fresh predicate variable constrained to the closed convex
hull of the activation graph over that range (with recession rays when the
range is unbounded).  All relaxations come out of one hull engine rather
than per-kind constraint writers; the hull of the graph is the tightest
convex linear relaxation, so the per-case closed forms serve as test
oracles instead of production code.
"""

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .lp import Polyhedron
from .star import Star


# --------------------------------------------------------------------------
# Activation kinds


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class LeakyReLU:
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"leaky ReLU scaling must lie in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class HardTanh:
    v_min: float = -1.0
    v_max: float = 1.0

    def __post_init__(self):
        if not self.v_max >= self.v_min:
            raise ValueError(f"hard tanh needs v_max >= v_min, got [{self.v_min}, {self.v_max}]")


@dataclass(frozen=True)
class HardSigmoid:
    v_min: float
    v_max: float

    def __post_init__(self):
        if not self.v_max > self.v_min:
            raise ValueError(
                f"hard sigmoid needs v_max > v_min, got [{self.v_min}, {self.v_max}]"
            )


@dataclass(frozen=True)
class UnitStep:
    val: float = 0.0
    r_min: float = 0.0
    r_max: float = 1.0

    def __post_init__(self):
        if not self.r_max >= self.r_min:
            raise ValueError(f"unit step needs r_max >= r_min, got [{self.r_min}, {self.r_max}]")


ActivationKind = Identity | ReLU | LeakyReLU | HardTanh | HardSigmoid | UnitStep


@dataclass(frozen=True)
class Piece:
    """One linear piece y = slope * x + intercept on [lo, hi]."""

    lo: float
    hi: float
    slope: float
    intercept: float

    def value(self, x):
        return self.slope * x + self.intercept


def pieces(kind):
    """The linear pieces of the activation, ordered left to right."""
    if isinstance(kind, Identity):
        return (Piece(-math.inf, math.inf, 1.0, 0.0),)
    if isinstance(kind, ReLU):
        return (Piece(-math.inf, 0.0, 0.0, 0.0), Piece(0.0, math.inf, 1.0, 0.0))
    if isinstance(kind, LeakyReLU):
        return (Piece(-math.inf, 0.0, kind.gamma, 0.0), Piece(0.0, math.inf, 1.0, 0.0))
    if isinstance(kind, HardTanh):
        lo = Piece(-math.inf, kind.v_min, 0.0, kind.v_min)
        hi = Piece(kind.v_max, math.inf, 0.0, kind.v_max)
        if kind.v_min == kind.v_max:
            return (lo, hi)
        return (lo, Piece(kind.v_min, kind.v_max, 1.0, 0.0), hi)
    if isinstance(kind, HardSigmoid):
        k = 1.0 / (kind.v_max - kind.v_min)
        return (
            Piece(-math.inf, kind.v_min, 0.0, 0.0),
            Piece(kind.v_min, kind.v_max, k, -kind.v_min * k),
            Piece(kind.v_max, math.inf, 0.0, 1.0),
        )
    if isinstance(kind, UnitStep):
        # the left piece does not attain its value at the separator itself
        return (
            Piece(-math.inf, kind.val, 0.0, kind.r_min),
            Piece(kind.val, math.inf, 0.0, kind.r_max),
        )
    raise TypeError(f"unsupported activation kind: {kind!r}")


def scalar_eval(kind, x):
    """Exact scalar semantics of the activation at x."""
    if isinstance(kind, Identity):
        return float(x)
    if isinstance(kind, ReLU):
        return max(0.0, float(x))
    if isinstance(kind, LeakyReLU):
        return max(kind.gamma * x, float(x))
    if isinstance(kind, HardTanh):
        return float(min(max(x, kind.v_min), kind.v_max))
    if isinstance(kind, HardSigmoid):
        return float(min(max((x - kind.v_min) / (kind.v_max - kind.v_min), 0.0), 1.0))
    if isinstance(kind, UnitStep):
        return kind.r_max if x >= kind.val else kind.r_min
    raise TypeError(f"unsupported activation kind: {kind!r}")


def apply_activation(kind, x):
    """Vectorized scalar semantics over an ndarray."""
    x = np.asarray(x, dtype=float)
    if isinstance(kind, Identity):
        return x
    if isinstance(kind, ReLU):
        return np.maximum(x, 0.0)
    if isinstance(kind, LeakyReLU):
        return np.maximum(kind.gamma * x, x)
    if isinstance(kind, HardTanh):
        return np.clip(x, kind.v_min, kind.v_max)
    if isinstance(kind, HardSigmoid):
        return np.clip((x - kind.v_min) / (kind.v_max - kind.v_min), 0.0, 1.0)
    if isinstance(kind, UnitStep):
        return np.where(x >= kind.val, kind.r_max, kind.r_min)
    raise TypeError(f"unsupported activation kind: {kind!r}")


@dataclass(frozen=True)
class PiecewiseSpec:
    """Uniform description of an activation: breakpoints plus end slopes.

    Each breakpoint is (x, y_left, y_right); y_left != y_right only for the
    unit step.  Evaluation follows the right-closed convention (at a
    breakpoint the value is y_right), matching scalar_eval.
    """

    breakpoints: tuple
    slope_neg_inf: float
    slope_pos_inf: float

    @classmethod
    def from_kind(cls, kind):
        ps = pieces(kind)
        bps = []
        for left, right in itertools.pairwise(ps):
            x = left.hi
            bps.append((x, left.value(x), right.value(x)))
        return cls(tuple(bps), ps[0].slope, ps[-1].slope)

    def eval(self, x):
        bps = self.breakpoints
        if not bps:
            return self.slope_pos_inf * x  # identity: single line through the origin
        if x < bps[0][0]:
            x0, y_left, _ = bps[0]
            return y_left + self.slope_neg_inf * (x - x0)
        if x >= bps[-1][0]:
            x0, _, y_right = bps[-1]
            return y_right + self.slope_pos_inf * (x - x0)
        for (x0, _, y0), (x1, y1, _) in itertools.pairwise(bps):
            if x0 <= x < x1:
                return y0 + (x - x0) * (y1 - y0) / (x1 - x0)
        raise AssertionError("breakpoint search fell through")


# --------------------------------------------------------------------------
# Piece selection


def _values_close(a, b):
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def _live_pieces(kind, lower, upper):
    """Pieces contributing a branch when the dimension ranges over [lower, upper].

    A piece is live when its overlap with the range has positive length.  A
    zero-length overlap (range endpoint exactly on a breakpoint) contributes
    only if the activation actually attains that piece's value there and no
    positively-overlapping piece already produces the same value, i.e. only
    across the unit-step discontinuity.
    """
    ps = pieces(kind)
    if lower == upper:
        for p in reversed(ps):  # rightmost containing piece matches scalar_eval
            if p.lo <= lower <= p.hi:
                return [p]
        raise AssertionError("activation pieces must cover the real line")
    positive = []
    boundary = []
    for p in ps:
        lo = max(lower, p.lo)
        hi = min(upper, p.hi)
        if lo > hi:
            continue
        if lo < hi:
            positive.append(p)
        else:
            boundary.append((p, lo))
    live = list(positive)
    for p, x0 in boundary:
        if not _values_close(p.value(x0), scalar_eval(kind, x0)):
            continue
        if any(_values_close(q.value(x0), p.value(x0)) for q in positive):
            continue
        live.append(p)
    live.sort(key=lambda p: (p.lo, p.hi))
    return live


# --------------------------------------------------------------------------
# Exact analysis


def exact_step(star, j, kind):
    """Apply the activation to dimension j exactly, splitting per live piece.

    Returns 1-3 nonempty stars whose union is the image of the star under
    the activation on dimension j (the unit-step separator point is shared
    by both branches, a measure-zero over-inclusion).  Branches are ordered
    lowest piece first.  Predicate variable count never changes.
    """
    if isinstance(kind, Identity):
        return [star]
    if not 0 <= j < star.dim:
        raise IndexError(f"dimension {j} out of range for star of dimension {star.dim}")
    lower, upper = star.dim_bounds(j)  # raises EmptyStarError on an empty star
    out = []
    n = star.dim
    for p in _live_pieces(kind, lower, upper):
        branch = star
        if p.lo > lower:
            h = np.zeros(n)
            h[j] = -1.0
            branch = branch.intersect_halfspace(h, -p.lo)
        if p.hi < upper:
            h = np.zeros(n)
            h[j] = 1.0
            branch = branch.intersect_halfspace(h, p.hi)
        out.append(branch.scale_dim(j, p.slope, p.intercept))
    return out


# --------------------------------------------------------------------------
# Hull engine


def _graph_generators(kind, lower, upper):
    """V-representation (points, rays) of the activation graph over [lower, upper]."""
    points = []
    rays = []
    for p in _live_pieces(kind, lower, upper):
        lo = max(lower, p.lo)
        hi = min(upper, p.hi)
        if lo == -math.inf:
            rays.append((-1.0, -p.slope))
        else:
            points.append((lo, p.value(lo)))
        if hi == math.inf:
            rays.append((1.0, p.slope))
        else:
            points.append((hi, p.value(hi)))
    seen = set()
    uniq = []
    for pt in points:
        if pt not in seen:
            seen.add(pt)
            uniq.append(pt)
    return uniq, rays


def _facet_rows(points, rays):
    """H-representation rows (a_x, a_y, rhs) of conv(points) + cone(rays) in 2-D.

    Brute-force facet enumeration over homogenized generator pairs; fine for
    the <= 6 generators an activation graph produces.  Degenerate (segment)
    hulls yield the two opposite halfspaces of their carrier line.
    """
    gens = np.array([(x, y, 1.0) for x, y in points] + [(dx, dy, 0.0) for dx, dy in rays])
    rows = []
    for i, j in itertools.combinations(range(gens.shape[0]), 2):
        normal = np.cross(gens[i], gens[j])
        if np.abs(normal).max() <= 1e-14:
            continue
        dots = gens @ normal
        tols = 1e-9 * (1.0 + np.abs(normal).max() * np.abs(gens).max(axis=1))
        for sign in (1.0, -1.0):
            cand = sign * normal
            if np.all(sign * dots <= tols):
                if max(abs(cand[0]), abs(cand[1])) <= 1e-12:
                    continue  # pure homogenization facet, no x/y content
                rows.append((cand[0], cand[1], -cand[2]))
    normalized = []
    seen = set()
    for ax, ay, rhs in rows:
        scale = max(abs(ax), abs(ay))
        ax, ay, rhs = ax / scale, ay / scale, rhs / scale
        key = (round(ax, 12), round(ay, 12), round(rhs, 12))
        if key not in seen:
            seen.add(key)
            normalized.append((ax, ay, rhs))
    normalized.sort()
    return normalized


def hull_region(kind, lower, upper):
    """Closed convex hull of {(x, f(x)) : x in [lower, upper]} as H-rows.

    Returns rows (a_x, a_y, rhs) meaning a_x * x + a_y * y <= rhs, including
    explicit range rows for finite ends.  Recession rays stand in for
    infinite ends, reproducing the unbounded-input relaxation rules.
    """
    if lower > upper:
        raise ValueError(f"need lower <= upper, got [{lower}, {upper}]")
    if lower == upper:
        y = scalar_eval(kind, lower)
        return [
            (-1.0, 0.0, -lower),
            (0.0, -1.0, -y),
            (0.0, 1.0, y),
            (1.0, 0.0, lower),
        ]
    points, rays = _graph_generators(kind, lower, upper)
    rows = _facet_rows(points, rays)
    if lower != -math.inf:
        rows.append((-1.0, 0.0, -lower))
    if upper != math.inf:
        rows.append((1.0, 0.0, upper))
    rows.sort()
    return rows


# --------------------------------------------------------------------------
# Over-approximate analysis


def approx_step(star, j, kind):
    """Apply the activation to dimension j over-approximately; single star out.

    Inside a single linear piece this is the exact transform with no new
    variable.  Otherwise dimension j is projected out, a fresh predicate
    variable linked through generator e_j takes its place, and the predicate
    gains the hull constraints of the activation graph over the dimension's
    exact range.  The anchor gains a zero column so it stays consistent.
    """
    if isinstance(kind, Identity):
        return star
    if not 0 <= j < star.dim:
        raise IndexError(f"dimension {j} out of range for star of dimension {star.dim}")
    lower, upper = star.dim_bounds(j)
    if lower == upper:
        return star.scale_dim(j, 0.0, scalar_eval(kind, lower))
    live = _live_pieces(kind, lower, upper)
    if len(live) == 1:
        p = live[0]
        return star.scale_dim(j, p.slope, p.intercept)

    hull = hull_region(kind, lower, upper)
    m = star.num_predicate_vars
    v_row = star.basis[j]
    c_j = float(star.center[j])
    new_rows = []
    new_rhs = []
    for a_x, a_y, rhs in hull:
        if abs(a_y) <= 1e-12:
            continue  # pure range row, already implied by the predicate
        row = np.concatenate([a_x * v_row, [a_y]])
        new_rows.append(row)
        new_rhs.append(rhs - a_x * c_j)

    old = star.predicate
    mat = np.zeros((old.num_constraints + len(new_rows), m + 1))
    mat[: old.num_constraints, :m] = old.constraint_matrix
    mat[old.num_constraints :] = np.array(new_rows)
    rhs = np.concatenate([old.rhs, np.array(new_rhs)])

    center = star.center.copy()
    center[j] = 0.0
    basis = np.zeros((star.dim, m + 1))
    basis[:, :m] = star.basis
    basis[j, :m] = 0.0
    basis[j, m] = 1.0
    anchor = star.anchor.extended() if star.anchor is not None else None
    return Star(center, basis, Polyhedron(mat, rhs), anchor=anchor)


# --------------------------------------------------------------------------
# Layer-level folds


class DeadlineExceeded(Exception):
    """Raised when a layer fold runs past its wall-clock deadline."""


def _check_deadline(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise DeadlineExceeded


def layer_step_exact(stars, kind, mapper=None, deadline=None):
    """Fold exact_step over every dimension of every star, depth-first.

    The output order is deterministic (lowest branch first per dimension).
    mapper is a map-like callable used across the per-dimension worklist so
    callers can fan the independent jobs out to worker threads.
    """
    stars = list(stars)
    if isinstance(kind, Identity) or not stars:
        return stars
    n = stars[0].dim
    if any(s.dim != n for s in stars):
        raise ValueError("all stars in one layer step must share the same dimension")
    if mapper is None:
        mapper = map
    for j in range(n):
        _check_deadline(deadline)
        chunks = mapper(lambda s, _j=j: exact_step(s, _j, kind), stars)
        stars = [branch for chunk in chunks for branch in chunk]
    return stars


def layer_step_approx(star, kind, deadline=None):
    """Fold approx_step over every dimension; always a single star."""
    if isinstance(kind, Identity):
        return star
    for j in range(star.dim):
        _check_deadline(deadline)
        star = approx_step(star, j, kind)
    return star
