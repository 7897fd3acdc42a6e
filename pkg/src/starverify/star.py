"""Star sets: affine images of H-polyhedra.

A star <c, V, P> represents {c + V a : a in P} with center c in R^n,
generator matrix V in R^(n x m) and predicate polyhedron P over R^m.  Stars
are closed under affine maps and halfspace cuts, which is what makes them a
good carrier for layer-by-layer network propagation.  Instances are
immutable after construction; per-dimension bounds are memoized under a lock
so stars can be shared between worker threads.
"""

import threading
from dataclasses import dataclass

import numpy as np

from . import lp
from .lp import LpStatus, Polyhedron


class EmptyStarError(ValueError):
    """An operation that requires a nonempty star was called on an empty one."""


@dataclass(frozen=True, eq=False)
class DimBounds:
    """Per-dimension interval [lower, upper]; infinities allowed."""

    lower: float
    upper: float

    def __iter__(self):
        return iter((self.lower, self.upper))


@dataclass(frozen=True, eq=False)
class InputAnchor:
    """The original input star (center, basis) in the shared predicate space.

    Exact propagation never changes the predicate dimension, so the anchor
    maps any feasible predicate point straight back to a network input; this
    is what makes counter-input-set construction a pure predicate operation.
    """

    center: np.ndarray
    basis: np.ndarray

    def extended(self):
        """Anchor with one zero generator column appended (new predicate var)."""
        basis = np.hstack([self.basis, np.zeros((self.basis.shape[0], 1))])
        return InputAnchor(self.center, basis)


class Star:
    def __init__(self, center, basis, predicate, anchor=None):
        center = np.asarray(center, dtype=float).ravel().copy()
        basis = np.atleast_2d(np.asarray(basis, dtype=float)).copy()
        if basis.shape[0] != center.shape[0]:
            raise ValueError(
                f"basis has {basis.shape[0]} rows but center has {center.shape[0]} entries"
            )
        if basis.shape[1] != predicate.num_vars:
            raise ValueError(
                f"basis has {basis.shape[1]} columns but predicate has "
                f"{predicate.num_vars} variables"
            )
        if anchor is not None and anchor.basis.shape[1] != predicate.num_vars:
            raise ValueError("anchor basis must share the predicate's variable count")
        center.flags.writeable = False
        basis.flags.writeable = False
        self.center = center
        self.basis = basis
        self.predicate = predicate
        self.anchor = anchor
        self._lock = threading.Lock()
        self._bounds = {}
        self._empty = None

    @property
    def dim(self):
        """State-space dimension n."""
        return self.center.shape[0]

    @property
    def num_predicate_vars(self):
        """Predicate-space dimension m."""
        return self.predicate.num_vars

    @classmethod
    def from_polyhedron(cls, poly):
        """Star with null center and identity basis representing the polyhedron."""
        n = poly.num_vars
        center = np.zeros(n)
        basis = np.eye(n)
        return cls(center, basis, poly, anchor=InputAnchor(center, basis))

    @classmethod
    def from_box(cls, lower, upper):
        return cls.from_polyhedron(Polyhedron.box(lower, upper))

    def affine_map(self, weights, bias):
        """Star of {Wx + b : x in self}; the predicate does not change."""
        W = np.atleast_2d(np.asarray(weights, dtype=float))
        b = np.asarray(bias, dtype=float).ravel()
        if W.shape[1] != self.dim:
            raise ValueError(f"weights have {W.shape[1]} columns, star has dimension {self.dim}")
        if b.shape[0] != W.shape[0]:
            raise ValueError(f"bias has length {b.shape[0]}, weights have {W.shape[0]} rows")
        return Star(W @ self.center + b, W @ self.basis, self.predicate, anchor=self.anchor)

    def intersect_halfspace(self, h, g):
        """Star of self intersected with {x : h.x <= g}.

        Only the predicate changes: it gains the row (h^T V) a <= g - h^T c.
        """
        h = np.asarray(h, dtype=float).ravel()
        if h.shape[0] != self.dim:
            raise ValueError(f"halfspace normal has length {h.shape[0]}, star dimension {self.dim}")
        row = h @ self.basis
        rhs = float(g) - float(h @ self.center)
        return Star(
            self.center,
            self.basis,
            self.predicate.with_rows(row, rhs),
            anchor=self.anchor,
        )

    def scale_dim(self, j, slope, intercept):
        """Star with dimension j replaced by slope * x_j + intercept.

        Covers the per-piece transforms of all supported activations: slope 0
        projects the dimension out and the intercept shifts the center.
        """
        center = self.center.copy()
        basis = self.basis.copy()
        center[j] = slope * center[j] + intercept
        basis[j, :] *= slope
        return Star(center, basis, self.predicate, anchor=self.anchor)

    def is_empty(self):
        """True iff the predicate is empty (the star represents no point)."""
        if self._empty is None:
            empty = not lp.is_feasible(self.predicate)
            with self._lock:
                self._empty = empty
        return self._empty

    def dim_bounds(self, i):
        """Exact [lower, upper] of dimension i over the star (two LPs, memoized)."""
        if not 0 <= i < self.dim:
            raise IndexError(f"dimension {i} out of range for star of dimension {self.dim}")
        with self._lock:
            cached = self._bounds.get(i)
        if cached is not None:
            return cached
        row = self.basis[i]
        lo_out = lp.solve(row, "min", self.predicate)
        if lo_out.status is LpStatus.INFEASIBLE:
            raise EmptyStarError("dim_bounds called on an empty star")
        hi_out = lp.solve(row, "max", self.predicate)
        ci = float(self.center[i])
        lower = -np.inf if lo_out.status is LpStatus.UNBOUNDED else ci + lo_out.value
        upper = np.inf if hi_out.status is LpStatus.UNBOUNDED else ci + hi_out.value
        bounds = DimBounds(lower, upper)
        with self._lock:
            self._bounds[i] = bounds
            self._empty = False
        return bounds

    def bounding_box(self):
        """(lower, upper) vectors over all dimensions."""
        lows = np.empty(self.dim)
        ups = np.empty(self.dim)
        for i in range(self.dim):
            lows[i], ups[i] = self.dim_bounds(i)
        return lows, ups

    def contains_point(self, x, tol=1e-7):
        """True iff some feasible a satisfies V a = x - c within tol per coordinate."""
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"point has length {x.shape[0]}, star dimension {self.dim}")
        delta = x - self.center
        sys = self.predicate.with_rows(
            np.vstack([self.basis, -self.basis]),
            np.concatenate([delta + tol, -delta + tol]),
        )
        return lp.is_feasible(sys)

    def sample_alphas(self, count, seed):
        """Deterministic feasible predicate points via hit-and-run from the Chebyshev center."""
        if count < 1:
            raise ValueError("count must be >= 1")
        m = self.num_predicate_vars
        ip = lp.interior_point(self.predicate)
        if ip is None:
            raise EmptyStarError("cannot sample an empty star")
        if m == 0:
            return np.zeros((count, 0))
        out = np.empty((count, m))
        out[0] = ip.point
        rng = np.random.default_rng(seed)
        C = self.predicate.constraint_matrix
        d = self.predicate.rhs
        current = ip.point.copy()
        slack_tol = 1e-12
        for k in range(1, count):
            for _ in range(3):  # a few sub-steps per returned sample for mixing
                direction = rng.standard_normal(m)
                norm = np.linalg.norm(direction)
                if norm == 0.0:
                    continue
                direction /= norm
                rates = C @ direction
                slack = d - C @ current
                t_hi = 1e6
                t_lo = -1e6
                pos = rates > slack_tol
                if pos.any():
                    t_hi = min(t_hi, float(np.min(slack[pos] / rates[pos])))
                neg = rates < -slack_tol
                if neg.any():
                    t_lo = max(t_lo, float(np.max(slack[neg] / rates[neg])))
                if t_hi < t_lo:
                    continue  # degenerate chord, stay put
                current = current + rng.uniform(t_lo, t_hi) * direction
            out[k] = current
        return out

    def sample_points(self, count, seed):
        """Deterministic points of the star; the first is the Chebyshev-center image."""
        alphas = self.sample_alphas(count, seed)
        return self.center + alphas @ self.basis.T

    def __repr__(self):
        return (
            f"Star(dim={self.dim}, predicate_vars={self.num_predicate_vars}, "
            f"constraints={self.predicate.num_constraints})"
        )
