"""Shared oracles and random-instance generators for the test suite."""

import itertools

import numpy as np

from starverify import (
    HardSigmoid,
    HardTanh,
    Identity,
    Layer,
    LeakyReLU,
    Network,
    Polyhedron,
    ReLU,
    Star,
    UnitStep,
    apply_activation,
)
from starverify import lp


def brute_force_solve(objective, sense, poly, tol=1e-9):
    """LP oracle by basic-solution enumeration; None means infeasible.

    Only valid for bounded polyhedra (every optimum sits on a vertex).
    """
    C = poly.constraint_matrix
    d = poly.rhs
    m = poly.num_vars
    objective = np.asarray(objective, dtype=float)
    best = None
    for rows in itertools.combinations(range(C.shape[0]), m):
        A = C[list(rows)]
        b = d[list(rows)]
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        x = np.linalg.solve(A, b)
        if np.all(C @ x <= d + tol * (1.0 + np.abs(d))):
            v = float(objective @ x)
            if best is None:
                best = v
            else:
                best = min(best, v) if sense == "min" else max(best, v)
    return best


def random_bounded_polyhedron(rng, m, extra_rows=0):
    """Box of random size plus random cutting halfspaces; always bounded."""
    half = rng.uniform(0.5, 1.5, size=m)
    poly = Polyhedron.box(-half, half)
    if extra_rows:
        normals = rng.normal(size=(extra_rows, m))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = rng.uniform(-0.3, 1.2, size=extra_rows)
        poly = poly.with_rows(normals, offsets)
    return poly


def random_star(rng, n, m=None, extra_rows=2):
    """Random nonempty bounded star: the extra cuts always keep alpha = 0 feasible."""
    m = m if m is not None else n
    center = rng.uniform(-1.0, 1.0, size=n)
    basis = rng.normal(size=(n, m))
    half = rng.uniform(0.5, 1.5, size=m)
    poly = Polyhedron.box(-half, half)
    if extra_rows:
        normals = rng.normal(size=(extra_rows, m))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        poly = poly.with_rows(normals, rng.uniform(0.05, 1.2, size=extra_rows))
    return Star(center, basis, poly)


KIND_NAMES = ("relu", "leaky", "hardtanh", "hardsigmoid", "unitstep")


def random_kind(rng, name=None):
    name = name if name is not None else str(rng.choice(KIND_NAMES))
    if name == "relu":
        return ReLU()
    if name == "leaky":
        return LeakyReLU(float(rng.uniform(0.05, 0.9)))
    if name == "hardtanh":
        return HardTanh(float(rng.uniform(-1.5, -0.1)), float(rng.uniform(0.1, 1.5)))
    if name == "hardsigmoid":
        return HardSigmoid(float(rng.uniform(-1.5, -0.1)), float(rng.uniform(0.1, 1.5)))
    if name == "unitstep":
        lo = float(rng.uniform(-0.5, 0.2))
        return UnitStep(float(rng.uniform(-0.4, 0.4)), lo, lo + float(rng.uniform(0.1, 1.0)))
    raise ValueError(name)


def random_network(rng, input_dim=None, max_hidden=3, max_width=6, kinds=KIND_NAMES,
                   output_dim=None):
    input_dim = input_dim if input_dim is not None else int(rng.integers(1, 4))
    n_hidden = int(rng.integers(1, max_hidden + 1))
    sizes = [input_dim]
    sizes += [int(rng.integers(1, max_width + 1)) for _ in range(n_hidden)]
    sizes.append(output_dim if output_dim is not None else int(rng.integers(1, 4)))
    layers = []
    for i in range(1, len(sizes)):
        w = rng.normal(size=(sizes[i], sizes[i - 1])) / np.sqrt(sizes[i - 1])
        b = rng.normal(scale=0.3, size=sizes[i])
        kind = random_kind(rng, str(rng.choice(list(kinds)))) if i < len(sizes) - 1 else Identity()
        layers.append(Layer(w, b, kind))
    return Network(tuple(layers), input_dim)


def random_input_box(rng, n):
    center = rng.uniform(-0.5, 0.5, size=n)
    half = rng.uniform(0.2, 1.0, size=n)
    return center - half, center + half


def box_inputs(rng, lower, upper, count):
    return rng.uniform(lower, upper, size=(count, lower.shape[0]))


# --------------------------------------------------------------------------
# Fast membership certificates for box-input reach results.
#
# A box input star has zero center and identity basis, so the predicate
# point of a concrete input x0 is x0 itself.  Exact analysis never extends
# the predicate, and each over-approximation variable holds the activation's
# output at its neuron, so explicit feasible predicate points can be written
# down and checked with one matrix product; anything that fails the fast
# path falls back to the LP membership test.


def _slack_ok(poly, alphas, tol):
    slack = poly.constraint_matrix @ alphas.T - poly.rhs[:, None]
    return np.all(slack <= tol * (1.0 + np.abs(poly.rhs))[:, None], axis=0)


def exact_union_membership(result, outputs, x0, tol=1e-6):
    """For each input row, certify that its output lies in some exact star."""
    n_points = x0.shape[0]
    covered = np.zeros(n_points, dtype=bool)
    for star in result.output_stars:
        todo = ~covered
        if not todo.any():
            break
        ok = _slack_ok(star.predicate, x0[todo], tol)
        if ok.any():
            idx = np.nonzero(todo)[0][ok]
            images = star.center + x0[idx] @ star.basis.T
            close = np.max(np.abs(images - outputs[idx]), axis=1) <= tol
            covered[idx[close]] = True
    missing = np.nonzero(~covered)[0]
    still = [
        i
        for i in missing
        if not any(s.contains_point(outputs[i], tol=tol) for s in result.output_stars)
    ]
    return np.array(still, dtype=int)


def approx_alpha_witness(net, result, x0):
    """Extended predicate points certifying membership in the overapprox star.

    Returns (alphas, outputs): each alpha row is the input followed by the
    concrete post-activation value of every relaxed neuron in order.
    """
    x = np.asarray(x0, dtype=float)
    extras = []
    relaxed = list(result.relaxed_neurons)
    ri = 0
    for li, layer in enumerate(net.layers):
        pre = x @ layer.weights.T + layer.bias
        post = apply_activation(layer.activation, pre)
        while ri < len(relaxed) and relaxed[ri][0] == li:
            extras.append(post[:, relaxed[ri][1]])
            ri += 1
        x = post
    assert ri == len(relaxed)
    alphas = np.column_stack([x0] + extras) if extras else np.asarray(x0, dtype=float)
    return alphas, x


def approx_membership(net, result, x0, outputs, tol=1e-6):
    """Indices of inputs whose outputs are NOT certified inside the approx star."""
    star = result.output_stars[0]
    alphas, replay_out = approx_alpha_witness(net, result, x0)
    ok = _slack_ok(star.predicate, alphas, tol)
    images = star.center + alphas @ star.basis.T
    ok &= np.max(np.abs(images - outputs), axis=1) <= tol
    ok &= np.max(np.abs(replay_out - outputs), axis=1) <= tol
    missing = np.nonzero(~ok)[0]
    still = [i for i in missing if not star.contains_point(outputs[i], tol=tol)]
    return np.array(still, dtype=int)


# --------------------------------------------------------------------------
# 2-D region comparison for relaxation constraint sets.


def region_poly(rows):
    rows = np.asarray(rows, dtype=float)
    return Polyhedron(rows[:, :2], rows[:, 2])


def region_contained(rows_inner, rows_outer, tol=1e-9):
    """True iff region(rows_inner) is a subset of region(rows_outer).

    Checked by maximizing each outer row over the inner region; an unbounded
    support in a constrained direction means the inner region sticks out.
    """
    inner = region_poly(rows_inner)
    for ax, ay, rhs in np.asarray(rows_outer, dtype=float):
        out = lp.solve(np.array([ax, ay]), "max", inner)
        if out.status is lp.LpStatus.INFEASIBLE:
            return True
        if out.status is lp.LpStatus.UNBOUNDED:
            return False
        if out.value > rhs + tol:
            return False
    return True


def regions_equal(rows_a, rows_b, tol=1e-9):
    return region_contained(rows_a, rows_b, tol) and region_contained(rows_b, rows_a, tol)
