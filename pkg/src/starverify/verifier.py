"""Safety verdicts, counter input sets and local robustness checks.

A reachable set is safe when every output star misses every unsafe region
(each region is a conjunction of halfspaces; a disjunctive specification is
a list of regions).  A nonempty intersection proves unsafety only for the
exact analysis; with the over-approximation it yields Unknown.  For exact
violations the shared predicate space lets us read off the complete counter
input set: every point of it provably drives the network into the region.
"""

from dataclasses import dataclass, field

import numpy as np

from . import lp
from .lp import LpStatus
from .reachability import reach_approx, reach_exact, DEFAULT_TIMEOUT
from .star import Star

SAFE = "Safe"
UNSAFE = "Unsafe"
UNKNOWN = "Unknown"

ROBUST_TRUE = "True"
ROBUST_FALSE = "False"
ROBUST_INCONCLUSIVE = "Inconclusive"

# Decision threshold for single-output binary heads (sonar-style pipelines).
DEFAULT_LABEL_THRESHOLD = 0.5

_DOMINANCE_TOL = 1e-9


@dataclass
class Verdict:
    status: str
    counter_input_stars: list = field(default_factory=list)
    violated_regions: list = field(default_factory=list)


@dataclass
class StarLabelInfo:
    """Per-star labelling evidence.

    margins[e] is the maximum of output_e - output_label over the star (or
    label - e under the 'min' rule); None entries mean the LP was unbounded.
    output_interval carries the single-output bounds when that rule applied.
    """

    label_decided: bool
    margins: list = None
    output_interval: tuple = None


@dataclass
class RobustnessResult:
    status: str
    star_info: list = field(default_factory=list)
    reach: object = None  # the underlying ReachResult


def _clip_star_to_region(star, region):
    if region.num_vars != star.dim:
        raise ValueError(
            f"unsafe region has dimension {region.num_vars}, output stars have {star.dim}"
        )
    clipped = star
    for row, rhs in zip(region.constraint_matrix, region.rhs):
        clipped = clipped.intersect_halfspace(row, rhs)
    return clipped


def check_safety(result, unsafe_regions):
    """Verdict for a reach result against a list of unsafe H-regions.

    All intersections empty -> Safe.  Any nonempty intersection is Unsafe for
    the exact method (with the complete counter input set per violating
    star/region pair) and Unknown for the over-approximate method.
    """
    hits = []
    counters = []
    for star in result.output_stars:
        for ri, region in enumerate(unsafe_regions):
            clipped = _clip_star_to_region(star, region)
            if clipped.is_empty():
                continue
            hits.append(ri)
            if result.method == "exact":
                counters.append(_counter_from_clipped(clipped))
    if not hits:
        return Verdict(SAFE)
    violated = sorted(set(hits))
    if result.method == "exact":
        return Verdict(UNSAFE, counter_input_stars=counters, violated_regions=violated)
    return Verdict(UNKNOWN, violated_regions=violated)


def _counter_from_clipped(clipped):
    if clipped.anchor is None:
        raise ValueError(
            "counter input sets require the anchor of an exact-analysis star"
        )
    anchor = clipped.anchor
    return Star(anchor.center, anchor.basis, clipped.predicate, anchor=anchor)


def counter_input_set(violating, unsafe_region):
    """Complete counter input set for an exact-analysis star hitting a region.

    The region's halfspaces are mapped into predicate space through the
    output star's center/basis and conjoined with its predicate; the result
    reuses the anchor's center/basis, so it lives in input space.  Every
    point of it is a network input whose output lies in the unsafe region.
    Sound only for exact-analysis stars (predicate shared with the input).
    """
    if violating.anchor is None:
        raise ValueError("counter input sets require the anchor of an exact-analysis star")
    return _counter_from_clipped(_clip_star_to_region(violating, unsafe_region))


# --------------------------------------------------------------------------
# Local adversarial robustness


def _star_carries_label(star, label, label_rule, threshold):
    """Decide whether every point of the star gets the expected label."""
    n_out = star.dim
    if n_out == 1:
        lower, upper = star.dim_bounds(0)
        if lower >= threshold:
            decided_label = 1
        elif upper < threshold:
            decided_label = 0
        else:
            decided_label = None
        info = StarLabelInfo(decided_label == label, output_interval=(lower, upper))
        return info
    margins = []
    decided = True
    for e in range(n_out):
        if e == label:
            margins.append(0.0)
            continue
        if label_rule == "max":
            row = star.basis[e] - star.basis[label]
            shift = star.center[e] - star.center[label]
        else:  # "min": the expected label must score lowest
            row = star.basis[label] - star.basis[e]
            shift = star.center[label] - star.center[e]
        out = lp.solve(row, "max", star.predicate)
        if out.status is LpStatus.UNBOUNDED:
            margins.append(None)
            decided = False
            continue
        margin = float(shift) + out.value
        margins.append(margin)
        if margin > _DOMINANCE_TOL:
            decided = False
    return StarLabelInfo(decided, margins=margins)


def check_local_robustness(
    net,
    x,
    delta,
    expected_label,
    method="exact",
    label_rule="max",
    threshold=DEFAULT_LABEL_THRESHOLD,
    timeout=DEFAULT_TIMEOUT,
    threads=1,
):
    """Check delta-local robustness of the network at input x.

    Builds the input box [x - delta, x + delta] and runs reachability.  For
    multi-output networks a star carries a label when the label dominates
    every other output over the whole star (pairwise LPs; label_rule picks
    the argmax or argmin convention).  Single-output networks use the
    threshold rule: label 1 iff the output's lower bound >= threshold,
    label 0 iff its upper bound < threshold.

    Exact method: True iff every output star carries expected_label, else
    False.  Over-approximate method: True if the single star carries it,
    otherwise Inconclusive (never False, by soundness).
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if label_rule not in ("max", "min"):
        raise ValueError(f"label_rule must be 'max' or 'min', got {label_rule!r}")
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != net.input_dim:
        raise ValueError(f"input has length {x.shape[0]}, network expects {net.input_dim}")
    box = Star.from_box(x - delta, x + delta)
    if method == "exact":
        result = reach_exact(net, box, timeout=timeout, threads=threads)
    elif method == "overapprox":
        result = reach_approx(net, box, timeout=timeout)
    else:
        raise ValueError(f"method must be 'exact' or 'overapprox', got {method!r}")

    infos = [
        _star_carries_label(star, expected_label, label_rule, threshold)
        for star in result.output_stars
    ]
    all_carry = all(info.label_decided for info in infos)
    if method == "exact":
        status = ROBUST_TRUE if all_carry else ROBUST_FALSE
    else:
        status = ROBUST_TRUE if all_carry else ROBUST_INCONCLUSIVE
    return RobustnessResult(status, star_info=infos, reach=result)
