"""Safety verdicts, counter input sets, and local robustness."""

import numpy as np
import pytest

from starverify import (
    HardSigmoid,
    Identity,
    Layer,
    Network,
    Polyhedron,
    ReLU,
    Star,
    UnitStep,
    check_local_robustness,
    check_safety,
    counter_input_set,
    reach_approx,
    reach_exact,
)
from helpers import random_input_box, random_network


def single_layer(w, b, kind):
    return Network((Layer(w, b, kind),), np.atleast_2d(np.asarray(w)).shape[1])


def halfspace_ge(dim, i, bound):
    """Unsafe region {y : y_i >= bound} in H-form."""
    row = np.zeros(dim)
    row[i] = -1.0
    return Polyhedron(row.reshape(1, -1), [-bound])


def test_safe_when_region_unreachable():
    net = single_layer(np.eye(1), np.zeros(1), Identity())
    res = reach_exact(net, Star.from_box([0.0], [1.0]))
    verdict = check_safety(res, [halfspace_ge(1, 0, 2.0)])
    assert verdict.status == "Safe"
    assert verdict.counter_input_stars == []
    assert verdict.violated_regions == []


def test_unsafe_with_intersection_box():
    net = single_layer(np.eye(1), np.zeros(1), Identity())
    res = reach_exact(net, Star.from_box([0.0], [3.0]))
    verdict = check_safety(res, [halfspace_ge(1, 0, 2.0)])
    assert verdict.status == "Unsafe"
    assert verdict.violated_regions == [0]
    lo, up = verdict.counter_input_stars[0].bounding_box()
    np.testing.assert_allclose([lo[0], up[0]], [2.0, 3.0], atol=1e-9)


def test_overapprox_hit_is_unknown():
    net = single_layer(np.eye(1), np.zeros(1), Identity())
    res = reach_approx(net, Star.from_box([0.0], [3.0]))
    verdict = check_safety(res, [halfspace_ge(1, 0, 2.0)])
    assert verdict.status == "Unknown"
    assert verdict.counter_input_stars == []


def test_counter_input_identity_network():
    net = single_layer(np.eye(1), np.zeros(1), Identity())
    res = reach_exact(net, Star.from_box([-1.0], [1.0]))
    counter = counter_input_set(res.output_stars[0], halfspace_ge(1, 0, 0.5))
    lo, up = counter.bounding_box()
    np.testing.assert_allclose([lo[0], up[0]], [0.5, 1.0], atol=1e-9)


def test_counter_input_relu_positive_branch():
    net = single_layer(np.eye(1), np.zeros(1), ReLU())
    res = reach_exact(net, Star.from_box([-1.0], [1.0]))
    region = halfspace_ge(1, 0, 0.5)
    verdict = check_safety(res, [region])
    assert verdict.status == "Unsafe"
    assert len(verdict.counter_input_stars) == 1
    lo, up = verdict.counter_input_stars[0].bounding_box()
    np.testing.assert_allclose([lo[0], up[0]], [0.5, 1.0], atol=1e-9)


def test_counter_input_samples_falsify():
    rng = np.random.default_rng(606)
    net = random_network(rng, input_dim=2, max_hidden=2, max_width=4, output_dim=2)
    lower, upper = random_input_box(rng, 2)
    res = reach_exact(net, Star.from_box(lower, upper))
    # cut through the middle of the union's range so some star is hit
    ups = [s.dim_bounds(0).upper for s in res.output_stars]
    los = [s.dim_bounds(0).lower for s in res.output_stars]
    bound = (max(ups) + min(los)) / 2.0
    region = halfspace_ge(2, 0, bound)
    verdict = check_safety(res, [region])
    assert verdict.status == "Unsafe"
    for counter in verdict.counter_input_stars:
        pts = counter.sample_points(100, seed=17)
        outs = net.forward(pts)
        assert np.all(outs[:, 0] >= bound - 1e-6)


def test_counter_input_requires_anchor():
    star = Star(np.zeros(1), np.eye(1), Polyhedron.box([-1.0], [1.0]))  # no anchor
    with pytest.raises(ValueError):
        counter_input_set(star, halfspace_ge(1, 0, 0.0))


def test_region_dimension_mismatch():
    net = single_layer(np.eye(2), np.zeros(2), Identity())
    res = reach_exact(net, Star.from_box([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        check_safety(res, [halfspace_ge(3, 0, 0.5)])


def test_multiple_regions_disjunctive():
    net = single_layer(np.eye(1), np.zeros(1), Identity())
    res = reach_exact(net, Star.from_box([0.0], [1.0]))
    regions = [halfspace_ge(1, 0, 5.0), halfspace_ge(1, 0, 0.9)]
    verdict = check_safety(res, regions)
    assert verdict.status == "Unsafe"
    assert verdict.violated_regions == [1]


def test_safe_soundness_by_sampling():
    rng = np.random.default_rng(321)
    checked = 0
    for _ in range(10):
        net = random_network(rng, max_hidden=2, max_width=4)
        lower, upper = random_input_box(rng, net.input_dim)
        res = reach_exact(net, Star.from_box(lower, upper))
        n_out = net.output_dim
        hi = max(s.dim_bounds(0).upper for s in res.output_stars)
        region = halfspace_ge(n_out, 0, hi + 0.5)  # strictly above everything reachable
        verdict = check_safety(res, [region])
        assert verdict.status == "Safe"
        xs = rng.uniform(lower, upper, size=(2000, net.input_dim))
        assert np.all(net.forward(xs)[:, 0] < hi + 0.5)
        checked += 1
    assert checked == 10


# --------------------------------------------------------------------------
# Robustness


def sonar_style_net():
    return Network(
        (
            Layer([[1.0]], [0.0], HardSigmoid(-2.5, 2.5)),
            Layer([[1.0]], [0.0], UnitStep(0.5, 0.0, 1.0)),
        ),
        1,
    )


def test_robustness_delta_zero_is_pointwise_classification():
    net = sonar_style_net()
    assert check_local_robustness(net, [0.3], 0.0, 1).status == "True"
    assert check_local_robustness(net, [-0.3], 0.0, 0).status == "True"
    assert check_local_robustness(net, [0.3], 0.0, 0).status == "False"


def test_robustness_small_delta_true_large_delta_false():
    # classifier flips at 0; interval arithmetic decides both cases
    net = sonar_style_net()
    assert check_local_robustness(net, [0.6], 0.05, 1).status == "True"
    assert check_local_robustness(net, [0.6], 0.8, 1).status == "False"


def test_robustness_overapprox_true_or_inconclusive():
    net = sonar_style_net()
    r_small = check_local_robustness(net, [0.6], 0.05, 1, method="overapprox")
    assert r_small.status == "True"
    r_big = check_local_robustness(net, [0.6], 0.8, 1, method="overapprox")
    assert r_big.status == "Inconclusive"


def test_single_output_interval_recorded():
    net = sonar_style_net()
    res = check_local_robustness(net, [0.6], 0.05, 1)
    for info in res.star_info:
        assert info.output_interval is not None


def test_multi_output_dominance_rules():
    net = single_layer(np.eye(2), np.zeros(2), Identity())
    assert check_local_robustness(net, [1.0, 0.0], 0.2, 0).status == "True"
    assert check_local_robustness(net, [1.0, 0.0], 0.7, 0).status == "False"
    assert check_local_robustness(net, [1.0, 0.0], 0.2, 1, label_rule="min").status == "True"
    assert check_local_robustness(net, [1.0, 0.0], 0.2, 0, label_rule="min").status == "False"


def test_overapprox_never_false_where_exact_true():
    rng = np.random.default_rng(787)
    agree = 0
    for _ in range(25):
        net = random_network(rng, max_hidden=2, max_width=3, output_dim=2)
        x = rng.uniform(-0.5, 0.5, size=net.input_dim)
        delta = float(rng.uniform(0.01, 0.3))
        label = int(np.argmax(net.forward(x)))
        exact = check_local_robustness(net, x, delta, label, method="exact")
        over = check_local_robustness(net, x, delta, label, method="overapprox")
        assert over.status in ("True", "Inconclusive")
        if over.status == "True":
            assert exact.status == "True"
            agree += 1
    assert agree > 0


def test_invalid_arguments():
    net = sonar_style_net()
    with pytest.raises(ValueError):
        check_local_robustness(net, [0.0], -0.1, 1)
    with pytest.raises(ValueError):
        check_local_robustness(net, [0.0], 0.1, 1, label_rule="median")
    with pytest.raises(ValueError):
        check_local_robustness(net, [0.0, 0.0], 0.1, 1)
