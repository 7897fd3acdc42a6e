"""Network-level reachability: exact set-valued and over-approximate propagation.

Propagation alternates the layer's affine map with the dimension-wise
activation step, pruning empty branches as it goes.  Exact analysis carries
a growing list of stars (the union is the exact image of the input set);
over-approximate analysis carries a single star that contains the image.
Both are deterministic; the exact fan-out can be spread over worker threads
without changing the result.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .relaxation import (
    ActivationKind,
    DeadlineExceeded,
    Identity,
    apply_activation,
    approx_step,
    layer_step_exact,
)
from .star import Star

# Wall-clock budget for one reachability run, in seconds.
DEFAULT_TIMEOUT = 48 * 3600.0


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: ActivationKind

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.asarray(self.bias, dtype=float).ravel()
        if b.shape[0] != W.shape[0]:
            raise ValueError(f"bias has length {b.shape[0]} but weights have {W.shape[0]} rows")
        W = W.copy()
        b = b.copy()
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def size(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class Network:
    layers: tuple
    input_dim: int

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        prev = self.input_dim
        for i, layer in enumerate(layers):
            if layer.weights.shape[1] != prev:
                raise ValueError(
                    f"layer {i} expects {layer.weights.shape[1]} inputs, previous size is {prev}"
                )
            prev = layer.size
        object.__setattr__(self, "layers", layers)

    @property
    def output_dim(self):
        return self.layers[-1].size

    def forward(self, x):
        """Concrete forward pass; accepts a single input (n,) or a batch (N, n)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValueError(f"input has {x.shape[1]} features, network expects {self.input_dim}")
        for layer in self.layers:
            x = apply_activation(layer.activation, x @ layer.weights.T + layer.bias)
        return x[0] if single else x


@dataclass
class ReachStats:
    stars_per_layer: list = field(default_factory=list)
    layer_seconds: list = field(default_factory=list)
    lp_calls: int = 0
    total_seconds: float = 0.0


@dataclass
class ReachResult:
    output_stars: list
    method: str
    stats: ReachStats
    # (layer index, dimension) of each neuron that received a fresh predicate
    # variable, in processing order; empty for exact analysis.
    relaxed_neurons: list = field(default_factory=list)


class ReachTimeout(RuntimeError):
    """Reachability ran past its wall-clock budget.

    Carries the statistics of the layers that completed before the deadline.
    """

    def __init__(self, method, completed_layers, stats):
        super().__init__(
            f"{method} reachability timed out after {completed_layers} completed layer(s)"
        )
        self.method = method
        self.completed_layers = completed_layers
        self.stats = stats


def _validate_input(net, input_star):
    if input_star.dim != net.input_dim:
        raise ValueError(
            f"input star has dimension {input_star.dim}, network expects {net.input_dim}"
        )
    if input_star.is_empty():
        raise ValueError("input star is empty")


def reach_exact(net, input_star, timeout=DEFAULT_TIMEOUT, threads=1):
    """Exact reachable set of the network: a list of stars whose union is the image.

    Every output star keeps the input star's anchor in the shared predicate
    space, so counter input sets can be read off its predicate directly.
    """
    _validate_input(net, input_star)
    start = time.monotonic()
    deadline = start + timeout
    stats = ReachStats(lp_calls=-lp.lp_call_count())
    stars = [input_star]
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    mapper = (lambda f, xs: executor.map(f, xs)) if executor else None
    try:
        for li, layer in enumerate(net.layers):
            t0 = time.monotonic()
            stars = [s.affine_map(layer.weights, layer.bias) for s in stars]
            try:
                stars = layer_step_exact(stars, layer.activation, mapper=mapper, deadline=deadline)
            except DeadlineExceeded:
                stats.lp_calls += lp.lp_call_count()
                stats.total_seconds = time.monotonic() - start
                raise ReachTimeout("exact", li, stats) from None
            stats.stars_per_layer.append(len(stars))
            stats.layer_seconds.append(time.monotonic() - t0)
    finally:
        if executor:
            executor.shutdown(wait=False)
    stats.lp_calls += lp.lp_call_count()
    stats.total_seconds = time.monotonic() - start
    return ReachResult(stars, "exact", stats)


def reach_approx(net, input_star, timeout=DEFAULT_TIMEOUT):
    """Over-approximate reachable set: a single star containing the exact image.

    The predicate grows by one variable per neuron whose pre-activation
    range straddles a breakpoint; everything else is transformed exactly.
    """
    _validate_input(net, input_star)
    start = time.monotonic()
    deadline = start + timeout
    stats = ReachStats(lp_calls=-lp.lp_call_count())
    relaxed = []
    star = input_star
    for li, layer in enumerate(net.layers):
        t0 = time.monotonic()
        star = star.affine_map(layer.weights, layer.bias)
        if not isinstance(layer.activation, Identity):
            try:
                for j in range(star.dim):
                    if time.monotonic() > deadline:
                        raise DeadlineExceeded
                    before = star.num_predicate_vars
                    star = approx_step(star, j, layer.activation)
                    if star.num_predicate_vars > before:
                        relaxed.append((li, j))
            except DeadlineExceeded:
                stats.lp_calls += lp.lp_call_count()
                stats.total_seconds = time.monotonic() - start
                raise ReachTimeout("overapprox", li, stats) from None
        stats.stars_per_layer.append(1)
        stats.layer_seconds.append(time.monotonic() - t0)
    stats.lp_calls += lp.lp_call_count()
    stats.total_seconds = time.monotonic() - start
    return ReachResult([star], "overapprox", stats, relaxed_neurons=relaxed)
