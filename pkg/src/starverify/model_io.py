"""NNET network files and JSON problem files.

The NNET layout accepted here is the public convention used by the ACAS Xu
ecosystem: leading "//" comment lines, a header line
"numLayers,inputSize,outputSize,maxLayerSize", a layer-sizes line, one
unused flag line, four normalization lines (mins, maxes, means, ranges; the
means/ranges lines carry one extra trailing output entry), then per layer
the weight-matrix rows (one matrix row per line) followed by one bias value
per line.  Hidden layers get ReLU and the output layer the identity.

One extension: a comment line

    // activation <layer-index> <kind> <params...>

overrides a layer's activation (layer-index is 0-based over the parsed
layer list).  Kinds: relu | leaky <gamma> | hardtanh <vmin> <vmax> |
hardsigmoid <vmin> <vmax> | unitstep <val> <rmin> <rmax>.  Plain NNET files
remain fully compatible.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lp import Polyhedron
from .reachability import DEFAULT_TIMEOUT, Layer, Network
from .relaxation import (
    HardSigmoid,
    HardTanh,
    Identity,
    LeakyReLU,
    ReLU,
    UnitStep,
)


class NnetParseError(ValueError):
    """Malformed NNET input; message carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ProblemFormatError(ValueError):
    """Malformed problem JSON; message carries the JSON path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class NnetMetadata:
    input_mins: np.ndarray
    input_maxes: np.ndarray
    input_means: np.ndarray
    input_ranges: np.ndarray
    output_mean: float
    output_range: float
    layer_sizes: tuple

    def __post_init__(self):
        n = self.layer_sizes[0]
        for name in ("input_mins", "input_maxes", "input_means", "input_ranges"):
            vec = np.asarray(getattr(self, name), dtype=float).ravel().copy()
            if vec.shape[0] != n:
                raise ValueError(f"{name} has length {vec.shape[0]}, expected input size {n}")
            vec.flags.writeable = False
            object.__setattr__(self, name, vec)
        if np.any(self.input_ranges <= 0) or self.output_range <= 0:
            raise ValueError("normalization ranges must be strictly positive")
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class ProblemSpec:
    input_set: object  # Box or Polyhedron
    unsafe_regions: list = field(default_factory=list)
    method: str = "exact"
    normalize_inputs: bool = False
    timeout_seconds: float = DEFAULT_TIMEOUT


# --------------------------------------------------------------------------
# NNET parsing


_ACTIVATION_ARITY = {
    "relu": 0,
    "leaky": 1,
    "hardtanh": 2,
    "hardsigmoid": 2,
    "unitstep": 3,
}


def _make_activation(name, params):
    if name == "relu":
        return ReLU()
    if name == "leaky":
        return LeakyReLU(params[0])
    if name == "hardtanh":
        return HardTanh(params[0], params[1])
    if name == "hardsigmoid":
        return HardSigmoid(params[0], params[1])
    if name == "unitstep":
        return UnitStep(params[0], params[1], params[2])
    raise KeyError(name)


class _LineReader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0
        self.overrides = []  # (line_no, layer_index, kind_name, params)

    def next_data_line(self):
        while self.pos < len(self.lines):
            self.pos += 1
            raw = self.lines[self.pos - 1]
            stripped = raw.strip()
            if not stripped:
                continue
            if stripped.startswith("//"):
                self._scan_override(stripped, self.pos)
                continue
            return self.pos, stripped
        raise NnetParseError(len(self.lines) + 1, "unexpected end of file")

    def _scan_override(self, comment, line_no):
        tokens = comment[2:].split()
        if not tokens or tokens[0] != "activation":
            return
        if len(tokens) < 3:
            raise NnetParseError(line_no, "activation override needs a layer index and a kind")
        try:
            layer_index = int(tokens[1])
        except ValueError:
            raise NnetParseError(line_no, f"bad layer index {tokens[1]!r}") from None
        name = tokens[2]
        if name not in _ACTIVATION_ARITY:
            raise NnetParseError(line_no, f"unknown activation kind {name!r}")
        arity = _ACTIVATION_ARITY[name]
        if len(tokens) != 3 + arity:
            raise NnetParseError(
                line_no, f"activation {name!r} takes {arity} parameter(s), got {len(tokens) - 3}"
            )
        try:
            params = [float(t) for t in tokens[3:]]
        except ValueError:
            raise NnetParseError(line_no, "activation parameters must be numeric") from None
        self.overrides.append((line_no, layer_index, name, params))


def _parse_numbers(line_no, text, expected=None, kind=float):
    tokens = [t.strip() for t in text.split(",")]
    if tokens and tokens[-1] == "":
        tokens = tokens[:-1]  # trailing comma tolerated
    values = []
    for tok in tokens:
        try:
            values.append(kind(tok))
        except ValueError:
            raise NnetParseError(line_no, f"expected a number, got {tok!r}") from None
    if expected is not None and len(values) != expected:
        raise NnetParseError(line_no, f"expected {expected} value(s), got {len(values)}")
    return values


def _as_text(source):
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def parse_nnet(source):
    """Parse NNET text (str, bytes or stream) into (Network, NnetMetadata)."""
    reader = _LineReader(_as_text(source))

    line_no, header = reader.next_data_line()
    num_layers, input_size, output_size, _max_layer = _parse_numbers(
        line_no, header, expected=4, kind=int
    )
    if num_layers < 1 or input_size < 1 or output_size < 1:
        raise NnetParseError(line_no, "header sizes must be positive")

    line_no, sizes_line = reader.next_data_line()
    sizes = _parse_numbers(line_no, sizes_line, expected=num_layers + 1, kind=int)
    if sizes[0] != input_size or sizes[-1] != output_size:
        raise NnetParseError(
            line_no,
            f"layer sizes {sizes} disagree with header input {input_size} / output {output_size}",
        )

    reader.next_data_line()  # unused flag line

    line_no, text = reader.next_data_line()
    mins = _parse_numbers(line_no, text, expected=input_size)
    line_no, text = reader.next_data_line()
    maxes = _parse_numbers(line_no, text, expected=input_size)
    line_no, text = reader.next_data_line()
    means = _parse_numbers(line_no, text, expected=input_size + 1)
    line_no, text = reader.next_data_line()
    ranges = _parse_numbers(line_no, text, expected=input_size + 1)

    layers = []
    for li in range(num_layers):
        rows, cols = sizes[li + 1], sizes[li]
        weights = np.empty((rows, cols))
        for r in range(rows):
            line_no, text = reader.next_data_line()
            weights[r] = _parse_numbers(line_no, text, expected=cols)
        bias = np.empty(rows)
        for r in range(rows):
            line_no, text = reader.next_data_line()
            bias[r] = _parse_numbers(line_no, text, expected=1)[0]
        activation = ReLU() if li < num_layers - 1 else Identity()
        layers.append(Layer(weights, bias, activation))

    for line_no, layer_index, name, params in reader.overrides:
        if not 0 <= layer_index < num_layers:
            raise NnetParseError(
                line_no, f"activation override targets layer {layer_index}, network has {num_layers}"
            )
        try:
            activation = _make_activation(name, params)
        except ValueError as exc:
            raise NnetParseError(line_no, str(exc)) from None
        old = layers[layer_index]
        layers[layer_index] = Layer(old.weights, old.bias, activation)

    try:
        meta = NnetMetadata(
            np.array(mins),
            np.array(maxes),
            np.array(means[:-1]),
            np.array(ranges[:-1]),
            means[-1],
            ranges[-1],
            tuple(sizes),
        )
    except ValueError as exc:
        raise NnetParseError(line_no, str(exc)) from None
    return Network(tuple(layers), input_size), meta


def _fmt(value):
    return f"{float(value):.17g}"


def _activation_override_line(index, kind):
    if isinstance(kind, LeakyReLU):
        return f"// activation {index} leaky {_fmt(kind.gamma)}"
    if isinstance(kind, HardTanh):
        return f"// activation {index} hardtanh {_fmt(kind.v_min)} {_fmt(kind.v_max)}"
    if isinstance(kind, HardSigmoid):
        return f"// activation {index} hardsigmoid {_fmt(kind.v_min)} {_fmt(kind.v_max)}"
    if isinstance(kind, UnitStep):
        return (
            f"// activation {index} unitstep {_fmt(kind.val)} "
            f"{_fmt(kind.r_min)} {_fmt(kind.r_max)}"
        )
    return None


def serialize_nnet(net, meta):
    """NNET text for the network; parse(serialize(net)) reproduces net bit-exactly."""
    num_layers = len(net.layers)
    sizes = [net.input_dim] + [layer.size for layer in net.layers]
    if tuple(sizes) != tuple(meta.layer_sizes):
        raise ValueError(f"metadata layer sizes {meta.layer_sizes} do not match network {sizes}")
    out = io.StringIO()
    out.write("// generated by starverify\n")
    for index, layer in enumerate(net.layers):
        default = ReLU() if index < num_layers - 1 else Identity()
        if layer.activation != default:
            line = _activation_override_line(index, layer.activation)
            if line is None:
                raise ValueError(
                    f"layer {index} activation {layer.activation!r} has no NNET override syntax"
                )
            out.write(line + "\n")
    out.write(f"{num_layers},{net.input_dim},{net.output_dim},{max(sizes)},\n")
    out.write(",".join(str(s) for s in sizes) + ",\n")
    out.write("0,\n")
    for vec in (meta.input_mins, meta.input_maxes):
        out.write(",".join(_fmt(v) for v in vec) + ",\n")
    out.write(",".join(_fmt(v) for v in meta.input_means) + f",{_fmt(meta.output_mean)},\n")
    out.write(",".join(_fmt(v) for v in meta.input_ranges) + f",{_fmt(meta.output_range)},\n")
    for layer in net.layers:
        for row in layer.weights:
            out.write(",".join(_fmt(v) for v in row) + ",\n")
        for v in layer.bias:
            out.write(_fmt(v) + ",\n")
    return out.getvalue()


def normalize_input_box(meta, lower, upper):
    """Map an input box through the NNET normalization: (clamp(x) - mean) / range.

    The map is monotone per coordinate, so a box maps to a box.
    """
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if lower.shape != meta.input_mins.shape or upper.shape != meta.input_mins.shape:
        raise ValueError("box dimension does not match the network input size")
    if np.any(meta.input_ranges <= 0):
        raise ValueError("normalization ranges must be strictly positive")
    lo = (np.clip(lower, meta.input_mins, meta.input_maxes) - meta.input_means) / meta.input_ranges
    up = (np.clip(upper, meta.input_mins, meta.input_maxes) - meta.input_means) / meta.input_ranges
    return lo, up


# --------------------------------------------------------------------------
# Problem JSON


def _want(obj, path, types, what):
    if not isinstance(obj, types):
        raise ProblemFormatError(path, f"expected {what}, got {type(obj).__name__}")
    return obj


def _num_list(obj, path):
    _want(obj, path, list, "an array of numbers")
    values = []
    for i, v in enumerate(obj):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ProblemFormatError(f"{path}[{i}]", "expected a number")
        values.append(float(v))
    return values


def _parse_poly(obj, path):
    _want(obj, path, dict, "an object with 'mat' and 'rhs'")
    if "mat" not in obj or "rhs" not in obj:
        raise ProblemFormatError(path, "polyhedron needs 'mat' and 'rhs'")
    mat = _want(obj["mat"], f"{path}.mat", list, "an array of rows")
    if not mat:
        raise ProblemFormatError(f"{path}.mat", "needs at least one row")
    rows = [_num_list(row, f"{path}.mat[{i}]") for i, row in enumerate(mat)]
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ProblemFormatError(f"{path}.mat[{i}]", f"row length {len(row)} != {width}")
    rhs = _num_list(obj["rhs"], f"{path}.rhs")
    if len(rhs) != len(rows):
        raise ProblemFormatError(f"{path}.rhs", f"{len(rhs)} entries for {len(rows)} rows")
    return Polyhedron(np.array(rows), np.array(rhs))


def parse_problem(source):
    """Parse a problem JSON document into a ProblemSpec."""
    text = _as_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError("$", f"invalid JSON: {exc}") from None
    _want(doc, "$", dict, "a JSON object")
    if "input" not in doc:
        raise ProblemFormatError("$", "missing required field 'input'")
    inp = _want(doc["input"], "$.input", dict, "an object with 'box' or 'poly'")

    if ("box" in inp) == ("poly" in inp):
        raise ProblemFormatError("$.input", "needs exactly one of 'box' or 'poly'")
    if "box" in inp:
        box = _want(inp["box"], "$.input.box", dict, "an object with 'lower' and 'upper'")
        if "lower" not in box or "upper" not in box:
            raise ProblemFormatError("$.input.box", "needs 'lower' and 'upper'")
        lower = _num_list(box["lower"], "$.input.box.lower")
        upper = _num_list(box["upper"], "$.input.box.upper")
        if len(lower) != len(upper):
            raise ProblemFormatError("$.input.box", "lower and upper lengths differ")
        if any(l > u for l, u in zip(lower, upper)):
            raise ProblemFormatError("$.input.box", "lower exceeds upper")
        input_set = Box(np.array(lower), np.array(upper))
    else:
        input_set = _parse_poly(inp["poly"], "$.input.poly")

    unsafe = []
    if "unsafe" in doc:
        regions = _want(doc["unsafe"], "$.unsafe", list, "an array of polyhedra")
        unsafe = [_parse_poly(r, f"$.unsafe[{i}]") for i, r in enumerate(regions)]

    method = doc.get("method", "exact")
    if method not in ("exact", "overapprox"):
        raise ProblemFormatError("$.method", f"must be 'exact' or 'overapprox', got {method!r}")

    normalize = doc.get("normalize", False)
    if not isinstance(normalize, bool):
        raise ProblemFormatError("$.normalize", "must be a boolean")

    timeout = doc.get("timeout", DEFAULT_TIMEOUT)
    if isinstance(timeout, bool) or not isinstance(timeout, (int, float)):
        raise ProblemFormatError("$.timeout", "must be a number of seconds")
    if not math.isfinite(timeout) or timeout < 0:
        raise ProblemFormatError("$.timeout", "must be a finite non-negative number")

    return ProblemSpec(
        input_set=input_set,
        unsafe_regions=unsafe,
        method=method,
        normalize_inputs=normalize,
        timeout_seconds=float(timeout),
    )
