"""Numpy kernels for the actor and critic networks.

Both networks share one fixed topology. Each history vector (throughput,
download time, next chunk sizes) passes through its own causal 1-D
convolution with rectifier; the scalar triple (buffer, last level,
chunks remaining) passes through a dense rectifier layer. The flattened
features are concatenated and fed to a dense rectifier layer and an
output layer of one unit per ladder level: softmax for the actor, linear
for the critic. Everything is 64-bit floating point.
"""

from pathlib import Path
from typing import Dict, List, NamedTuple, Tuple, Union

import jsonpickle
import numpy as np
from deepdiff import DeepDiff
from numpy.lib.stride_tricks import sliding_window_view

from .base import SemABR, log
from .errors import (
    FingerprintError,
    NonFiniteActivationError,
    NonFiniteParameterError,
    ShapeMismatchError,
)
from .playback import EnvState

PARAMS_FORMAT = "semabr-params"
PARAMS_FORMAT_VERSION = 1

#: (parameter group, feature key) of the convolutional inputs, in concatenation order.
CONV_INPUTS = (("conv_t", "t"), ("conv_d", "d"), ("conv_u", "u"))


class Architecture(SemABR):
    """Sizes of the shared actor/critic topology."""

    def __init__(
        self,
        history_len: int = 8,
        level_count: int = 4,
        conv_filters: int = 64,
        kernel_size: int = 3,
        scalar_units: int = 128,
        hidden_units: int = 128,
    ):
        for name, value in [
            ("history_len", history_len),
            ("level_count", level_count),
            ("conv_filters", conv_filters),
            ("kernel_size", kernel_size),
            ("scalar_units", scalar_units),
            ("hidden_units", hidden_units),
        ]:
            if int(value) < 1:
                raise ShapeMismatchError("%s must be >= 1, got %s" % (name, value))
        self.history_len = int(history_len)
        self.level_count = int(level_count)
        self.conv_filters = int(conv_filters)
        self.kernel_size = int(kernel_size)
        self.scalar_units = int(scalar_units)
        self.hidden_units = int(hidden_units)
        super(Architecture, self).__init__()

    @classmethod
    def for_session(cls, config, **sizes) -> "Architecture":
        return cls(history_len=config.history_len, level_count=config.level_count, **sizes)

    def input_lengths(self) -> Dict[str, int]:
        k, m = self.history_len, self.level_count
        return {"t": k, "d": k, "u": m, "scalars": 3}

    @property
    def merged_size(self) -> int:
        lengths = self.input_lengths()
        conv = sum(self.conv_filters * lengths[key] for _, key in CONV_INPUTS)
        return conv + self.scalar_units

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Parameter names and shapes, in a fixed order."""
        F, K = self.conv_filters, self.kernel_size
        shapes = {}
        for group, _ in CONV_INPUTS:
            shapes[group + ".w"] = (F, K)
            shapes[group + ".b"] = (F,)
        shapes["scalar.w"] = (3, self.scalar_units)
        shapes["scalar.b"] = (self.scalar_units,)
        shapes["hidden.w"] = (self.merged_size, self.hidden_units)
        shapes["hidden.b"] = (self.hidden_units,)
        shapes["head.w"] = (self.hidden_units, self.level_count)
        shapes["head.b"] = (self.level_count,)
        return shapes

    def fan(self, name: str) -> Tuple[int, int]:
        """(fan_in, fan_out) of a weight array."""
        shape = self.shapes()[name]
        if name.startswith("conv_"):
            return self.kernel_size, self.conv_filters * self.kernel_size
        return shape[0], shape[1]

    def fingerprint(self) -> dict:
        return {
            "format": PARAMS_FORMAT,
            "version": PARAMS_FORMAT_VERSION,
            "layers": [[name, list(shape)] for name, shape in self.shapes().items()],
        }

    def __getstate__(self) -> dict:
        return {
            "history_len": self.history_len,
            "level_count": self.level_count,
            "conv_filters": self.conv_filters,
            "kernel_size": self.kernel_size,
            "scalar_units": self.scalar_units,
            "hidden_units": self.hidden_units,
        }

    def __setstate__(self, state: dict) -> None:
        self.__init__(**state)

    def __eq__(self, other) -> bool:
        return isinstance(other, Architecture) and self.__getstate__() == other.__getstate__()

    def __hash__(self):
        return hash(tuple(self.__getstate__().items()))

    def __repr__(self):
        return "Architecture(%s)" % ", ".join(
            "%s=%d" % kv for kv in self.__getstate__().items()
        )


class NamedArrays(SemABR):
    """Arrays keyed by parameter name, congruent with an architecture."""

    def __init__(self, architecture: Architecture, arrays: Dict[str, np.ndarray]):
        shapes = architecture.shapes()
        if set(arrays) != set(shapes):
            missing = sorted(set(shapes) - set(arrays))
            extra = sorted(set(arrays) - set(shapes))
            raise ShapeMismatchError(
                "Parameter names differ from the architecture (missing %s, unexpected %s)"
                % (missing, extra)
            )
        self.architecture = architecture
        self.arrays = {}
        for name, shape in shapes.items():
            a = np.array(arrays[name], dtype=np.float64)
            if a.shape != shape:
                raise ShapeMismatchError(
                    "'%s' has shape %s, expected %s" % (name, a.shape, shape)
                )
            self.arrays[name] = a
        super(NamedArrays, self).__init__()

    @property
    def names(self) -> List[str]:
        return list(self.architecture.shapes())

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self):
        return iter(self.names)

    def items(self):
        return [(name, self.arrays[name]) for name in self.names]

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def flat(self) -> np.ndarray:
        """All values concatenated in name order."""
        return np.concatenate([self.arrays[name].ravel() for name in self.names])

    @classmethod
    def from_flat(cls, architecture: Architecture, vector) -> "NamedArrays":
        vector = np.asarray(vector, dtype=np.float64)
        arrays, i = {}, 0
        for name, shape in architecture.shapes().items():
            n = int(np.prod(shape))
            arrays[name] = vector[i : i + n].reshape(shape)
            i += n
        if i != len(vector):
            raise ShapeMismatchError(
                "Flat vector has %d values, the architecture needs %d" % (len(vector), i)
            )
        return cls(architecture, arrays)

    def copy(self):
        return self.__class__(self.architecture, {k: v.copy() for k, v in self.arrays.items()})

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays.values())

    def check_congruent(self, other: "NamedArrays") -> None:
        if self.architecture != other.architecture:
            raise ShapeMismatchError(
                "%r is not congruent with %r" % (self.architecture, other.architecture)
            )

    def combine(self, other: "NamedArrays", scale: float = 1.0) -> Dict[str, np.ndarray]:
        """self + scale * other, array by array."""
        self.check_congruent(other)
        return {name: self.arrays[name] + scale * other.arrays[name] for name in self.names}

    def __getstate__(self) -> dict:
        return {
            "architecture": self.architecture.__getstate__(),
            "arrays": {name: self.arrays[name].tolist() for name in self.names},
        }

    def __setstate__(self, state: dict) -> None:
        self.__init__(Architecture(**state["architecture"]), state["arrays"])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NamedArrays)
            and self.architecture == other.architecture
            and all(np.array_equal(self.arrays[n], other.arrays[n]) for n in self.names)
        )

    def __hash__(self):
        return hash(self.flat().tobytes())


class ParameterSet(NamedArrays):
    """All weights of the actor or the critic. Values are always finite."""

    def __init__(self, architecture: Architecture, arrays: Dict[str, np.ndarray]):
        super(ParameterSet, self).__init__(architecture, arrays)
        for name, a in self.arrays.items():
            if not np.all(np.isfinite(a)):
                raise NonFiniteParameterError("Parameter '%s' holds non-finite values" % name)

    def minus(self, other: "ParameterSet") -> "GradientSet":
        """The difference self - other as a GradientSet."""
        return GradientSet(self.architecture, self.combine(other, -1.0))


class GradientSet(NamedArrays):
    """Derivatives with the same named-array structure as a ParameterSet."""

    def scaled(self, factor: float) -> "GradientSet":
        return GradientSet(
            self.architecture, {n: factor * a for n, a in self.arrays.items()}
        )

    def plus(self, other: "GradientSet") -> "GradientSet":
        return GradientSet(self.architecture, self.combine(other))


def init_params(seed: int, architecture: Architecture) -> ParameterSet:
    """Seeded Glorot-uniform weights and zero biases."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in architecture.shapes().items():
        if name.endswith(".b"):
            arrays[name] = np.zeros(shape)
        else:
            fan_in, fan_out = architecture.fan(name)
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            arrays[name] = rng.uniform(-limit, limit, size=shape)
    return ParameterSet(architecture, arrays)


def zero_params(architecture: Architecture) -> ParameterSet:
    return ParameterSet(
        architecture, {n: np.zeros(s) for n, s in architecture.shapes().items()}
    )


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def causal_windows(sequence, kernel_size: int) -> np.ndarray:
    """(len, kernel_size) windows over the left-zero-padded sequence."""
    x = np.asarray(sequence, dtype=np.float64)
    padded = np.concatenate([np.zeros(kernel_size - 1), x])
    return sliding_window_view(padded, kernel_size)


def causal_conv1d(sequence, filters, bias=None) -> np.ndarray:
    """Stride-1 causal convolution.

    Output position i only sees inputs at positions <= i; the last kernel
    tap weights the current position.

    Args:
        sequence: 1-D input of length L >= 1.
        filters: (F, K) weights, or a single (K,) filter.
        bias (optional): (F,) offsets.

    Returns:
        (F, L) feature sequence, or (L,) for a single filter.
    """
    w = np.asarray(filters, dtype=np.float64)
    single = w.ndim == 1
    w = np.atleast_2d(w)
    if len(np.asarray(sequence)) < 1:
        raise ShapeMismatchError("A convolution needs a sequence of length >= 1")
    y = w @ causal_windows(sequence, w.shape[1]).T
    if bias is not None:
        y = y + np.asarray(bias, dtype=np.float64)[:, None]
    return y[0] if single else y


class Activations(NamedTuple):
    """Intermediate values of one forward pass, kept for backpropagation."""

    windows: Dict[str, np.ndarray]
    conv_z: Dict[str, np.ndarray]
    scalars: np.ndarray
    scalar_z: np.ndarray
    merged: np.ndarray
    hidden_z: np.ndarray
    hidden_a: np.ndarray
    output: np.ndarray


def check_features(features: dict, architecture: Architecture) -> None:
    for key, length in architecture.input_lengths().items():
        if len(features[key]) != length:
            raise ShapeMismatchError(
                "Input '%s' has length %d, the architecture expects %d"
                % (key, len(features[key]), length)
            )


def trunk_forward(params: NamedArrays, state: EnvState) -> Activations:
    """Shared forward pass up to the (pre-activation) output layer."""
    arch = params.architecture
    features = state.features()
    check_features(features, arch)
    windows, conv_z, parts = {}, {}, []
    for group, key in CONV_INPUTS:
        win = causal_windows(features[key], arch.kernel_size)
        z = params[group + ".w"] @ win.T + params[group + ".b"][:, None]
        windows[key], conv_z[key] = win, z
        parts.append(relu(z).ravel())
    scalars = np.asarray(features["scalars"], dtype=np.float64)
    scalar_z = scalars @ params["scalar.w"] + params["scalar.b"]
    parts.append(relu(scalar_z))
    merged = np.concatenate(parts)
    hidden_z = merged @ params["hidden.w"] + params["hidden.b"]
    hidden_a = relu(hidden_z)
    output = hidden_a @ params["head.w"] + params["head.b"]
    if not np.all(np.isfinite(output)):
        raise NonFiniteActivationError("Forward pass produced %s" % output)
    return Activations(
        windows, conv_z, scalars, scalar_z, merged, hidden_z, hidden_a, output
    )


def backward(params: NamedArrays, acts: Activations, d_output: np.ndarray) -> GradientSet:
    """Backpropagate d(objective)/d(output) to every parameter."""
    arch = params.architecture
    grads = {
        "head.w": np.outer(acts.hidden_a, d_output),
        "head.b": np.array(d_output, dtype=np.float64),
    }
    d_hidden = (params["head.w"] @ d_output) * (acts.hidden_z > 0)
    grads["hidden.w"] = np.outer(acts.merged, d_hidden)
    grads["hidden.b"] = d_hidden
    d_merged = params["hidden.w"] @ d_hidden
    offset = 0
    for group, key in CONV_INPUTS:
        z = acts.conv_z[key]
        d_z = d_merged[offset : offset + z.size].reshape(z.shape) * (z > 0)
        offset += z.size
        grads[group + ".w"] = d_z @ acts.windows[key]
        grads[group + ".b"] = d_z.sum(axis=1)
    d_scalar = d_merged[offset:] * (acts.scalar_z > 0)
    grads["scalar.w"] = np.outer(acts.scalars, d_scalar)
    grads["scalar.b"] = d_scalar
    return GradientSet(arch, grads)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    return z - np.log(np.sum(np.exp(z)))


def forward_actor(theta: ParameterSet, state: EnvState) -> np.ndarray:
    """Action probabilities pi(.|s; theta)."""
    return softmax(trunk_forward(theta, state).output)


def forward_critic(w: ParameterSet, state: EnvState) -> np.ndarray:
    """Action values q(s, .; w)."""
    return trunk_forward(w, state).output


def entropy(probabilities: np.ndarray) -> float:
    p = np.asarray(probabilities)
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def check_action(action: int, architecture: Architecture) -> int:
    if not 0 <= action < architecture.level_count:
        raise ShapeMismatchError(
            "Action %s outside [0, %d)" % (action, architecture.level_count)
        )
    return int(action)


def grad_log_policy(theta: ParameterSet, state: EnvState, action: int) -> GradientSet:
    """d log pi(action|s; theta) / d theta."""
    action = check_action(action, theta.architecture)
    acts = trunk_forward(theta, state)
    d_output = -softmax(acts.output)
    d_output[action] += 1.0
    return backward(theta, acts, d_output)


def grad_q(w: ParameterSet, state: EnvState, action: int) -> GradientSet:
    """d q(s, action; w) / d w."""
    action = check_action(action, w.architecture)
    acts = trunk_forward(w, state)
    d_output = np.zeros_like(acts.output)
    d_output[action] = 1.0
    return backward(w, acts, d_output)


def grad_entropy(theta: ParameterSet, state: EnvState) -> Tuple[GradientSet, float]:
    """Gradient of the policy entropy at `state`, and the entropy itself."""
    acts = trunk_forward(theta, state)
    log_p = log_softmax(acts.output)
    p = np.exp(log_p)
    h = float(-np.sum(p * log_p))
    return backward(theta, acts, -p * (log_p + h)), h


def params_payload(params: ParameterSet, meta: dict = None) -> dict:
    """A JSON-ready container of a parameter set and its architecture fingerprint."""
    return {
        "fingerprint": params.architecture.fingerprint(),
        "architecture": params.architecture.__getstate__(),
        "arrays": {name: params[name].tolist() for name in params.names},
        "meta": meta or {},
    }


def save_params(
    params: ParameterSet, path: Union[str, Path] = None, meta: dict = None
) -> str:
    """Encode a parameter set with its architecture fingerprint.

    Returns the JSON text; it is also written to `path` if given.
    """
    text = jsonpickle.encode(params_payload(params, meta), unpicklable=False)
    if path is not None:
        Path(path).write_text(text)
        log("Wrote parameters to %s" % path)
    return text


def params_from_payload(payload: dict, architecture: Architecture = None) -> ParameterSet:
    """Rebuild a parameter set, verifying its fingerprint first.

    Raises:
        FingerprintError: The payload was written for another layout, or
            does not match `architecture` when one is given.
    """
    try:
        stored_arch = Architecture(**payload["architecture"])
        fingerprint = payload["fingerprint"]
    except (KeyError, TypeError) as e:
        raise FingerprintError("Not a parameter container: missing %s" % e)
    if fingerprint != stored_arch.fingerprint():
        diff = DeepDiff(stored_arch.fingerprint(), fingerprint)
        raise FingerprintError("Parameter fingerprint mismatch: %s" % diff)
    if architecture is not None and architecture != stored_arch:
        diff = DeepDiff(architecture.fingerprint(), fingerprint)
        raise FingerprintError(
            "Parameters were written for %r, expected %r: %s"
            % (stored_arch, architecture, diff)
        )
    return ParameterSet(stored_arch, payload["arrays"])


def load_params(path: Union[str, Path], architecture: Architecture = None) -> ParameterSet:
    """Load a parameter file written by `save_params`, or the actor of a checkpoint."""
    payload = jsonpickle.decode(Path(path).read_text())
    if isinstance(payload, dict) and "actor" in payload and "arrays" not in payload:
        payload = payload["actor"]
    return params_from_payload(payload, architecture)
