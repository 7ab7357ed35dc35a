"""Feed-forward networks, parameter stores and the Adam optimizer."""

from collections import OrderedDict

import numpy as np

from ..errors import CheckpointError, ContractError, DimensionError
from . import tensor as T
from .tensor import Tensor

ACTIVATIONS = {
    "relu": T.relu,
    "leaky_relu": T.leaky_relu,
    "sigmoid": T.sigmoid,
    "tanh": T.tanh,
    "none": None,
}

# Adam defaults: lr and beta1 from the 8-Gaussian setup, beta2/eps from Adam itself
DEFAULT_LR = 1e-4
DEFAULT_BETA1 = 0.5
DEFAULT_BETA2 = 0.999
DEFAULT_EPS = 1e-8


class LinearLayer:
    """Affine map x @ weight + bias."""

    def __init__(self, weight, bias):
        weight, bias = T.as_tensor(weight), T.as_tensor(bias)
        if weight.data.ndim != 2 or bias.shape != (1, weight.shape[1]):
            raise DimensionError(
                f"bias shape {bias.shape} does not fit weight shape {weight.shape}"
            )
        weight.requires_grad = True
        bias.requires_grad = True
        self.weight = weight
        self.bias = bias

    @property
    def in_dim(self):
        return self.weight.shape[0]

    @property
    def out_dim(self):
        return self.weight.shape[1]

    def __call__(self, x):
        return T.add(T.matmul(x, self.weight), self.bias)


class MlpNet:
    """Stack of (LinearLayer, activation name) pairs applied in order."""

    def __init__(self, layers, name="mlp"):
        if not layers:
            raise DimensionError("an MlpNet needs at least one layer")
        for (prev, _), (nxt, _) in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionError(
                    f"layer widths do not chain: {prev.weight.shape} then {nxt.weight.shape}"
                )
        for _, act in layers:
            if act not in ACTIVATIONS:
                raise ContractError(f"unknown activation '{act}'")
        self.layers = list(layers)
        self.name = name

    @property
    def dims(self):
        return [self.layers[0][0].in_dim] + [layer.out_dim for layer, _ in self.layers]

    @property
    def in_dim(self):
        return self.layers[0][0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1][0].out_dim

    def parameters(self):
        store = ParamStore()
        for i, (layer, _) in enumerate(self.layers):
            store.add(f"layer{i}.weight", layer.weight)
            store.add(f"layer{i}.bias", layer.bias)
        return store

    def __call__(self, x):
        return forward(self, x)


def init_mlp(dims, hidden_act="relu", out_act="none", seed=0, name="mlp"):
    """
    Build an MLP with fan-average uniform weights and zero biases.

    Args:
        dims: Layer widths, input first (at least two entries)
        hidden_act: Activation after every layer except the last
        out_act: Activation after the last layer
        seed: Integer seed; the same seed gives the same parameters
        name: Network name stored in checkpoints

    Returns:
        MlpNet
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise DimensionError(f"an MLP needs at least an input and an output width, got {dims}")
    if any(d <= 0 for d in dims):
        raise DimensionError(f"layer widths must be positive, got {dims}")

    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        bias = np.zeros((1, fan_out))
        act = out_act if i == len(dims) - 2 else hidden_act
        layers.append((LinearLayer(weight, bias), act))
    return MlpNet(layers, name=name)


def forward(net, x):
    """Run a [B×in] batch through the network, recording on the tape."""
    x = T.as_tensor(x)
    if x.data.ndim != 2 or x.shape[1] != net.in_dim:
        raise DimensionError(
            f"{net.name}: input shape {x.shape} does not match input width {net.in_dim}"
        )
    out = x
    for layer, act in net.layers:
        out = layer(out)
        fn = ACTIVATIONS[act]
        if fn is not None:
            out = fn(out)
    return out


class ParamStore:
    """Named, ordered collection of parameter tensors."""

    def __init__(self):
        self._params = OrderedDict()

    def add(self, name, param):
        if name in self._params:
            raise ContractError(f"duplicate parameter name '{name}'")
        self._params[name] = param

    def merge(self, prefix, other):
        for name, param in other.items():
            self.add(f"{prefix}.{name}", param)
        return self

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def __getitem__(self, name):
        return self._params[name]

    def __len__(self):
        return len(self._params)

    def __iter__(self):
        return iter(self._params.values())

    def zero_grad(self):
        for param in self._params.values():
            param.zero_grad()

    def state(self):
        """Copy of all parameter values, keyed by name."""
        return OrderedDict((name, p.data.copy()) for name, p in self._params.items())

    def load_state(self, arrays):
        """Overwrite parameter values from a name -> array mapping."""
        missing = [n for n in self._params if n not in arrays]
        extra = [n for n in arrays if n not in self._params]
        if missing or extra:
            raise CheckpointError(
                f"parameter names differ (missing: {missing}, unexpected: {extra})"
            )
        for name, param in self._params.items():
            values = np.asarray(arrays[name], dtype=np.float64)
            if values.shape != param.shape:
                raise CheckpointError(
                    f"parameter '{name}' has shape {values.shape}, network expects {param.shape}"
                )
        for name, param in self._params.items():
            param.data[...] = arrays[name]

    def flat_grad(self):
        """All gradients concatenated in store order (zeros where missing)."""
        parts = []
        for param in self._params.values():
            grad = param.grad if param.grad is not None else np.zeros_like(param.data)
            parts.append(grad.reshape(-1))
        return np.concatenate(parts) if parts else np.zeros(0)

    def all_finite(self):
        return all(np.all(np.isfinite(p.data)) for p in self._params.values())


class AdamState:
    """Moment buffers and step counter for one ParamStore."""

    def __init__(self, store, lr=DEFAULT_LR, beta1=DEFAULT_BETA1, beta2=DEFAULT_BETA2, eps=DEFAULT_EPS):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = {name: np.zeros_like(p.data) for name, p in store.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in store.items()}


def adam_step(store, state):
    """Apply one bias-corrected Adam update, then zero the gradients."""
    for name, param in store.items():
        if param.grad is None:
            raise ContractError(f"parameter '{name}' has no gradient")

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, param in store.items():
        g = param.grad
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        param.zero_grad()
