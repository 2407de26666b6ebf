"""Small feed-forward network engine: dense, conv, pooling, dropout.

Double precision throughout. Forward passes are functional: training
passes carry a per-call context for backprop, so a fitted network can
serve any number of concurrent predict calls without shared state.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidHyperparameter


class Layer:
    """Base layer; parameters live in ``params`` keyed by name."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}

    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def forward(self, x, ctx=None, train=False, rng=None):
        raise NotImplementedError

    def backward(self, grad, ctx):
        """Return (grad wrt input, grads wrt params keyed like ``params``)."""
        raise NotImplementedError

    def config(self) -> dict:
        return {}


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int):
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        self.params = {"w": np.zeros((n_in, n_out)), "b": np.zeros(n_out)}

    def init_params(self, rng):
        self.params["w"] = _glorot(rng, self.n_in, self.n_out, (self.n_in, self.n_out))
        self.params["b"] = np.zeros(self.n_out)

    def forward(self, x, ctx=None, train=False, rng=None):
        if ctx is not None:
            ctx["x"] = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, grad, ctx):
        x = ctx["x"]
        return grad @ self.params["w"].T, {"w": x.T @ grad, "b": grad.sum(axis=0)}

    def config(self):
        return {"n_in": self.n_in, "n_out": self.n_out}


class Relu(Layer):
    def forward(self, x, ctx=None, train=False, rng=None):
        if ctx is not None:
            ctx["mask"] = x > 0
        return np.maximum(x, 0.0)

    def backward(self, grad, ctx):
        return grad * ctx["mask"], {}


class Dropout(Layer):
    """Inverted dropout; identity outside training."""

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise InvalidHyperparameter(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, ctx=None, train=False, rng=None):
        if not train or self.rate == 0.0:
            if ctx is not None:
                ctx["mask"] = None
            return x
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        if ctx is not None:
            ctx["mask"] = mask
        return x * mask

    def backward(self, grad, ctx):
        mask = ctx["mask"]
        return (grad if mask is None else grad * mask), {}

    def config(self):
        return {"rate": self.rate}


class Reshape(Layer):
    """Flat rows to a fixed per-sample shape (and back in backprop)."""

    def __init__(self, shape: tuple[int, ...]):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x, ctx=None, train=False, rng=None):
        if ctx is not None:
            ctx["in_shape"] = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, grad, ctx):
        return grad.reshape(ctx["in_shape"]), {}

    def config(self):
        return {"shape": list(self.shape)}


class Flatten(Layer):
    def forward(self, x, ctx=None, train=False, rng=None):
        if ctx is not None:
            ctx["in_shape"] = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad, ctx):
        return grad.reshape(ctx["in_shape"]), {}


class Conv2d(Layer):
    """Valid-padding 2-D convolution over (N, C, H, W) inputs."""

    def __init__(self, in_channels: int, out_channels: int, kernel: tuple[int, int]):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = tuple(kernel)
        kh, kw = self.kernel
        self.params = {
            "w": np.zeros((out_channels, in_channels, kh, kw)),
            "b": np.zeros(out_channels),
        }

    def init_params(self, rng):
        kh, kw = self.kernel
        fan_in = self.in_channels * kh * kw
        fan_out = self.out_channels * kh * kw
        self.params["w"] = _glorot(
            rng, fan_in, fan_out, (self.out_channels, self.in_channels, kh, kw)
        )
        self.params["b"] = np.zeros(self.out_channels)

    def forward(self, x, ctx=None, train=False, rng=None):
        kh, kw = self.kernel
        n, c, h, w = x.shape
        if c != self.in_channels or h < kh or w < kw:
            raise InvalidHyperparameter(
                f"conv input {x.shape[1:]} incompatible with "
                f"{self.in_channels} channels and kernel {self.kernel}"
            )
        ho, wo = h - kh + 1, w - kw + 1
        out = np.zeros((n, self.out_channels, ho, wo))
        weights = self.params["w"]
        for a in range(kh):
            for b in range(kw):
                patch = x[:, :, a : a + ho, b : b + wo]
                out += np.einsum("nchw,fc->nfhw", patch, weights[:, :, a, b])
        out += self.params["b"].reshape(1, -1, 1, 1)
        if ctx is not None:
            ctx["x"] = x
        return out

    def backward(self, grad, ctx):
        x = ctx["x"]
        kh, kw = self.kernel
        ho, wo = grad.shape[2], grad.shape[3]
        grad_w = np.zeros_like(self.params["w"])
        grad_x = np.zeros_like(x)
        weights = self.params["w"]
        for a in range(kh):
            for b in range(kw):
                patch = x[:, :, a : a + ho, b : b + wo]
                grad_w[:, :, a, b] = np.einsum("nfhw,nchw->fc", grad, patch)
                grad_x[:, :, a : a + ho, b : b + wo] += np.einsum(
                    "nfhw,fc->nchw", grad, weights[:, :, a, b]
                )
        return grad_x, {"w": grad_w, "b": grad.sum(axis=(0, 2, 3))}

    def config(self):
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": list(self.kernel),
        }


class MaxPool2d(Layer):
    """Non-overlapping max pooling; window must tile the input exactly."""

    def __init__(self, window: tuple[int, int]):
        super().__init__()
        self.window = tuple(window)

    def forward(self, x, ctx=None, train=False, rng=None):
        ph, pw = self.window
        n, c, h, w = x.shape
        if h % ph or w % pw:
            raise InvalidHyperparameter(
                f"pool window {self.window} does not tile input {h}x{w}"
            )
        ho, wo = h // ph, w // pw
        windows = (
            x.reshape(n, c, ho, ph, wo, pw)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, ho, wo, ph * pw)
        )
        flat_index = windows.argmax(axis=-1)  # first max wins ties
        out = np.take_along_axis(windows, flat_index[..., None], axis=-1)[..., 0]
        if ctx is not None:
            ctx["flat_index"] = flat_index
            ctx["in_shape"] = x.shape
        return out

    def backward(self, grad, ctx):
        ph, pw = self.window
        n, c, h, w = ctx["in_shape"]
        ho, wo = h // ph, w // pw
        windows = np.zeros((n, c, ho, wo, ph * pw))
        np.put_along_axis(windows, ctx["flat_index"][..., None], grad[..., None], axis=-1)
        grad_x = (
            windows.reshape(n, c, ho, wo, ph, pw)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h, w)
        )
        return grad_x, {}

    def config(self):
        return {"window": list(self.window)}


class Network:
    """An ordered stack of layers ending in class logits."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def init_params(self, rng: np.random.Generator) -> None:
        for layer in self.layers:
            layer.init_params(rng)

    def forward(self, x, train=False, rng=None, contexts=None):
        for i, layer in enumerate(self.layers):
            ctx = None if contexts is None else contexts[i]
            x = layer.forward(x, ctx=ctx, train=train, rng=rng)
        return x

    def logits(self, x) -> np.ndarray:
        return self.forward(x, train=False)

    def loss_and_grads(self, x, target_idx, train=False, rng=None):
        """Mean cross-entropy over the batch plus per-layer param grads."""
        contexts = [{} for _ in self.layers]
        logits = self.forward(x, train=train, rng=rng, contexts=contexts)
        loss, grad = softmax_cross_entropy(logits, target_idx)
        grads: list[dict[str, np.ndarray]] = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            grad, grads[i] = self.layers[i].backward(grad, contexts[i])
        return loss, grads

    def parameter_arrays(self):
        for layer in self.layers:
            for name in sorted(layer.params):
                yield layer, name


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, target_idx: np.ndarray):
    """Mean loss and its gradient wrt the logits."""
    n = logits.shape[0]
    probs = softmax(logits)
    picked = np.clip(probs[np.arange(n), target_idx], 1e-300, None)
    loss = float(-np.log(picked).mean())
    grad = probs
    grad[np.arange(n), target_idx] -= 1.0
    return loss, grad / n


def train_network(
    net: Network,
    X: np.ndarray,
    target_idx: np.ndarray,
    *,
    epochs: int,
    batch_size: int,
    learning_rate: float,
    momentum: float,
    rng: np.random.Generator,
) -> None:
    """Mini-batch gradient descent with momentum; mutates ``net`` in place.

    The caller's ``rng`` drives shuffling and dropout masks, so a fixed
    seed fixes the whole trajectory.
    """
    n = X.shape[0]
    velocity = {
        (i, name): np.zeros_like(layer.params[name])
        for i, layer in enumerate(net.layers)
        for name in layer.params
    }
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            _, grads = net.loss_and_grads(X[batch], target_idx[batch], train=True, rng=rng)
            for i, layer in enumerate(net.layers):
                for name, grad in grads[i].items():
                    v = velocity[(i, name)]
                    v *= momentum
                    v -= learning_rate * grad
                    layer.params[name] += v


def max_relative_gradient_error(
    net: Network, x: np.ndarray, target_idx: np.ndarray, *, step: float = 1e-5
) -> float:
    """Backprop vs central finite differences over every parameter.

    Relative error per element is |g_bp - g_fd| / max(1e-8, |g_bp| + |g_fd|);
    dropout is inactive because the check runs in inference mode.
    """
    _, grads = net.loss_and_grads(x, target_idx, train=False)
    worst = 0.0
    for i, layer in enumerate(net.layers):
        for name in sorted(layer.params):
            param = layer.params[name]
            analytic = grads[i][name]
            flat = param.reshape(-1)
            flat_analytic = analytic.reshape(-1)
            for j in range(flat.size):
                original = flat[j]
                flat[j] = original + step
                up, _ = softmax_cross_entropy(net.forward(x, train=False), target_idx)
                flat[j] = original - step
                down, _ = softmax_cross_entropy(net.forward(x, train=False), target_idx)
                flat[j] = original
                numeric = (up - down) / (2.0 * step)
                denom = max(1e-8, abs(flat_analytic[j]) + abs(numeric))
                worst = max(worst, abs(flat_analytic[j] - numeric) / denom)
    return worst
