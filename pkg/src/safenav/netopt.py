"""Small numpy MLPs with hand-written reverse mode, a Gaussian policy head and Adam."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class ShapeError(ValueError):
    pass


class Mlp:
    """Fully connected net, tanh on hidden layers, identity output.

    Weights are stored as ``(n_out, n_in)`` so a single layer computes
    ``W @ x + b``; batched inputs are row-major ``(batch, n_in)``.
    """

    def __init__(self, layer_sizes, weights=None, biases=None):
        self.layer_sizes = [int(n) for n in layer_sizes]
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ShapeError(f"invalid layer sizes {layer_sizes}")
        pairs = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        if weights is None:
            weights = [np.zeros((o, i)) for i, o in pairs]
        if biases is None:
            biases = [np.zeros(o) for _, o in pairs]
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for (i, o), w, b in zip(pairs, self.weights, self.biases, strict=True):
            if w.shape != (o, i) or b.shape != (o,):
                raise ShapeError(f"layer expects W{(o, i)} b{(o,)}, got W{w.shape} b{b.shape}")

    @classmethod
    def init(cls, layer_sizes, rng: np.random.Generator, hidden_gain=math.sqrt(2.0),
             output_gain=1.0) -> "Mlp":
        """Uniform fan-in initialisation with per-layer gain, zero biases."""
        net = cls(layer_sizes)
        n = len(net.weights)
        for k, w in enumerate(net.weights):
            gain = output_gain if k == n - 1 else hidden_gain
            bound = gain * math.sqrt(3.0 / w.shape[1])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
        return net

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x, keep=False):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.layer_sizes[0]:
            raise ShapeError(f"input has {h.shape[1]} features, net expects {self.layer_sizes[0]}")
        acts = [h]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if k < last:
                h = np.tanh(h)
            acts.append(h)
        out = h[0] if single else h
        return (out, acts) if keep else out

    def backward(self, acts, grad_out):
        """Gradients of ``sum(output * grad_out)`` given the activations from ``forward``.

        Returns ``(param_grads, input_grad)`` with ``param_grads`` ordered as
        :attr:`params`.
        """
        g = np.asarray(grad_out, dtype=np.float64)
        single = g.ndim == 1
        if single:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ShapeError(f"output grad shape {g.shape} != output shape {acts[-1].shape}")
        grads: list[np.ndarray] = []
        for k in range(len(self.weights) - 1, -1, -1):
            if k < len(self.weights) - 1:
                g = g * (1.0 - acts[k + 1] ** 2)
            grads.append(g.sum(axis=0))
            grads.append(g.T @ acts[k])
            g = g @ self.weights[k]
        grads.reverse()
        return grads, (g[0] if single else g)


def forward(net: Mlp, x):
    return net.forward(x)


def backward(net: Mlp, x, output_grad):
    _, acts = net.forward(x, keep=True)
    return net.backward(acts, output_grad)


class GaussianPolicy:
    """Diagonal Gaussian whose mean is an MLP of the observation and whose
    log standard deviation is a free, state-independent vector."""

    def __init__(self, mean_net: Mlp, log_std):
        self.mean_net = mean_net
        self.log_std = np.clip(np.array(log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)
        if self.log_std.shape != (mean_net.layer_sizes[-1],):
            raise ShapeError("log_std length must equal the action dimension")

    @classmethod
    def init(cls, obs_dim, act_dim, hidden, rng, log_std=math.log(0.5)) -> "GaussianPolicy":
        net = Mlp.init([obs_dim, *hidden, act_dim], rng, output_gain=0.01)
        return cls(net, np.full(act_dim, log_std))

    @property
    def params(self) -> list[np.ndarray]:
        return self.mean_net.params + [self.log_std]

    def clamp(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.mean_net.copy(), self.log_std.copy())

    def mean(self, obs):
        return self.mean_net.forward(obs)

    def logprob(self, obs, action):
        return _logprob(self.mean(obs), self.log_std, np.asarray(action, dtype=np.float64))

    def sample(self, obs, rng: np.random.Generator):
        mu = self.mean(obs)
        noise = rng.standard_normal(mu.shape)
        action = mu + np.exp(self.log_std) * noise
        return action, _logprob(mu, self.log_std, action)

    def entropy(self) -> float:
        return float(np.sum(0.5 * math.log(2.0 * math.pi * math.e) + self.log_std))


def _logprob(mu, log_std, action):
    z = (action - mu) * np.exp(-log_std)
    return np.sum(-0.5 * z * z - log_std - _HALF_LOG_2PI, axis=-1)


def gaussian_logprob(policy: GaussianPolicy, obs, action):
    return policy.logprob(obs, action)


def gaussian_sample(policy: GaussianPolicy, obs, rng):
    return policy.sample(obs, rng)


def gaussian_entropy(policy: GaussianPolicy) -> float:
    return policy.entropy()


def logprob_grads(policy: GaussianPolicy, obs, action, dlogp):
    """Parameter gradients of ``sum(dlogp * logprob(obs, action))``."""
    mu, acts = policy.mean_net.forward(obs, keep=True)
    inv_var = np.exp(-2.0 * policy.log_std)
    diff = np.asarray(action) - mu
    dlogp = np.asarray(dlogp, dtype=np.float64).reshape(-1, 1)
    g_mu = dlogp * diff * inv_var
    g_log_std = np.sum(dlogp * (diff * diff * inv_var - 1.0), axis=0)
    grads, _ = policy.mean_net.backward(acts, g_mu)
    return grads + [g_log_std]


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **kw)


def adam_step(params, grads, state: AdamState) -> None:
    """In-place bias-corrected Adam update of ``params``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state differ in length")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def clip_grad_norm(grads, max_norm: float) -> float:
    """Scale ``grads`` in place so their joint L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads:
            g *= scale
    return total


def policy_to_json(policy: GaussianPolicy, meta: dict | None = None) -> dict:
    net = policy.mean_net
    return {
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "log_std": policy.log_std.tolist(),
        "meta": dict(meta or {}),
    }


def policy_from_json(obj: dict) -> tuple[GaussianPolicy, dict]:
    try:
        net = Mlp(obj["layer_sizes"], obj["weights"], obj["biases"])
        policy = GaussianPolicy(net, obj["log_std"])
    except KeyError as exc:
        raise ShapeError(f"checkpoint missing field {exc.args[0]!r}") from None
    return policy, dict(obj.get("meta", {}))


def save_checkpoint(policy: GaussianPolicy, path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(policy_to_json(policy, meta)) + "\n")


def load_checkpoint(path) -> tuple[GaussianPolicy, dict]:
    return policy_from_json(json.loads(Path(path).read_text()))
