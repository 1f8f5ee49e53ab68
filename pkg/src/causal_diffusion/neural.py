"""Per-node noise predictors: small tanh MLPs with exact gradients and Adam.

A :class:`NodeModel` maps ``[noised value, conditioning values..., t / T]``
to a single predicted noise value.  Parameters live in one flat float64
vector so the finite-difference gradient check and the optimizer stay
simple.  Hidden activations are tanh; the output layer is linear.  Weights
use fan-scaled uniform init from a seeded generator, so construction and
training are reproducible bit for bit.

Optimizer constants are the canonical Adam defaults: first/second moment
decays 0.9 and 0.999, stabilizer 1e-8; the benchmark learning rate is
1e-4.

Persistence: ``save_model`` writes a little-endian binary file

    magic b"NPM1" | u32 version | u32 input_dim | u32 n_hidden | u32*hidden
    | u32 output_dim | i64 init_seed | u32 T | u32 n_cond | u32*cond
    | u64 n_params | f64*params

plus a plain-text ``<path>.meta.txt`` sidecar with the same header fields.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_MAGIC = b"NPM1"
_VERSION = 1


@dataclass(frozen=True)
class NetSpec:
    input_dim: int
    hidden: tuple[int, ...] = (128, 256, 256)
    output_dim: int = 1
    init_seed: int = 0

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden, self.output_dim)
        if any(d < 1 for d in dims):
            raise ValueError("layer dimensions must be positive")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def param_count(self) -> int:
        dims = self.layer_dims
        return sum(dims[k] * dims[k + 1] + dims[k + 1] for k in range(len(dims) - 1))


_INIT_GAIN = 1.0  # fan-scaled uniform init gain


def _init_params(spec: NetSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.init_seed)
    dims = spec.layer_dims
    chunks = []
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        limit = _INIT_GAIN * np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


class NodeModel:
    """Noise predictor for one node.

    `conditioning` is the ordered list of node indices whose sampled values
    are fed alongside the noised value; `T` fixes the time feature t / T.
    The input dimension must equal ``1 + len(conditioning) + 1``.
    """

    def __init__(self, spec: NetSpec, conditioning, T: int, params=None):
        self.spec = spec
        self.conditioning = tuple(int(c) for c in conditioning)
        self.T = int(T)
        if self.T < 1:
            raise ValueError("T must be positive")
        if spec.input_dim != 1 + len(self.conditioning) + 1:
            raise ValueError(
                f"input_dim {spec.input_dim} != 1 + {len(self.conditioning)} + 1"
            )
        if params is None:
            params = _init_params(spec)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (spec.param_count,):
            raise ValueError(f"expected {spec.param_count} parameters")
        self.params = params

    def layers(self, params=None):
        """Views (W, b) per layer into the flat parameter vector."""
        params = self.params if params is None else params
        dims = self.spec.layer_dims
        out = []
        off = 0
        for k in range(len(dims) - 1):
            n_w = dims[k] * dims[k + 1]
            w = params[off : off + n_w].reshape(dims[k], dims[k + 1])
            off += n_w
            b = params[off : off + dims[k + 1]]
            off += dims[k + 1]
            out.append((w, b))
        return out

    def time_feature(self, t) -> np.ndarray:
        return np.asarray(t, dtype=np.float64) / self.T


def _forward_cached(model: NodeModel, x: np.ndarray):
    """Batch forward pass; returns (output column, per-layer activations)."""
    acts = [x]
    layers = model.layers()
    h = x
    for k, (w, b) in enumerate(layers):
        z = h @ w + b
        h = z if k == len(layers) - 1 else np.tanh(z)
        acts.append(h)
    return h[:, 0], acts


def forward_batch(model: NodeModel, noised: np.ndarray, cond: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Vectorized forward over a batch of (noised value, conditioning row, t)."""
    noised = np.asarray(noised, dtype=np.float64)
    n = noised.shape[0]
    cond = np.asarray(cond, dtype=np.float64).reshape(n, len(model.conditioning))
    x = np.column_stack([noised, cond, model.time_feature(t) * np.ones(n)])
    out, _ = _forward_cached(model, x)
    return out


def forward(model: NodeModel, noised_value: float, conditioning_values, t: int) -> float:
    """Predicted noise for one input.  Deterministic given the parameters."""
    cond = np.asarray(conditioning_values, dtype=np.float64).reshape(-1)
    if cond.shape[0] != len(model.conditioning):
        raise ValueError(
            f"expected {len(model.conditioning)} conditioning values, got {cond.shape[0]}"
        )
    if not (1 <= t <= model.T):
        raise ValueError(f"t={t} out of range 1..{model.T}")
    if not np.isfinite(noised_value) or not np.all(np.isfinite(cond)):
        raise ValueError("inputs must be finite")
    out = forward_batch(model, np.array([noised_value]), cond.reshape(1, -1), np.array([t]))
    return float(out[0])


@dataclass
class Batch:
    """Training batch: clean values, conditioning rows, steps, true noise."""

    x0: np.ndarray
    cond: np.ndarray
    t: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1)
        n = self.x0.shape[0]
        if n == 0:
            raise ValueError("empty batch")
        self.cond = np.asarray(self.cond, dtype=np.float64).reshape(n, -1)
        self.t = np.asarray(self.t, dtype=np.int64).reshape(n)
        self.eps = np.asarray(self.eps, dtype=np.float64).reshape(n)


def loss_and_gradient(model: NodeModel, batch: Batch, alpha: np.ndarray):
    """Mean squared error of the noise prediction and its exact gradient.

    The prediction is evaluated on the forward-noised input
    ``sqrt(alpha_t) * x0 + sqrt(1 - alpha_t) * eps``; `alpha` is the vector
    of cumulative scale factors indexed by t = 1..T.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(batch.t < 1) or np.any(batch.t > alpha.shape[0]):
        raise ValueError("batch steps out of schedule range")
    a_t = alpha[batch.t - 1]
    noised = np.sqrt(a_t) * batch.x0 + np.sqrt(1.0 - a_t) * batch.eps
    n = batch.x0.shape[0]
    if batch.cond.shape[1] != len(model.conditioning):
        raise ValueError("conditioning width mismatch")
    x = np.column_stack([noised, batch.cond, model.time_feature(batch.t)])

    out, acts = _forward_cached(model, x)
    resid = out - batch.eps
    loss = float(np.mean(resid**2))

    grad = np.zeros_like(model.params)
    g_layers = NodeModel(model.spec, model.conditioning, model.T, params=grad).layers()
    delta = (2.0 / n) * resid[:, None]
    layers = model.layers()
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        gw, gb = g_layers[k]
        gw[...] = acts[k].T @ delta
        gb[...] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ w.T) * (1.0 - acts[k] ** 2)
    return loss, grad


@dataclass
class OptimizerState:
    """Adam state: first/second moments, step counter, and hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    learning_rate: float = 1e-4
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def make_optimizer(n_params: int, learning_rate: float = 1e-4) -> OptimizerState:
    return OptimizerState(
        m=np.zeros(n_params), v=np.zeros(n_params), learning_rate=learning_rate
    )


def optimizer_step(state: OptimizerState, params: np.ndarray, grad: np.ndarray):
    """One Adam update; returns (new params, new state), inputs untouched."""
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise ValueError("parameter/gradient/state length mismatch")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad**2
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    new_params = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = OptimizerState(
        m=m,
        v=v,
        step=step,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
    )
    return new_params, new_state


def save_model(model: NodeModel, path) -> None:
    """Write the binary model file and its plain-text metadata sidecar."""
    spec = model.spec
    header = struct.pack("<4sII", _MAGIC, _VERSION, spec.input_dim)
    header += struct.pack("<I", len(spec.hidden))
    header += struct.pack(f"<{len(spec.hidden)}I", *spec.hidden)
    header += struct.pack("<Iq", spec.output_dim, spec.init_seed)
    header += struct.pack("<II", model.T, len(model.conditioning))
    if model.conditioning:
        header += struct.pack(f"<{len(model.conditioning)}I", *model.conditioning)
    header += struct.pack("<Q", model.params.shape[0])
    body = model.params.astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header + body)
    meta = [
        f"input_dim = {spec.input_dim}",
        f"hidden = {' '.join(map(str, spec.hidden))}",
        f"output_dim = {spec.output_dim}",
        f"init_seed = {spec.init_seed}",
        f"T = {model.T}",
        f"conditioning = {' '.join(map(str, model.conditioning))}",
        f"param_count = {model.params.shape[0]}",
    ]
    with open(str(path) + ".meta.txt", "w") as fh:
        fh.write("\n".join(meta) + "\n")


def load_model(path) -> NodeModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        vals = struct.unpack_from(fmt, raw, off)
        off += size
        return vals

    magic, version, input_dim = take("<4sII")
    if magic != _MAGIC:
        raise ValueError(f"not a model file: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"unsupported model file version {version}")
    (n_hidden,) = take("<I")
    hidden = take(f"<{n_hidden}I") if n_hidden else ()
    output_dim, init_seed = take("<Iq")
    T, n_cond = take("<II")
    conditioning = take(f"<{n_cond}I") if n_cond else ()
    (n_params,) = take("<Q")
    params = np.frombuffer(raw, dtype="<f8", count=n_params, offset=off).astype(np.float64)
    spec = NetSpec(
        input_dim=input_dim, hidden=tuple(hidden), output_dim=output_dim, init_seed=init_seed
    )
    return NodeModel(spec, conditioning, T, params=params)
