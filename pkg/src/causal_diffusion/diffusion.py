"""Noise schedule, DDIM decoding, and the two causal samplers.

Training fits one noise predictor per decodable node on normalized
observational data.  The plain sampler (dcm) conditions each decoder on the
node's observed parents; the backdoor sampler (bdcm) conditions on an
adjustment set for (intervened node, node), plus the intervened node itself
when it is a parent.  Sampling walks the topological order: intervened node
-> clamped value, nodes with no observed parents -> resampled from the
training column (empirical store), anything else -> DDIM decode driven by a
fresh standard-normal draw.  Unobserved nodes are skipped entirely and come
back as masked NaN columns.

A trained model is query-specific in bdcm mode: the intervened node is fixed
at training time, the intervened value only enters at sampling and can be
swapped with :func:`with_query`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .graph import Dag, find_adjustment_set, format_dag_text, parse_dag_text, topological_order
from .neural import Batch, NetSpec, NodeModel, forward_batch, load_model, loss_and_gradient, make_optimizer, optimizer_step, save_model
from .scm import Intervention, MaskedColumnError, SampleMatrix

ROLE_ROOT = "root"
ROLE_INTERVENED = "intervened"
ROLE_DECODER = "decoder"


class DecodeDivergedError(FloatingPointError):
    """A decode step produced a non-finite intermediate value."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite value at decode step t={step}")


class AdjustmentSetNotFoundError(ValueError):
    """No observed adjustment set exists for a required (cause, node) pair."""

    def __init__(self, cause: int, node: int):
        self.pair = (cause, node)
        super().__init__(
            f"no observed adjustment set for intervened node {cause} and node {node}"
        )


@dataclass(frozen=True)
class NoiseSchedule:
    """Linear beta schedule with cumulative-product scale factors.

    beta_t = 1e-4 + (t - 1) * (0.1 - 1e-4) / (T - 1) for t = 1..T, and
    alpha_t is the running product of (1 - beta_i); alpha_0 is defined as 1.
    """

    T: int
    beta: np.ndarray
    alpha: np.ndarray

    def alpha_at(self, t: int) -> float:
        """alpha_t with the t = 0 boundary value of 1."""
        if t == 0:
            return 1.0
        return float(self.alpha[t - 1])


def make_schedule(T: int) -> NoiseSchedule:
    if T < 2:
        raise ValueError("schedule needs T >= 2")
    beta = np.linspace(1e-4, 0.1, T)
    alpha = np.cumprod(1.0 - beta)
    return NoiseSchedule(T=T, beta=beta, alpha=alpha)


def forward_noise(x0, t: int, eps, sched: NoiseSchedule):
    """sqrt(alpha_t) * x0 + sqrt(1 - alpha_t) * eps."""
    if not (1 <= t <= sched.T):
        raise ValueError(f"t={t} out of range 1..{sched.T}")
    a_t = sched.alpha[t - 1]
    return np.sqrt(a_t) * x0 + np.sqrt(1.0 - a_t) * eps


def decode_batch(model: NodeModel, z: np.ndarray, cond: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Deterministic reverse-diffusion decode of a batch of latents."""
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    cond = np.asarray(cond, dtype=np.float64).reshape(n, len(model.conditioning))
    if model.T != sched.T:
        raise ValueError(f"model trained with T={model.T}, schedule has T={sched.T}")
    x = z.copy()
    for t in range(sched.T, 0, -1):
        a_t = sched.alpha[t - 1]
        a_prev = sched.alpha_at(t - 1)
        eps_hat = forward_batch(model, x, cond, np.full(n, t))
        scale = np.sqrt(a_prev / a_t)
        shift = np.sqrt(a_prev * (1.0 - a_t) / a_t) - np.sqrt(1.0 - a_prev)
        x = scale * x - eps_hat * shift
        if not np.all(np.isfinite(x)):
            raise DecodeDivergedError(t)
    return x


def decode(model: NodeModel, z: float, conditioning_values, sched: NoiseSchedule) -> float:
    """Decode a single latent; `z` is the caller's standard-normal draw."""
    cond = np.asarray(conditioning_values, dtype=np.float64).reshape(1, -1)
    out = decode_batch(model, np.array([float(z)]), cond, sched)
    return float(out[0])


@dataclass(frozen=True)
class TrainConfig:
    """Training knobs; defaults match the benchmark protocol."""

    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-4
    T: int = 100
    seed: int = 0
    hidden: tuple[int, ...] = (128, 256, 256)
    # bdcm only: per-node adjustment-set override, node -> set of nodes
    adjustment_sets: dict | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.T < 2:
            raise ValueError("epochs, batch_size and T must be positive (T >= 2)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainedCausalModel:
    """Everything sampling needs: roles, per-node models, empirical stores."""

    dag: Dag
    order: tuple[int, ...]
    mode: str
    roles: dict[int, str]
    models: dict[int, NodeModel]
    stores: dict[int, np.ndarray]
    schedule: NoiseSchedule
    normalization: tuple | None = None
    query: tuple[int, float] | None = None
    adjustment_sets: dict[int, frozenset[int]] | None = None


def with_query(model: TrainedCausalModel, value: float) -> TrainedCausalModel:
    """Copy of a bdcm model with the intervened value replaced."""
    if model.mode != "bdcm" or model.query is None:
        raise ValueError("with_query applies to bdcm models only")
    return replace(model, query=(model.query[0], float(value)))


def _check_data(data: SampleMatrix, dag: Dag):
    if data.node_count != dag.node_count:
        raise ValueError("data column count does not match the graph")
    if data.observed_mask != dag.observed:
        raise ValueError("data observability mask does not match the graph")


def _fit_node(
    data: SampleMatrix,
    node: int,
    conditioning: tuple[int, ...],
    sched: NoiseSchedule,
    config: TrainConfig,
) -> NodeModel:
    """Fit one noise predictor by minibatch Adam on the denoising loss.

    The random stream depends only on (config.seed, node), so alternative
    conditioning choices for the same node train against identical batch
    shuffles and noise draws; method comparisons become paired.
    """
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, node)))
    x0 = np.array(data.column(node))
    cond = (
        np.column_stack([data.column(c) for c in conditioning])
        if conditioning
        else np.empty((x0.shape[0], 0))
    )
    spec = NetSpec(
        input_dim=1 + len(conditioning) + 1,
        hidden=config.hidden,
        init_seed=int(rng.integers(0, 2**63 - 1)),
    )
    model = NodeModel(spec, conditioning, sched.T)
    params = model.params
    state = make_optimizer(params.shape[0], config.learning_rate)
    n = x0.shape[0]
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            batch = Batch(
                x0=x0[idx],
                cond=cond[idx],
                t=rng.integers(1, sched.T + 1, size=idx.shape[0]),
                eps=rng.standard_normal(idx.shape[0]),
            )
            model.params = params
            _, grad = loss_and_gradient(model, batch, sched.alpha)
            params, state = optimizer_step(state, params, grad)
    model.params = params
    return model


def train_dcm(
    data: SampleMatrix, dag: Dag, sched: NoiseSchedule, config: TrainConfig
) -> TrainedCausalModel:
    """Fit the parent-conditioned sampler.

    Observed nodes with no observed parents become empirical stores; every
    other observed node gets a decoder conditioned on its observed parents.
    Unobserved nodes are skipped.
    """
    _check_data(data, dag)
    order = topological_order(dag)
    roles: dict[int, str] = {}
    models: dict[int, NodeModel] = {}
    stores: dict[int, np.ndarray] = {}
    for node in order:
        if not dag.is_observed(node):
            continue
        observed_parents = tuple(sorted(p for p in dag.parents(node) if dag.is_observed(p)))
        if not observed_parents:
            roles[node] = ROLE_ROOT
            stores[node] = np.array(data.column(node))
        else:
            roles[node] = ROLE_DECODER
            models[node] = _fit_node(data, node, observed_parents, sched, config)
    return TrainedCausalModel(
        dag=dag,
        order=order,
        mode="dcm",
        roles=roles,
        models=models,
        stores=stores,
        schedule=sched,
        normalization=data.normalization,
    )


def train_bdcm(
    data: SampleMatrix,
    dag: Dag,
    iv: Intervention,
    sched: NoiseSchedule,
    config: TrainConfig,
) -> TrainedCausalModel:
    """Fit the backdoor-adjusted sampler for interventions on ``iv.node``.

    Each decoder node i is conditioned on an adjustment set for
    (iv.node, i) -- found by exhaustive search unless overridden in
    ``config.adjustment_sets`` -- plus iv.node itself when it is a parent
    of i.  Conditioning inputs are fed in ascending node order.
    """
    _check_data(data, dag)
    j = iv.node
    if not (1 <= j <= dag.node_count):
        raise ValueError(f"intervened node {j} out of range")
    if not dag.is_observed(j):
        raise MaskedColumnError(f"intervened node {j} is unobserved")
    order = topological_order(dag)
    position = {node: k for k, node in enumerate(order)}
    overrides = config.adjustment_sets or {}
    roles: dict[int, str] = {}
    models: dict[int, NodeModel] = {}
    stores: dict[int, np.ndarray] = {}
    adjustment: dict[int, frozenset[int]] = {}
    for node in order:
        if not dag.is_observed(node):
            continue
        if node == j:
            roles[node] = ROLE_INTERVENED
            continue
        observed_parents = tuple(sorted(p for p in dag.parents(node) if dag.is_observed(p)))
        if not observed_parents:
            roles[node] = ROLE_ROOT
            stores[node] = np.array(data.column(node))
            continue
        if node in overrides:
            b_set = frozenset(overrides[node])
        else:
            found = find_adjustment_set(dag, j, node)
            if found is None:
                raise AdjustmentSetNotFoundError(j, node)
            b_set = found
        if any(not dag.is_observed(b) for b in b_set):
            raise ValueError(f"adjustment set for node {node} contains unobserved nodes")
        conditioning = set(b_set)
        if j in dag.parents(node):
            conditioning.add(j)
        conditioning = tuple(sorted(conditioning))
        late = [c for c in conditioning if position[c] >= position[node]]
        if late:
            raise ValueError(
                f"adjustment set for node {node} includes {late}, which are not "
                "sampled before it in topological order"
            )
        roles[node] = ROLE_DECODER
        adjustment[node] = b_set
        models[node] = _fit_node(data, node, conditioning, sched, config)
    return TrainedCausalModel(
        dag=dag,
        order=order,
        mode="bdcm",
        roles=roles,
        models=models,
        stores=stores,
        schedule=sched,
        normalization=data.normalization,
        query=(j, float(iv.value)),
        adjustment_sets=adjustment,
    )


def _sample(model: TrainedCausalModel, j: int, gamma: float, n: int, seed: int) -> SampleMatrix:
    if n < 1:
        raise ValueError("need at least one sample")
    dag = model.dag
    if not (1 <= j <= dag.node_count):
        raise ValueError(f"intervened node {j} out of range")
    if not dag.is_observed(j):
        raise MaskedColumnError(f"intervened node {j} is unobserved")
    rng = np.random.default_rng(seed)
    out = np.full((n, dag.node_count), np.nan)
    for node in model.order:
        if not dag.is_observed(node):
            continue
        if node == j:
            out[:, node - 1] = gamma
        elif model.roles[node] == ROLE_ROOT:
            out[:, node - 1] = rng.choice(model.stores[node], size=n, replace=True)
        else:
            node_model = model.models[node]
            cond = out[:, [c - 1 for c in node_model.conditioning]]
            if not np.all(np.isfinite(cond)):
                raise ValueError(f"conditioning for node {node} not sampled yet")
            z = rng.standard_normal(n)
            out[:, node - 1] = decode_batch(node_model, z, cond, model.schedule)
    return SampleMatrix(
        data=out, observed_mask=dag.observed, normalization=model.normalization
    )


def sample_dcm(model: TrainedCausalModel, iv: Intervention, n: int, seed: int) -> SampleMatrix:
    """Draw n rows from the parent-conditioned sampler under do(iv)."""
    if model.mode != "dcm":
        raise ValueError("sample_dcm needs a model trained by train_dcm")
    return _sample(model, iv.node, float(iv.value), n, seed)


def sample_bdcm(model: TrainedCausalModel, n: int, seed: int) -> SampleMatrix:
    """Draw n rows from the backdoor-adjusted sampler at its recorded query."""
    if model.mode != "bdcm":
        raise ValueError("sample_bdcm needs a model trained by train_bdcm")
    if model.query is None:
        raise ValueError("bdcm model has no recorded query")
    j, gamma = model.query
    return _sample(model, j, gamma, n, seed)


def save_bundle(model: TrainedCausalModel, directory) -> None:
    """Persist a trained model as per-node files plus a json manifest."""
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "format": "causal-diffusion-bundle",
        "version": 1,
        "mode": model.mode,
        "T": model.schedule.T,
        "dag": format_dag_text(model.dag),
        "order": list(model.order),
        "roles": {str(k): v for k, v in sorted(model.roles.items())},
        "query": list(model.query) if model.query else None,
        "adjustment_sets": (
            {str(k): sorted(v) for k, v in sorted(model.adjustment_sets.items())}
            if model.adjustment_sets is not None
            else None
        ),
        "normalization": (
            [list(t) if t is not None else None for t in model.normalization]
            if model.normalization is not None
            else None
        ),
        "models": {str(k): f"model_{k}.bin" for k in sorted(model.models)},
        "stores": {str(k): f"store_{k}.npy" for k in sorted(model.stores)},
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for node, node_model in model.models.items():
        save_model(node_model, os.path.join(directory, f"model_{node}.bin"))
    for node, store in model.stores.items():
        np.save(os.path.join(directory, f"store_{node}.npy"), store)


def load_bundle(directory) -> TrainedCausalModel:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "causal-diffusion-bundle":
        raise ValueError("not a model bundle")
    dag = parse_dag_text(manifest["dag"])
    models = {
        int(k): load_model(os.path.join(directory, fname))
        for k, fname in manifest["models"].items()
    }
    stores = {
        int(k): np.load(os.path.join(directory, fname))
        for k, fname in manifest["stores"].items()
    }
    normalization = manifest["normalization"]
    if normalization is not None:
        normalization = tuple(tuple(t) if t is not None else None for t in normalization)
    adjustment = manifest["adjustment_sets"]
    if adjustment is not None:
        adjustment = {int(k): frozenset(v) for k, v in adjustment.items()}
    query = manifest["query"]
    return TrainedCausalModel(
        dag=dag,
        order=tuple(manifest["order"]),
        mode=manifest["mode"],
        roles={int(k): v for k, v in manifest["roles"].items()},
        models=models,
        stores=stores,
        schedule=make_schedule(manifest["T"]),
        normalization=normalization,
        query=(int(query[0]), float(query[1])) if query else None,
        adjustment_sets=adjustment,
    )
