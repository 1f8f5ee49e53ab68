"""Structural causal model simulation.

An :class:`Scm` couples a :class:`~causal_diffusion.graph.Dag` with one
structural equation per node, ``x_i = f_i(parent values, u_i)``, and a
pluggable exogenous noise sampler per node (standard normal by default).
Sampling evaluates equations in topological order.  ``apply_do`` performs
graph surgery, and ``sample_interventional`` is the ground-truth oracle all
generative models are scored against.

Observational samples come back as a :class:`SampleMatrix` whose unobserved
columns are blanked (NaN) and guarded: reading a masked column through
``column()`` raises :class:`MaskedColumnError`.  Reads are counted per
column so tests can audit access discipline.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Dag, make_dag, topological_order, with_edges_removed

# equation: (parent values keyed by node, exogenous draws) -> node values
Equation = Callable[[Mapping[int, np.ndarray], np.ndarray], np.ndarray]
# noise sampler for one node: (rng, n) -> n exogenous draws
NoiseSampler = Callable[[np.random.Generator, int], np.ndarray]


class MaskedColumnError(ValueError):
    """An unobserved column was read through the observational interface."""


def standard_normal_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n)


def zero_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.zeros(n)


def constant_noise(value: float) -> NoiseSampler:
    """Noise sampler that always returns `value` (degenerate test hook)."""

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, float(value))

    return sample


@dataclass(frozen=True)
class Intervention:
    """Clamp `node` to `value` via do-surgery."""

    node: int
    value: float


@dataclass(frozen=True)
class Scm:
    dag: Dag
    equations: tuple[Equation, ...]
    noise: tuple[NoiseSampler, ...] = ()

    def __post_init__(self):
        if len(self.equations) != self.dag.node_count:
            raise ValueError("need one equation per node")
        if not self.noise:
            object.__setattr__(
                self, "noise", (standard_normal_noise,) * self.dag.node_count
            )
        if len(self.noise) != self.dag.node_count:
            raise ValueError("need one noise sampler per node")


def with_noise(scm: Scm, sampler: NoiseSampler) -> Scm:
    """Copy of the SCM with every node's noise replaced by `sampler`."""
    return replace(scm, noise=(sampler,) * scm.dag.node_count)


def with_all_observed(scm: Scm) -> Scm:
    """Copy of the SCM with every node marked observed (test hook)."""
    dag = replace(scm.dag, observed=(True,) * scm.dag.node_count)
    return replace(scm, dag=dag)


@dataclass
class SampleMatrix:
    """n x d sample matrix with column masking and normalization metadata.

    ``data`` holds NaN in masked (unobserved) columns.  ``normalization`` is
    one ``(mean, std)`` pair per column, or None for columns carrying no
    transform.  ``read_counts[i-1]`` counts ``column(i)`` calls, including
    rejected reads of masked columns.
    """

    data: np.ndarray
    observed_mask: tuple[bool, ...]
    normalization: tuple | None = None
    read_counts: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("data must be a 2-d matrix")
        if len(self.observed_mask) != self.data.shape[1]:
            raise ValueError("need one observed flag per column")
        self.observed_mask = tuple(bool(b) for b in self.observed_mask)
        if self.read_counts is None:
            self.read_counts = np.zeros(self.data.shape[1], dtype=np.int64)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def node_count(self) -> int:
        return self.data.shape[1]

    def column(self, node: int) -> np.ndarray:
        """Values of node's column.  Masked columns raise; reads are counted."""
        if not (1 <= node <= self.node_count):
            raise ValueError(f"node {node} out of range 1..{self.node_count}")
        self.read_counts[node - 1] += 1
        if not self.observed_mask[node - 1]:
            raise MaskedColumnError(f"node {node} is unobserved")
        return self.data[:, node - 1]


def _evaluate(scm: Scm, n: int, rng: np.random.Generator) -> np.ndarray:
    """Raw n x d evaluation of all equations in topological order."""
    values: dict[int, np.ndarray] = {}
    for node in topological_order(scm.dag):
        u = np.asarray(scm.noise[node - 1](rng, n), dtype=np.float64)
        parents = {p: values[p] for p in scm.dag.parents(node)}
        values[node] = np.asarray(scm.equations[node - 1](parents, u), dtype=np.float64)
    out = np.empty((n, scm.dag.node_count))
    for node, col in values.items():
        out[:, node - 1] = col
    return out


def sample_observational(scm: Scm, n: int, seed: int) -> SampleMatrix:
    """n i.i.d. rows from the SCM; unobserved columns come back blanked."""
    if n < 1:
        raise ValueError("need at least one sample")
    data = _evaluate(scm, n, np.random.default_rng(seed))
    for node in range(1, scm.dag.node_count + 1):
        if not scm.dag.observed[node - 1]:
            data[:, node - 1] = np.nan
    return SampleMatrix(data=data, observed_mask=scm.dag.observed)


def apply_do(scm: Scm, iv: Intervention) -> Scm:
    """Surgery: drop edges into iv.node and clamp its equation to iv.value."""
    dag = with_edges_removed(
        scm.dag, {(p, iv.node) for p in scm.dag.parents(iv.node)}
    )
    value = float(iv.value)

    def clamped(parents, u):
        return np.full(np.shape(u), value)

    equations = list(scm.equations)
    equations[iv.node - 1] = clamped
    return replace(scm, dag=dag, equations=tuple(equations))


def sample_interventional(
    scm: Scm, iv: Intervention, target: int, n: int, seed: int
) -> np.ndarray:
    """Ground-truth oracle: n draws of X_target from the mutilated SCM."""
    if target == iv.node:
        raise ValueError("target must differ from the intervened node")
    mutilated = apply_do(scm, iv)
    data = _evaluate(mutilated, n, np.random.default_rng(seed))
    return data[:, target - 1]


def ate(scm: Scm, cause: int, outcome: int, x_value: float, n: int, seed: int) -> float:
    """Monte-Carlo average treatment effect of do(cause=x_value) vs do(cause=0).

    Both arms share the seed, so x_value=0 yields exactly zero.
    """
    if cause == outcome:
        raise ValueError("cause and outcome must differ")
    treated = sample_interventional(scm, Intervention(cause, x_value), outcome, n, seed)
    control = sample_interventional(scm, Intervention(cause, 0.0), outcome, n, seed)
    return float(np.mean(treated) - np.mean(control))


def normalize(matrix: SampleMatrix) -> SampleMatrix:
    """Z-score each observed column; the (mean, std) transform is recorded.

    Columns with (near-)zero spread keep std 1 so the transform stays
    invertible.
    """
    data = matrix.data.copy()
    transform: list[tuple[float, float] | None] = []
    for node in range(1, matrix.node_count + 1):
        if not matrix.observed_mask[node - 1]:
            transform.append(None)
            continue
        col = matrix.column(node)
        mean = float(np.mean(col))
        std = float(np.std(col))
        if std < 1e-12:
            std = 1.0
        data[:, node - 1] = (col - mean) / std
        transform.append((mean, std))
    return SampleMatrix(
        data=data, observed_mask=matrix.observed_mask, normalization=tuple(transform)
    )


def to_raw(normalization, node: int, value):
    """Map a normalized value of `node` back to raw data space."""
    mean, std = _transform_for(normalization, node)
    return value * std + mean


def to_normalized(normalization, node: int, value):
    """Map a raw value of `node` into normalized space."""
    mean, std = _transform_for(normalization, node)
    return (value - mean) / std


def _transform_for(normalization, node: int) -> tuple[float, float]:
    if normalization is None or normalization[node - 1] is None:
        raise ValueError(f"no normalization recorded for node {node}")
    return normalization[node - 1]


def export_csv(matrix: SampleMatrix, path) -> None:
    """Write the matrix as comma-separated values.

    Layout: a comment line naming the unobserved columns, a header row
    X1..Xd, then one row per sample.  Masked cells are written as nan.
    """
    d = matrix.node_count
    hidden = [str(i) for i in range(1, d + 1) if not matrix.observed_mask[i - 1]]
    lines = ["# unobserved:" + (" " + " ".join(hidden) if hidden else "")]
    lines.append(",".join(f"X{i}" for i in range(1, d + 1)))
    for row in matrix.data:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


SCM_NAMES = ("m1_simple", "m1_complex", "m2_simple", "m2_complex")

# default (cause, outcome) query per built-in model
DEFAULT_QUERY = {
    "m1_simple": (2, 5),
    "m1_complex": (2, 5),
    "m2_simple": (4, 6),
    "m2_complex": (4, 6),
}


def _dag_m1() -> Dag:
    return make_dag(5, {(1, 2), (1, 3), (3, 4), (2, 5), (4, 5)}, unobserved=(1, 4))


def _dag_m2() -> Dag:
    return make_dag(
        6,
        {(1, 2), (2, 3), (3, 4), (3, 5), (2, 6), (4, 6), (5, 6)},
        unobserved=(2,),
    )


def _m1_simple() -> Scm:
    return Scm(
        dag=_dag_m1(),
        equations=(
            lambda p, u: u,
            lambda p, u: p[1] ** 2 + u,
            lambda p, u: 2.0 * p[1] + u,
            lambda p, u: p[3] + u,
            lambda p, u: p[2] + 2.0 * p[4] + u,
        ),
    )


def _m1_complex() -> Scm:
    return Scm(
        dag=_dag_m1(),
        equations=(
            lambda p, u: u,
            lambda p, u: np.sqrt(np.abs(p[1])) * (np.abs(u) + 0.1) / 2.0
            + np.abs(p[1])
            + u / 5.0,
            lambda p, u: 1.0 / (1.0 + (np.abs(u) + 0.1) * np.exp(-p[1])),
            lambda p, u: p[3] + p[3] * u + u,
            lambda p, u: p[2] + p[4] + p[2] * p[4] * u + u,
        ),
    )


def _m2_simple() -> Scm:
    return Scm(
        dag=_dag_m2(),
        equations=(
            lambda p, u: u,
            lambda p, u: p[1] ** 2 + u,
            lambda p, u: p[2] + u,
            lambda p, u: p[3] ** 3 + p[3] + u,
            lambda p, u: p[3] ** 2 + 0.1 + u,
            lambda p, u: p[2] * p[4] + p[2] * p[5] + p[4] * p[5] + u,
        ),
    )


def _m2_complex() -> Scm:
    return Scm(
        dag=_dag_m2(),
        equations=(
            lambda p, u: u,
            lambda p, u: np.sqrt(np.abs(p[1])) * (np.abs(u) + 0.1) / 2.0
            + np.abs(p[1])
            + u / 5.0,
            lambda p, u: 1.0 / (1.0 + (np.abs(u) + 0.1) * np.exp(-p[2])),
            lambda p, u: u * (np.abs(p[3]) + 0.3) / 5.0 + u,
            lambda p, u: 1.0 / (np.sqrt(np.abs(u * p[3])) + 0.1) + u,
            lambda p, u: p[2] ** 2 * p[4] + p[2] * p[5] + p[4] * p[5] + p[2] * u,
        ),
    )


_BUILTINS = {
    "m1_simple": _m1_simple,
    "m1_complex": _m1_complex,
    "m2_simple": _m2_simple,
    "m2_complex": _m2_complex,
}


def builtin_scm(name: str) -> Scm:
    """One of the built-in benchmark SCMs, by name (see SCM_NAMES)."""
    try:
        builder = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown SCM {name!r}; choose one of {SCM_NAMES}") from None
    return builder()
