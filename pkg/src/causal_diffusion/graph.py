"""Causal DAG representation and graph algorithms for backdoor adjustment.

Nodes are the integers 1..d.  An edge ``(i, j)`` means a directed edge
``i -> j``.  Each node carries an observability flag; unobserved nodes are
hidden from downstream data consumers but participate fully in the graph
algorithms.

Blocking semantics: a path is blocked by a conditioning set ``z`` if some
interior chain or fork node lies in ``z``, or if some interior collider has
neither itself nor any of its descendants in ``z``.  Adjustment-set search
returns the smallest (then lexicographically least) set of observed
non-descendants of the cause that blocks every backdoor path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace


class CycleError(ValueError):
    """A directed cycle was found where acyclicity is required."""

    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("directed cycle: " + " -> ".join(map(str, self.cycle)))


@dataclass(frozen=True)
class Dag:
    """Directed graph over nodes 1..node_count with per-node observability.

    Acyclicity is not enforced at construction; :func:`topological_order`
    raises :class:`CycleError` when a cycle exists.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]
    observed: tuple[bool, ...] = ()

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        if not self.observed:
            object.__setattr__(self, "observed", (True,) * self.node_count)
        object.__setattr__(self, "observed", tuple(bool(b) for b in self.observed))
        if len(self.observed) != self.node_count:
            raise ValueError("observed flags must have one entry per node")
        for i, j in self.edges:
            if not (1 <= i <= self.node_count and 1 <= j <= self.node_count):
                raise ValueError(f"edge ({i}, {j}) out of range 1..{self.node_count}")
            if i == j:
                raise ValueError(f"self-loop at node {i}")

    def parents(self, node: int) -> set[int]:
        _check_node(self, node)
        return {i for i, j in self.edges if j == node}

    def children(self, node: int) -> set[int]:
        _check_node(self, node)
        return {j for i, j in self.edges if i == node}

    def observed_nodes(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.node_count + 1) if self.observed[i - 1])

    def is_observed(self, node: int) -> bool:
        _check_node(self, node)
        return self.observed[node - 1]


def make_dag(node_count: int, edges, unobserved=()) -> Dag:
    """Build a Dag from an edge iterable and a collection of unobserved nodes."""
    unobserved = set(unobserved)
    for u in unobserved:
        if not (1 <= u <= node_count):
            raise ValueError(f"unobserved node {u} out of range 1..{node_count}")
    observed = tuple(i not in unobserved for i in range(1, node_count + 1))
    return Dag(node_count=node_count, edges=frozenset(edges), observed=observed)


@dataclass(frozen=True)
class Path:
    """A simple path in the skeleton, with per-step arrow orientation.

    ``forward[k]`` is True when the underlying edge is ``nodes[k] -> nodes[k+1]``
    and False when it is ``nodes[k] <- nodes[k+1]``.
    """

    nodes: tuple[int, ...]
    forward: tuple[bool, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(self.forward) != len(self.nodes) - 1:
            raise ValueError("need one orientation per step")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("path nodes must be distinct")

    def __str__(self):
        parts = [str(self.nodes[0])]
        for node, fwd in zip(self.nodes[1:], self.forward):
            parts.append("->" if fwd else "<-")
            parts.append(str(node))
        return "".join(parts)


def _check_node(dag: Dag, node: int):
    if not (1 <= node <= dag.node_count):
        raise ValueError(f"node {node} out of range 1..{dag.node_count}")


def topological_order(dag: Dag) -> tuple[int, ...]:
    """Topological order of the DAG, smallest node index first among ties.

    Raises :class:`CycleError` carrying a witness cycle when the graph is
    cyclic.
    """
    indegree = {i: 0 for i in range(1, dag.node_count + 1)}
    children = {i: [] for i in range(1, dag.node_count + 1)}
    for i, j in dag.edges:
        indegree[j] += 1
        children[i].append(j)
    ready = sorted(i for i, deg in indegree.items() if deg == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in sorted(children[node]):
            indegree[child] -= 1
            if indegree[child] == 0:
                # insertion keeps ready sorted, so ties break on smallest index
                lo = 0
                while lo < len(ready) and ready[lo] < child:
                    lo += 1
                ready.insert(lo, child)
    if len(order) < dag.node_count:
        raise CycleError(_find_cycle(dag, set(indegree) - set(order)))
    return tuple(order)


def _find_cycle(dag: Dag, remaining: set[int]) -> list[int]:
    # every remaining node has a parent among the remaining ones; walk
    # parents until a node repeats, then cut out the loop
    start = min(remaining)
    trail = [start]
    seen = {start: 0}
    node = start
    while True:
        node = min(p for p in dag.parents(node) if p in remaining)
        if node in seen:
            cycle = trail[seen[node]:]
            return cycle + [node]
        seen[node] = len(trail)
        trail.append(node)


def descendants(dag: Dag, x: int) -> set[int]:
    """All nodes reachable from x along directed edges, excluding x."""
    _check_node(dag, x)
    out = set()
    frontier = [x]
    while frontier:
        node = frontier.pop()
        for child in dag.children(node):
            if child not in out:
                out.add(child)
                frontier.append(child)
    out.discard(x)
    return out


def undirected_paths(dag: Dag, x: int, y: int) -> list[Path]:
    """All simple paths between x and y in the skeleton, with orientations.

    Ordered lexicographically by node sequence.
    """
    _check_node(dag, x)
    _check_node(dag, y)
    if x == y:
        raise ValueError("endpoints must differ")
    neighbors = {i: set() for i in range(1, dag.node_count + 1)}
    for i, j in dag.edges:
        neighbors[i].add(j)
        neighbors[j].add(i)
    paths = []

    def extend(trail: list[int], on_trail: set[int]):
        node = trail[-1]
        if node == y:
            forward = tuple((a, b) in dag.edges for a, b in zip(trail, trail[1:]))
            paths.append(Path(nodes=tuple(trail), forward=forward))
            return
        for nxt in sorted(neighbors[node]):
            if nxt not in on_trail:
                trail.append(nxt)
                on_trail.add(nxt)
                extend(trail, on_trail)
                on_trail.discard(nxt)
                trail.pop()

    extend([x], {x})
    paths.sort(key=lambda p: p.nodes)
    return paths


def is_backdoor_path(path: Path, x: int) -> bool:
    """True iff the path's first step enters x (orientation ``x <- .``)."""
    if path.nodes[0] != x:
        raise ValueError(f"path {path} does not start at {x}")
    return not path.forward[0]


def _is_collider(path: Path, k: int) -> bool:
    # interior position k: arrows converge when the left step points right
    # and the right step points left
    return path.forward[k - 1] and not path.forward[k]


def blocks(path: Path, z_set) -> bool:
    """True iff some interior chain or fork node of the path lies in z_set.

    Colliders do not count: membership of a collider node in z_set never
    blocks under this test.
    """
    z_set = set(z_set)
    for k in range(1, len(path.nodes) - 1):
        if path.nodes[k] in z_set and not _is_collider(path, k):
            return True
    return False


def path_blocked(dag: Dag, path: Path, z_set) -> bool:
    """Full d-separation blocking test for one path.

    Blocked iff some interior non-collider is in z_set, or some interior
    collider has neither itself nor any descendant in z_set.
    """
    z_set = set(z_set)
    for k in range(1, len(path.nodes) - 1):
        node = path.nodes[k]
        if _is_collider(path, k):
            if not z_set & ({node} | descendants(dag, node)):
                return True
        elif node in z_set:
            return True
    return False


def satisfies_backdoor(dag: Dag, x: int, y: int, b_set) -> bool:
    """Backdoor criterion for (x, y): b_set contains no descendant of x and
    blocks every path between x and y that starts with an arrow into x."""
    _check_node(dag, x)
    _check_node(dag, y)
    if x == y:
        raise ValueError("cause and outcome must differ")
    b_set = set(b_set)
    if x in b_set or y in b_set:
        raise ValueError("conditioning set may not contain the cause or outcome")
    for b in b_set:
        _check_node(dag, b)
    if b_set & descendants(dag, x):
        return False
    for path in undirected_paths(dag, x, y):
        if is_backdoor_path(path, x) and not path_blocked(dag, path, b_set):
            return False
    return True


def find_adjustment_set(dag: Dag, x: int, y: int):
    """Smallest (then lexicographically least) observed adjustment set for
    (x, y), or None when no subset of the observed nodes satisfies the
    backdoor criterion.

    Candidates exclude x, y and the descendants of x.  Exhaustive subset
    search; intended for small graphs (d <= 20).
    """
    _check_node(dag, x)
    _check_node(dag, y)
    if x == y:
        raise ValueError("cause and outcome must differ")
    banned = {x, y} | descendants(dag, x)
    candidates = [i for i in dag.observed_nodes() if i not in banned]
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            if satisfies_backdoor(dag, x, y, combo):
                return frozenset(combo)
    return None


def parse_dag_text(text: str) -> Dag:
    """Parse the DAG text format.

    First non-blank line: node count ``d``.  Then one line per edge ``i j``.
    Optionally a final line ``unobserved: i k ...`` (the list may be empty;
    when the line is absent every node is observed).
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty DAG description")
    try:
        node_count = int(lines[0])
    except ValueError:
        raise ValueError(f"first line must be the node count, got {lines[0]!r}") from None
    edges = set()
    unobserved = set()
    for ln in lines[1:]:
        if ln.startswith("unobserved:"):
            rest = ln[len("unobserved:"):].split()
            unobserved = {int(tok) for tok in rest}
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {ln!r}, expected 'i j'")
        edges.add((int(parts[0]), int(parts[1])))
    return make_dag(node_count, edges, unobserved)


def format_dag_text(dag: Dag) -> str:
    """Canonical text form of a Dag (inverse of :func:`parse_dag_text`)."""
    lines = [str(dag.node_count)]
    lines.extend(f"{i} {j}" for i, j in sorted(dag.edges))
    hidden = [str(i) for i in range(1, dag.node_count + 1) if not dag.observed[i - 1]]
    lines.append("unobserved:" + (" " + " ".join(hidden) if hidden else ""))
    return "\n".join(lines) + "\n"


def with_edges_removed(dag: Dag, edges_to_drop) -> Dag:
    """Copy of the Dag with the given edges removed."""
    drop = {tuple(e) for e in edges_to_drop}
    return replace(dag, edges=frozenset(e for e in dag.edges if e not in drop))
