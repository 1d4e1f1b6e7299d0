"""Small immutable DAGs over named variables.

Edge-list text format (one edge per line, ``#`` starts a comment)::

    theta -> a
    a -> x
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import CycleError, UnknownNodeError

# canonical variable order used for every matrix layout downstream
CANONICAL_ORDER = ("theta", "a", "x", "y")


@dataclass(frozen=True)
class Dag:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"duplicate node names in {self.nodes}")
        known = set(self.nodes)
        for cause, effect in self.edges:
            for end in (cause, effect):
                if end not in known:
                    raise UnknownNodeError(f"edge {cause} -> {effect} uses undeclared node {end!r}")
        # raises CycleError
        object.__setattr__(self, "_order", _kahn(self.nodes, self.edges))

    def parents(self, node: str) -> frozenset[str]:
        if node not in self.nodes:
            raise UnknownNodeError(f"unknown node {node!r}")
        return frozenset(c for c, e in self.edges if e == node)

    def ordered_parents(self, node: str) -> tuple[str, ...]:
        """Parents of ``node`` in declared node order."""
        ps = self.parents(node)
        return tuple(n for n in self.nodes if n in ps)

    def topological_order(self) -> tuple[str, ...]:
        return self._order  # type: ignore[attr-defined]

    def to_edgelist(self) -> str:
        idx = {n: i for i, n in enumerate(self.nodes)}
        lines = [f"{c} -> {e}" for c, e in sorted(self.edges, key=lambda ce: (idx[ce[0]], idx[ce[1]]))]
        return "\n".join(lines) + ("\n" if lines else "")

    def __repr__(self) -> str:
        body = ", ".join(f"{c}->{e}" for c, e in sorted(self.edges))
        return f"Dag({list(self.nodes)}, {{{body}}})"


def build_dag(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> Dag:
    return Dag(tuple(nodes), frozenset((str(c), str(e)) for c, e in edges))


def parents(dag: Dag, node: str) -> frozenset[str]:
    return dag.parents(node)


def topological_order(dag: Dag) -> tuple[str, ...]:
    return dag.topological_order()


def _kahn(nodes: tuple[str, ...], edges: frozenset[tuple[str, str]]) -> tuple[str, ...]:
    # Kahn's algorithm; among ready nodes always take the earliest declared one
    indeg = {n: 0 for n in nodes}
    children: dict[str, list[str]] = {n: [] for n in nodes}
    for c, e in edges:
        indeg[e] += 1
        children[c].append(e)
    rank = {n: i for i, n in enumerate(nodes)}
    order: list[str] = []
    ready = sorted((n for n in nodes if indeg[n] == 0), key=rank.__getitem__)
    while ready:
        n = ready.pop(0)
        order.append(n)
        for ch in children[n]:
            indeg[ch] -= 1
            if indeg[ch] == 0:
                ready.append(ch)
        ready.sort(key=rank.__getitem__)
    if len(order) != len(nodes):
        stuck = [n for n in nodes if n not in order]
        raise CycleError(f"edges contain a directed cycle through {stuck}")
    return tuple(order)


def parse_edgelist(text: str, nodes: Iterable[str] | None = None) -> Dag:
    """Parse ``cause -> effect`` lines. Nodes default to the canonical
    variables that appear, followed by any others in order of appearance."""
    edges = []
    seen: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ValueError(f"line {lineno}: expected 'cause -> effect', got {raw!r}")
        cause, effect = (s.strip() for s in line.split("->", 1))
        if not cause or not effect:
            raise ValueError(f"line {lineno}: empty endpoint in {raw!r}")
        edges.append((cause, effect))
        for n in (cause, effect):
            if n not in seen:
                seen.append(n)
    if nodes is None:
        nodes = [n for n in CANONICAL_ORDER if n in seen] + [n for n in seen if n not in CANONICAL_ORDER]
    return build_dag(nodes, edges)


# The DAGs used throughout. G_STAR is the true model, G the subjective one,
# G_STAR_STAR the exogeneity-only truth and G_REVERSE the reverse-only belief.
G_STAR = build_dag(CANONICAL_ORDER, [("theta", "a"), ("theta", "x"), ("a", "x"), ("x", "y"), ("a", "y")])
G = build_dag(CANONICAL_ORDER, [("theta", "a"), ("theta", "x"), ("a", "x"), ("y", "x")])
G_STAR_STAR = build_dag(CANONICAL_ORDER, [("theta", "a"), ("theta", "x"), ("a", "x"), ("y", "x"), ("a", "y")])
G_REVERSE = G_STAR_STAR
