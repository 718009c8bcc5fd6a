"""Call graph extraction and SCC condensation.

Edge f -> g iff g occurs in the right-hand side of an equation of f.
SCCs are returned callees-first (a valid topological order of the
condensation), computed with Tarjan's algorithm.
"""

from __future__ import annotations

from typing import Dict, List, Set, Tuple

from .lang import App, Fun, Program, Term


def call_graph(program: Program) -> Dict[str, Set[str]]:
    edges: Dict[str, Set[str]] = {name: set() for name in program.order}

    def scan(fname: str, t: Term) -> None:
        if isinstance(t, Fun):
            if t.name in edges:
                edges[fname].add(t.name)
        elif isinstance(t, App):
            scan(fname, t.fn)
            scan(fname, t.arg)

    for name in program.order:
        for eq in program.functions[name].equations:
            scan(name, eq.rhs)
    return edges


def strongly_connected(edges: Dict[str, Set[str]]) -> List[List[str]]:
    """Tarjan; components are emitted callees-first (children before parents)."""
    index: Dict[str, int] = {}
    lowlink: Dict[str, int] = {}
    on_stack: Set[str] = set()
    stack: List[str] = []
    counter = [0]
    components: List[List[str]] = []

    def visit(node: str) -> None:
        index[node] = lowlink[node] = counter[0]
        counter[0] += 1
        stack.append(node)
        on_stack.add(node)
        for succ in sorted(edges.get(node, ())):
            if succ not in index:
                visit(succ)
                lowlink[node] = min(lowlink[node], lowlink[succ])
            elif succ in on_stack:
                lowlink[node] = min(lowlink[node], index[succ])
        if lowlink[node] == index[node]:
            comp = []
            while True:
                n = stack.pop()
                on_stack.discard(n)
                comp.append(n)
                if n == node:
                    break
            components.append(sorted(comp))

    for node in edges:
        if node not in index:
            visit(node)
    return components


def scc_condensation(program: Program) -> List[List[str]]:
    """SCCs of the call graph in dependency order (callees before callers)."""
    return strongly_connected(call_graph(program))


def is_topological(components: List[List[str]], edges: Dict[str, Set[str]]) -> bool:
    """Every call edge points to the same or an earlier component."""
    position = {}
    for i, comp in enumerate(components):
        for n in comp:
            position[n] = i
    for src, dsts in edges.items():
        for dst in dsts:
            if position[dst] > position[src]:
                return False
    return True


def has_self_loop(name: str, edges: Dict[str, Set[str]]) -> bool:
    return name in edges.get(name, ())
