"""Per-method control-flow graphs, dominators and branch membership sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .tir import Goto, If, MethodDef, Return

ENTRY = "<entry>"
EXIT = "<exit>"


@dataclass
class Cfg:
    """Statement-level CFG. Nodes are statement labels plus ENTRY and EXIT."""

    method: Optional[MethodDef]
    nodes: list[str]
    succ: dict[str, list[str]]
    pred: dict[str, list[str]]
    # if-node -> (true successor, false successor)
    branches: dict[str, tuple[str, str]] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[tuple[str, str]],
                   branches: Optional[dict[str, tuple[str, str]]] = None,
                   method: Optional[MethodDef] = None) -> "Cfg":
        nodes = list(nodes)
        succ = {n: [] for n in nodes}
        pred = {n: [] for n in nodes}
        for a, b in edges:
            if b not in succ[a]:
                succ[a].append(b)
                pred[b].append(a)
        return cls(method, nodes, succ, pred, dict(branches or {}))

    @property
    def statements(self) -> list[str]:
        return [n for n in self.nodes if n not in (ENTRY, EXIT)]


def build_cfg(m: MethodDef) -> Cfg:
    labels = [s.label for s in m.body]
    edges = [(ENTRY, labels[0])]
    branches = {}
    for i, s in enumerate(m.body):
        nxt = labels[i + 1] if i + 1 < len(labels) else None
        ins = s.instr
        if isinstance(ins, Return):
            edges.append((s.label, EXIT))
        elif isinstance(ins, Goto):
            edges.append((s.label, ins.target))
        elif isinstance(ins, If):
            # validation guarantees an if is never the last statement
            edges.append((s.label, ins.target))
            edges.append((s.label, nxt))
            branches[s.label] = (ins.target, nxt)
        else:
            edges.append((s.label, nxt))
    return Cfg.from_edges([ENTRY, *labels, EXIT], edges, branches, m)


def reverse_postorder(g: Cfg, root: str = ENTRY) -> list[str]:
    seen = {root}
    order = []
    stack = [(root, iter(g.succ[root]))]
    while stack:
        node, it = stack[-1]
        for s in it:
            if s not in seen:
                seen.add(s)
                stack.append((s, iter(g.succ[s])))
                break
        else:
            stack.pop()
            order.append(node)
    order.reverse()
    return order


@dataclass
class DomTree:
    idom: dict[str, str]
    root: str = ENTRY

    @property
    def reachable(self) -> set[str]:
        return set(self.idom) | {self.root}

    def dominates(self, d: str, n: str) -> bool:
        """Non-strict dominance; False for unreachable nodes."""
        if n not in self.reachable or d not in self.reachable:
            return False
        while True:
            if n == d:
                return True
            if n == self.root:
                return False
            n = self.idom[n]

    def strictly_dominates(self, d: str, n: str) -> bool:
        return d != n and self.dominates(d, n)

    def dominated_by(self, d: str) -> set[str]:
        """All nodes strictly dominated by d."""
        return {n for n in self.idom if self.strictly_dominates(d, n)}


def compute_dominators(g: Cfg, root: str = ENTRY) -> DomTree:
    """Immediate dominators by the iterative reverse-postorder fixpoint
    (Cooper, Harvey and Kennedy). Unreachable nodes get no entry."""
    order = reverse_postorder(g, root)
    rank = {n: i for i, n in enumerate(order)}
    idom: dict[str, str] = {root: root}

    def intersect(a: str, b: str) -> str:
        while a != b:
            while rank[a] > rank[b]:
                a = idom[a]
            while rank[b] > rank[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for n in order[1:]:
            preds = [p for p in g.pred[n] if p in idom]
            new = preds[0]
            for p in preds[1:]:
                new = intersect(p, new)
            if idom.get(n) != new:
                idom[n] = new
                changed = True
    del idom[root]
    return DomTree(idom, root)


def _reach_without(g: Cfg, start: str, removed: str) -> set[str]:
    if start == removed:
        return set()
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for s in g.succ[n]:
            if s != removed and s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


@dataclass(frozen=True)
class BranchSets:
    true_branch: frozenset[str]
    false_branch: frozenset[str]

    @property
    def guarded(self) -> frozenset[str]:
        return self.true_branch | self.false_branch


def branch_sets(g: Cfg, dom: DomTree, c: str) -> BranchSets:
    """True/false guarded statements of the conditional at label `c`.

    A statement belongs to the true branch when `c` strictly dominates it and,
    with `c` removed from the graph, it is reachable from the true successor
    but not from the false one (and symmetrically). Join points reachable from
    both successors belong to neither branch.
    """
    t_succ, f_succ = g.branches[c]
    from_t = _reach_without(g, t_succ, c)
    from_f = _reach_without(g, f_succ, c)
    dominated = dom.dominated_by(c)
    dominated.discard(EXIT)
    return BranchSets(
        frozenset(n for n in from_t - from_f if n in dominated),
        frozenset(n for n in from_f - from_t if n in dominated),
    )


def to_dot(g: Cfg, dom: Optional[DomTree] = None) -> str:
    name = g.method.key if g.method is not None else "cfg"
    lines = [f'digraph "{name}" {{']
    for n in g.nodes:
        lines.append(f'  "{n}";')
    for n in g.nodes:
        br = g.branches.get(n)
        for s in g.succ[n]:
            attr = ""
            if br is not None:
                kind = "T/F" if br[0] == br[1] else ("T" if s == br[0] else "F")
                attr = f' [label="{kind}"]'
            lines.append(f'  "{n}" -> "{s}"{attr};')
    if dom is not None:
        for n, d in dom.idom.items():
            lines.append(f'  "{d}" -> "{n}" [style=dashed, color=gray];')
    lines.append("}")
    return "\n".join(lines) + "\n"
