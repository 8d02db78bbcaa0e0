"""Whole-program call graph with exact static name resolution."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .tir import Call, MethodDef, Program

DEFAULT_DEPTH_LIMIT = 20

# (method key, statement label)
Site = tuple[str, str]


@dataclass(frozen=True)
class CallEdge:
    site: Site
    call: Call

    @property
    def callee(self) -> str:
        return self.call.key


@dataclass
class CallGraph:
    methods: dict[str, MethodDef]
    edges: list[CallEdge]
    entries: frozenset[str]
    by_site: dict[Site, CallEdge] = field(default_factory=dict)
    callers: dict[str, list[Site]] = field(default_factory=dict)

    def is_app_method(self, key: str) -> bool:
        return key in self.methods

    @property
    def nodes(self) -> set[str]:
        return set(self.methods) | {e.callee for e in self.edges}

    def incoming_edges(self, key: str) -> int:
        return len(self.callers.get(key, ()))

    def sites_of(self, callee: str) -> list[Site]:
        return self.callers.get(callee, [])

    def sites_by_signature(self, sig: str) -> list[Site]:
        """Call sites whose target has catalog name `sig` (any arity)."""
        return [e.site for e in self.edges if e.call.signature == sig]


def build_callgraph(p: Program) -> CallGraph:
    methods = p.method_map()
    edges = []
    by_site = {}
    callers = defaultdict(list)
    for m in p.methods():
        for s in m.body:
            call = s.call
            if call is None:
                continue
            e = CallEdge((m.key, s.label), call)
            edges.append(e)
            by_site[e.site] = e
            callers[e.callee].append(e.site)
    entries = frozenset(m.key for m in p.methods() if m.is_entry)
    return CallGraph(methods, edges, entries, by_site, dict(callers))


@dataclass(frozen=True)
class Reach:
    calls: frozenset[CallEdge]
    # app methods whose bodies were scanned
    scanned: frozenset[str]


def reachable_calls(cg: CallGraph, roots: Iterable[Site], depth_limit: int = DEFAULT_DEPTH_LIMIT) -> Reach:
    """All call edges reachable from the root statements, following app-method
    bodies transitively up to `depth_limit` levels. Each method body is scanned
    at most once."""
    level = [cg.by_site[s] for s in sorted(set(roots)) if s in cg.by_site]
    calls = set(level)
    scanned: set[str] = set()
    depth = 0
    while depth < depth_limit:
        nxt = []
        for e in level:
            key = e.callee
            if key in cg.methods and key not in scanned:
                scanned.add(key)
                for s in cg.methods[key].body:
                    if (key, s.label) in cg.by_site:
                        nxt.append(cg.by_site[(key, s.label)])
        if not nxt:
            break
        calls.update(nxt)
        level = nxt
        depth += 1
    return Reach(frozenset(calls), frozenset(scanned))


def reachable_external_calls(cg: CallGraph, roots: Iterable[Site],
                             depth_limit: int = DEFAULT_DEPTH_LIMIT) -> set[tuple[Site, str]]:
    reach = reachable_calls(cg, roots, depth_limit)
    return {(e.site, e.call.signature) for e in reach.calls if not cg.is_app_method(e.callee)}
