"""Triggers: a taint-confirmed conditional together with the statements it guards."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .catalog import family
from .cfg import BranchSets, Cfg, DomTree, branch_sets, build_cfg, compute_dominators
from .taint import EntryPointHit
from .tir import If, Program, format_instr


@dataclass(frozen=True)
class Trigger:
    method: str
    label: str
    condition: str
    variables: tuple[str, ...]
    true_branch: frozenset[str]
    false_branch: frozenset[str]
    sources: frozenset[str]

    @property
    def guarded(self) -> frozenset[str]:
        return self.true_branch | self.false_branch

    @property
    def trigger_type(self) -> str:
        return trigger_type(self)

    def swapped(self) -> "Trigger":
        return Trigger(self.method, self.label, self.condition, self.variables,
                       self.false_branch, self.true_branch, self.sources)


class MethodGraphs:
    """Lazily built CFG and dominator tree per method of one program."""

    def __init__(self, p: Program):
        self.methods = p.method_map()
        self._cache: dict[str, tuple[Cfg, DomTree]] = {}

    def __getitem__(self, key: str) -> tuple[Cfg, DomTree]:
        if key not in self._cache:
            g = build_cfg(self.methods[key])
            self._cache[key] = (g, compute_dominators(g))
        return self._cache[key]

    def cfg(self, key: str) -> Cfg:
        return self[key][0]


def make_trigger(graphs: MethodGraphs, method: str, label: str, sources: Iterable[str]) -> Trigger:
    g, dom = graphs[method]
    ins = g.method.statement(label).instr
    if not isinstance(ins, If):
        raise ValueError(f"{method}:{label} is not a conditional")
    bs: BranchSets = branch_sets(g, dom, label)
    return Trigger(method, label, format_instr(ins), ins.variables,
                   bs.true_branch, bs.false_branch, frozenset(sources))


def extract_triggers(hits: Iterable[EntryPointHit], program: Program,
                     graphs: Optional[MethodGraphs] = None) -> list[Trigger]:
    """One trigger per hit, with branch sets computed on the original
    (uninstrumented) program."""
    graphs = graphs or MethodGraphs(program)
    return [make_trigger(graphs, h.method, h.label, h.sources) for h in hits]


def trigger_type(t: Trigger) -> str:
    fams = sorted({family(s) for s in t.sources})
    if not fams:
        raise ValueError("trigger has no provenance")
    return fams[0] if len(fams) == 1 else "Mixed"
