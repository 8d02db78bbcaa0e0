"""Inter-procedural forward taint analysis from catalog sources to the dummy
condition sinks inserted by :mod:`hsoscan.instrument`.

Locals are tracked flow-sensitively with strong updates; static fields are
global and weakly updated. Calls are handled context-insensitively through
per-method summaries (tainted formals in, tainted return out). Bodyless calls
that are not sources pass argument taint through to their result.
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .callgraph import Site
from .catalog import Catalog
from .instrument import Instrumented
from .tir import Assign, BinOp, Call, FieldLoad, FieldStore, Goto, If, MethodDef, Program, Return, Var

# (source signature, call site that produced the value)
Prov = tuple[str, Site]
Taint = frozenset  # of Prov
EMPTY: frozenset = frozenset()

DEFAULT_TIMEOUT_SECS = 60.0


class AnalysisTimeout(Exception):
    pass


@dataclass(frozen=True)
class EntryPointHit:
    method: str
    label: str
    provenance: frozenset

    @property
    def sources(self) -> frozenset[str]:
        return frozenset(sig for sig, _ in self.provenance)


@dataclass(frozen=True)
class TaintResult:
    hits: tuple[EntryPointHit, ...]
    timed_out: bool = False
    # methods whose analysis was interrupted by the timeout
    incomplete: tuple[str, ...] = ()


class _Engine:
    def __init__(self, p: Program, sources: frozenset[str], sinks: dict[str, tuple[str, str]],
                 deadline: Optional[float]):
        self.methods = p.method_map()
        self.sources = sources
        self.sinks = sinks
        self.deadline = deadline
        self.formals: dict[str, list[frozenset]] = {
            k: [EMPTY] * len(m.params) for k, m in self.methods.items()}
        self.ret: dict[str, frozenset] = defaultdict(lambda: EMPTY)
        self.fields: dict[str, frozenset] = defaultdict(lambda: EMPTY)
        self.sink_taint: dict[str, frozenset] = defaultdict(lambda: EMPTY)
        self.callers: dict[str, set[str]] = defaultdict(set)
        self.field_readers: dict[str, set[str]] = defaultdict(set)
        for k, m in self.methods.items():
            for s in m.body:
                call = s.call
                if call is not None and call.key in self.methods:
                    self.callers[call.key].add(k)
                ins = s.instr
                if isinstance(ins, Assign) and isinstance(ins.rhs, FieldLoad):
                    self.field_readers[ins.rhs.signature].add(k)

    def _call_result(self, call: Call, site: Site, env: dict) -> frozenset:
        sig = call.signature
        if sig in self.sources:
            return frozenset({(sig, site)})
        if call.key in self.methods:
            return self.ret[call.key]
        if sig in self.sinks:
            return EMPTY
        out = EMPTY
        for a in call.args:
            out = out | env.get(a, EMPTY)
        return out

    def _transfer(self, key: str, label: str, ins, env: dict) -> dict:
        if not isinstance(ins, Assign):
            return env
        rhs = ins.rhs
        if isinstance(rhs, Var):
            t = env.get(rhs.name, EMPTY)
        elif isinstance(rhs, BinOp):
            t = env.get(rhs.left, EMPTY)
            if isinstance(rhs.right, Var):
                t = t | env.get(rhs.right.name, EMPTY)
        elif isinstance(rhs, FieldLoad):
            t = self.fields[rhs.signature]
        elif isinstance(rhs, Call):
            t = self._call_result(rhs, (key, label), env)
        else:
            t = EMPTY
        if env.get(ins.target, EMPTY) == t:
            return env
        out = dict(env)
        if t:
            out[ins.target] = t
        else:
            out.pop(ins.target, None)
        return out

    def _solve_method(self, m: MethodDef) -> list[dict]:
        """Intra-procedural worklist; returns the in-state of every statement."""
        n = len(m.body)
        index = m.index()
        states: list[Optional[dict]] = [None] * n
        states[0] = {p: t for p, t in zip(m.params, self.formals[m.key]) if t}
        work = [0]
        pending = {0}
        while work:
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise AnalysisTimeout(m.key)
            i = work.pop()
            pending.discard(i)
            s = m.body[i]
            out = self._transfer(m.key, s.label, s.instr, states[i])
            ins = s.instr
            if isinstance(ins, Return):
                succs = []
            elif isinstance(ins, Goto):
                succs = [index[ins.target]]
            elif isinstance(ins, If):
                succs = [index[ins.target], i + 1]
            else:
                succs = [i + 1]
            for j in succs:
                old = states[j]
                if old is None:
                    new = out
                else:
                    new = None
                    for var, t in out.items():
                        cur = old.get(var, EMPTY)
                        if not t <= cur:
                            if new is None:
                                new = dict(old)
                            new[var] = cur | t
                    if new is None:
                        continue
                states[j] = new
                if j not in pending:
                    pending.add(j)
                    work.append(j)
        return [st if st is not None else {} for st in states]

    def _publish(self, m: MethodDef, states: list[dict]) -> set[str]:
        """Push a method's effects into the global summaries; returns the
        methods that must be re-analyzed."""
        dirty: set[str] = set()
        for s, env in zip(m.body, states):
            ins = s.instr
            call = s.call
            if call is not None:
                if call.signature in self.sinks:
                    t = EMPTY
                    for a in call.args:
                        t = t | env.get(a, EMPTY)
                    self.sink_taint[call.signature] |= t
                elif call.key in self.methods and call.signature not in self.sources:
                    formals = self.formals[call.key]
                    for i, a in enumerate(call.args):
                        t = env.get(a, EMPTY)
                        if not t <= formals[i]:
                            formals[i] = formals[i] | t
                            dirty.add(call.key)
            if isinstance(ins, Return) and ins.value is not None:
                t = env.get(ins.value, EMPTY)
                if not t <= self.ret[m.key]:
                    self.ret[m.key] = self.ret[m.key] | t
                    dirty |= self.callers[m.key]
            elif isinstance(ins, FieldStore):
                t = env.get(ins.value, EMPTY)
                if not t <= self.fields[ins.signature]:
                    self.fields[ins.signature] = self.fields[ins.signature] | t
                    dirty |= self.field_readers[ins.signature]
        return dirty

    def run(self) -> TaintResult:
        order = list(self.methods)
        rank = {k: i for i, k in enumerate(order)}
        work = set(order)
        timed_out = False
        incomplete: list[str] = []
        while work:
            key = min(work, key=rank.__getitem__)
            work.discard(key)
            m = self.methods[key]
            try:
                states = self._solve_method(m)
            except AnalysisTimeout:
                timed_out = True
                incomplete = sorted(work | {key})
                break
            work |= self._publish(m, states)
        hits = []
        for sink, t in self.sink_taint.items():
            if t:
                method, label = self.sinks[sink]
                hits.append(EntryPointHit(method, label, t))
        hits.sort(key=lambda h: (h.method, h.label))
        return TaintResult(tuple(hits), timed_out, tuple(incomplete))


def run_taint(p: Program, cat: Catalog, sinks: dict[str, tuple[str, str]],
              sources: Optional[dict[str, str]] = None,
              timeout_secs: Optional[float] = DEFAULT_TIMEOUT_SECS) -> TaintResult:
    """Taint hits for the conditionals of an instrumented program.

    `sinks` maps inserted ``IfClass.ifMethod_k`` names to the original
    conditional; `sources` holds the generated field getters, which are
    treated as sources alongside ``cat.sources``.
    """
    all_sources = frozenset(cat.sources) | frozenset(sources or ())
    deadline = None if timeout_secs is None else time.monotonic() + timeout_secs
    return _Engine(p, all_sources, sinks, deadline).run()


def taint_instrumented(inst: Instrumented, cat: Catalog,
                       timeout_secs: Optional[float] = DEFAULT_TIMEOUT_SECS) -> TaintResult:
    return run_taint(inst.program, cat, inst.sinks, inst.sources, timeout_secs)
