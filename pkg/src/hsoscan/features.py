"""The nine trigger features fed to the anomaly detector.

==  =====================================================================
S   distinct sensitive APIs reachable from the guarded code
N   guarded code reaches native code
D   guarded code reaches dynamic class loading
R   guarded code reaches reflection
B   guarded code starts background services
P   a condition variable is read in the guarded code before redefinition
M1  app methods called from the guarded code and from nowhere else
S1  sensitive APIs called only from the guarded code
J   Jaccard distance between the sensitive APIs of the two branches
==  =====================================================================
"""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from typing import Iterable

import numpy as np

from .callgraph import DEFAULT_DEPTH_LIMIT, CallGraph, reachable_calls
from .catalog import Catalog
from .cfg import Cfg
from .tir import defs, uses
from .triggers import Trigger

FEATURE_NAMES = ("S", "N", "D", "R", "B", "P", "M1", "S1", "J")


@dataclass(frozen=True)
class FeatureVector:
    S: int = 0
    N: int = 0
    D: int = 0
    R: int = 0
    B: int = 0
    P: int = 0
    M1: int = 0
    S1: int = 0
    J: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureVector":
        return cls(*(int(d[k]) for k in FEATURE_NAMES[:-1]), float(d["J"]))


def _sites(t: Trigger, labels) -> list[tuple[str, str]]:
    return [(t.method, lbl) for lbl in sorted(labels)]


def _sensitive_reached(t: Trigger, labels, cg: CallGraph, cat: Catalog, depth_limit: int) -> set[str]:
    reach = reachable_calls(cg, _sites(t, labels), depth_limit)
    return {e.call.signature for e in reach.calls
            if not cg.is_app_method(e.callee) and e.call.signature in cat.sensitive}


def feature_S(t: Trigger, cg: CallGraph, cat: Catalog, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> int:
    return len(_sensitive_reached(t, t.guarded, cg, cat, depth_limit))


def feature_flags(t: Trigger, cg: CallGraph, cat: Catalog,
                  depth_limit: int = DEFAULT_DEPTH_LIMIT) -> tuple[int, int, int, int]:
    called = {e.call.signature for e in reachable_calls(cg, _sites(t, t.guarded), depth_limit).calls}
    return tuple(int(bool(called & s)) for s in (cat.native, cat.dynload, cat.reflect, cat.service))


def feature_P(t: Trigger, g: Cfg) -> int:
    """1 if some condition variable may be read inside the guarded code before
    it is redefined there. Paths are followed only through guarded nodes."""
    m = g.method
    body = {s.label: s.instr for s in m.body}
    region = t.guarded
    # live[n]: condition variables not yet redefined on some path reaching n
    live: dict[str, frozenset] = {}
    work = []
    start = frozenset(t.variables)
    for s in g.succ[t.label]:
        if s in region and start:
            live[s] = start
            work.append(s)
    while work:
        n = work.pop()
        ins = body[n]
        cur = live[n]
        if cur & set(uses(ins)):
            return 1
        out = cur - set(defs(ins))
        if not out:
            continue
        for s in g.succ[n]:
            if s in region:
                old = live.get(s, frozenset())
                if not out <= old:
                    live[s] = old | out
                    work.append(s)
    return 0


def feature_M1_S1(t: Trigger, cg: CallGraph, cat: Catalog,
                  depth_limit: int = DEFAULT_DEPTH_LIMIT) -> tuple[int, int]:
    guarded_sites = set(_sites(t, t.guarded))
    direct = [cg.by_site[s] for s in sorted(guarded_sites) if s in cg.by_site]
    m1 = len({e.callee for e in direct
              if cg.is_app_method(e.callee) and cg.incoming_edges(e.callee) == 1})

    reach = reachable_calls(cg, guarded_sites, depth_limit)
    # app methods reached from the guarded code whose every caller is itself
    # guarded (or such a method); greatest fixpoint, so mutual recursion among
    # guarded-only helpers keeps them in.
    only = {k for k in reach.scanned if k not in cg.entries and k != t.method}

    def covered(site) -> bool:
        return site in guarded_sites or site[0] in only

    changed = True
    while changed:
        changed = False
        for k in sorted(only):
            if not all(covered(s) for s in cg.sites_of(k)):
                only.discard(k)
                changed = True

    sensitive = _sensitive_reached(t, t.guarded, cg, cat, depth_limit)
    s1 = sum(1 for sig in sensitive if all(covered(s) for s in cg.sites_by_signature(sig)))
    return m1, s1


def jaccard_distance(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def feature_J(t: Trigger, cg: CallGraph, cat: Catalog, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> float:
    x_true = _sensitive_reached(t, t.true_branch, cg, cat, depth_limit)
    x_false = _sensitive_reached(t, t.false_branch, cg, cat, depth_limit)
    return jaccard_distance(x_true, x_false)


def extract_vector(t: Trigger, g: Cfg, cg: CallGraph, cat: Catalog,
                   depth_limit: int = DEFAULT_DEPTH_LIMIT) -> FeatureVector:
    n, d, r, b = feature_flags(t, cg, cat, depth_limit)
    m1, s1 = feature_M1_S1(t, cg, cat, depth_limit)
    return FeatureVector(
        S=feature_S(t, cg, cat, depth_limit), N=n, D=d, R=r, B=b,
        P=feature_P(t, g), M1=m1, S1=s1,
        J=feature_J(t, cg, cat, depth_limit),
    )


CSV_HEADER = ("app", "method", "label") + FEATURE_NAMES


def write_csv(rows: Iterable[tuple[str, str, str, FeatureVector]], f=None) -> str:
    """Write (app, method, label, vector) rows; returns the text when `f` is None."""
    buf = f if f is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for app, method, label, v in rows:
        w.writerow([app, method, label, *(repr(x) if isinstance(x, float) else x for x in astuple(v))])
    return buf.getvalue() if f is None else ""


def read_csv(f) -> list[tuple[str, str, str, FeatureVector]]:
    out = []
    for row in csv.DictReader(f):
        out.append((row["app"], row["method"], row["label"], FeatureVector.from_dict(row)))
    return out
