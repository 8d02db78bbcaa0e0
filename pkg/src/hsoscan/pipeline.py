"""End-to-end analysis of one app, training on a corpus, report building and scoring."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .callgraph import DEFAULT_DEPTH_LIMIT, build_callgraph
from .catalog import Catalog
from .features import FeatureVector, extract_vector
from .instrument import instrument
from .ocsvm import SvmModel
from .taint import DEFAULT_TIMEOUT_SECS, taint_instrumented
from .tir import If, Program, TirError, parse_program
from .triggers import MethodGraphs, Trigger, extract_triggers

REPORT_SCHEMA = 1


@dataclass
class TriggerRecord:
    trigger: Trigger
    vector: FeatureVector
    score: Optional[float] = None
    is_outlier: Optional[bool] = None

    def to_dict(self) -> dict:
        t = self.trigger
        return {
            "method": t.method,
            "label": t.label,
            "condition": t.condition,
            "sources": sorted(t.sources),
            "trigger_type": t.trigger_type,
            "true_branch": sorted(t.true_branch),
            "false_branch": sorted(t.false_branch),
            "vector": self.vector.to_dict(),
            "score": self.score,
            "is_outlier": self.is_outlier,
        }


@dataclass
class AppResult:
    app: str
    status: str = "ok"                 # ok | timeout | error
    error: Optional[str] = None
    n_conditions: int = 0
    triggers: list[TriggerRecord] = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def shsos(self) -> list[TriggerRecord]:
        return [r for r in self.triggers if r.is_outlier]

    def to_dict(self, timing: bool = True) -> dict:
        d = {"app": self.app, "status": self.status, "error": self.error,
             "conditions": self.n_conditions, "triggers": [r.to_dict() for r in self.triggers],
             "shsos": len(self.shsos)}
        if timing:
            d["timing"] = {k: round(v, 6) for k, v in self.timing.items()}
        return d


def analyze_program(p: Program, cat: Catalog, model: Optional[SvmModel] = None, app: str = "",
                    depth_limit: int = DEFAULT_DEPTH_LIMIT,
                    timeout_secs: Optional[float] = DEFAULT_TIMEOUT_SECS) -> AppResult:
    res = AppResult(app)
    res.n_conditions = sum(isinstance(s.instr, If) for m in p.methods() for s in m.body)
    t0 = time.perf_counter()
    inst = instrument(p, cat)
    taint = taint_instrumented(inst, cat, timeout_secs)
    t1 = time.perf_counter()
    if taint.timed_out:
        res.status = "timeout"
        res.error = "taint analysis timed out in " + ", ".join(taint.incomplete)
    graphs = MethodGraphs(p)
    cg = build_callgraph(p)
    triggers = extract_triggers(taint.hits, p, graphs)
    res.triggers = [TriggerRecord(t, extract_vector(t, graphs.cfg(t.method), cg, cat, depth_limit))
                    for t in triggers]
    t2 = time.perf_counter()
    if model is not None and res.triggers:
        scores, out = model.predict_many([r.vector for r in res.triggers])
        for r, s, o in zip(res.triggers, scores, out):
            r.score = float(s)
            r.is_outlier = bool(o)
    t3 = time.perf_counter()
    res.timing = {"taint": t1 - t0, "features": t2 - t1, "predict": t3 - t2}
    return res


def analyze_file(path, cat: Catalog, model: Optional[SvmModel] = None, name: Optional[str] = None,
                 depth_limit: int = DEFAULT_DEPTH_LIMIT,
                 timeout_secs: Optional[float] = DEFAULT_TIMEOUT_SECS) -> AppResult:
    path = Path(path)
    name = name or path.name
    t0 = time.perf_counter()
    try:
        p = parse_program(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, TirError) as e:
        return AppResult(name, status="error", error=f"{type(e).__name__}: {e}")
    parse_time = time.perf_counter() - t0
    try:
        res = analyze_program(p, cat, model, name, depth_limit, timeout_secs)
    except Exception as e:  # per-app failures are recorded, not fatal
        return AppResult(name, status="error", error=f"{type(e).__name__}: {e}")
    res.timing = {"parse": parse_time, **res.timing}
    return res


def corpus_files(paths: Iterable) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.tir")))
        else:
            out.append(p)
    return sorted(out, key=lambda x: x.name)


def summarize(results: list[AppResult]) -> dict:
    """Summary statistics; every value is recomputable from the per-app records."""
    analyzed = [r for r in results if r.status != "error"]
    n_trig = sum(len(r.triggers) for r in results)
    n_shso = sum(len(r.shsos) for r in results)
    per_app = [len(r.shsos) for r in analyzed]
    with_shso = [n for n in per_app if n > 0]
    types = Counter(rec.trigger.trigger_type for r in results for rec in r.shsos)
    all_types = Counter(rec.trigger.trigger_type for r in results for rec in r.triggers)
    return {
        "apps": len(results),
        "apps_ok": sum(r.status == "ok" for r in results),
        "apps_timeout": sum(r.status == "timeout" for r in results),
        "apps_error": sum(r.status == "error" for r in results),
        "apps_with_shso": len(with_shso),
        "conditions": sum(r.n_conditions for r in results),
        "triggers": n_trig,
        "shsos": n_shso,
        "shso_per_app": n_shso / len(analyzed) if analyzed else 0.0,
        "shso_per_flagged_app": float(np.mean(with_shso)) if with_shso else 0.0,
        "shso_distribution": {str(k): v for k, v in sorted(Counter(with_shso).items())},
        "reduction": 1.0 - n_shso / n_trig if n_trig else 1.0,
        "shso_types": dict(sorted(types.items(), key=lambda kv: (-kv[1], kv[0]))),
        "trigger_types": dict(sorted(all_types.items(), key=lambda kv: (-kv[1], kv[0]))),
    }


def build_report(results: list[AppResult], timing: bool = True) -> dict:
    results = sorted(results, key=lambda r: r.app)
    return {"schema": REPORT_SCHEMA,
            "apps": [r.to_dict(timing) for r in results],
            "summary": summarize(results)}


def score_report(report: dict, truth) -> dict:
    """Trigger-level precision/recall of flagged SHSOs against planted bombs,
    plus search-space reduction."""
    truth_apps = truth.apps
    report_apps = {a["app"]: a for a in report["apps"]}
    if set(report_apps) != set(truth_apps):
        missing = sorted(set(truth_apps) ^ set(report_apps))
        raise ValueError(f"report and truth cover different apps (e.g. {missing[0]})")
    tp = fp = fn = 0
    triggers = flagged = 0
    for name, a in sorted(report_apps.items()):
        bombs = {(t.method, t.label) for t in truth_apps[name].bombs}
        hits = {(t["method"], t["label"]) for t in a["triggers"] if t["is_outlier"]}
        triggers += len(a["triggers"])
        flagged += len(hits)
        tp += len(hits & bombs)
        fp += len(hits - bombs)
        fn += len(bombs - hits)
    return {
        "true_positives": tp,
        "false_positives": fp,
        "false_negatives": fn,
        "precision": tp / (tp + fp) if tp + fp else None,
        "recall": tp / (tp + fn) if tp + fn else None,
        "triggers": triggers,
        "shsos": flagged,
        "shso_ratio": flagged / triggers if triggers else 0.0,
        "reduction": 1.0 - flagged / triggers if triggers else 1.0,
    }
