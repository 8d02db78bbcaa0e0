"""Command line: gen, train, analyze, score, dump-cfg.

Exit codes: 0 completed (whatever was found), 1 usage or fatal input error,
2 completed but some apps failed or timed out.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import ocsvm
from .callgraph import DEFAULT_DEPTH_LIMIT
from .catalog import CatalogError, default_catalog, load_catalog
from .cfg import build_cfg, compute_dominators, to_dot
from .corpus import CorpusSpec, generate, load_truth, write_corpus
from .features import read_csv, write_csv
from .instrument import instrument
from .pipeline import analyze_file, build_report, corpus_files, score_report
from .taint import DEFAULT_TIMEOUT_SECS
from .tir import TirError, emit_program, parse_program

log = logging.getLogger("hsoscan")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _catalog(args):
    if args.catalog is None:
        return default_catalog()
    try:
        return load_catalog(args.catalog)
    except (OSError, CatalogError) as e:
        raise UsageError(f"cannot load catalog: {e}") from None


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _analyze_all(files, cat, model, args):
    job = partial(analyze_file, cat=cat, model=model, depth_limit=args.depth_limit,
                  timeout_secs=args.timeout_secs)
    if args.workers > 1 and len(files) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            return list(pool.map(job, files))
    return [job(f) for f in files]


def cmd_gen(args) -> int:
    if args.spec:
        spec = CorpusSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    else:
        spec = CorpusSpec(seed=args.seed, apps=args.apps, bomb_rate=args.bomb_rate,
                          triggers_per_app=tuple(args.triggers_per_app))
        if args.loop_free:
            spec.benign_weights["retry_loop"] = 0.0
    corpus, truth = generate(spec, _catalog(args))
    write_corpus(args.out_dir, corpus, truth)
    log.info("wrote %d apps to %s", len(corpus), args.out_dir)
    return EXIT_OK


def cmd_train(args) -> int:
    cat = _catalog(args)
    src = Path(args.corpus)
    failed = []
    if src.suffix == ".csv":
        with open(src, newline="", encoding="utf-8") as f:
            rows = read_csv(f)
        n_apps = len({r[0] for r in rows})
    else:
        files = corpus_files([src])
        results = _analyze_all(files, cat, None, args)
        failed = [r.app for r in results if r.status != "ok"]
        rows = [(r.app, rec.trigger.method, rec.trigger.label, rec.vector)
                for r in results for rec in r.triggers]
        n_apps = len(files)
    if not rows:
        raise UsageError("no vectors extracted")
    if args.vectors:
        with open(args.vectors, "w", newline="", encoding="utf-8") as f:
            write_csv(rows, f)
    vectors = [r[3] for r in rows]
    if args.sample and args.sample < len(vectors):
        idx = np.sort(np.random.default_rng(args.seed).choice(len(vectors), args.sample, replace=False))
        vectors = [vectors[i] for i in idx]
    try:
        model = ocsvm.fit(vectors, args.nu, args.gamma)
    except ocsvm.DegenerateData as e:
        raise UsageError(str(e)) from None
    model.save(args.model)
    cv = ocsvm.cross_validate(vectors, args.nu, args.gamma, k=min(args.folds, len(vectors)),
                              seed=args.seed) if len(vectors) >= 2 else None
    stats = ocsvm.training_stats(model, vectors)
    report = {
        "apps": n_apps,
        "apps_failed": failed,
        "vectors": len(rows),
        "training_vectors": len(vectors),
        "nu": model.nu,
        "gamma": model.gamma,
        "rho": model.rho,
        "support_vectors": int(len(model.alphas)),
        "kkt_violation": model.violation,
        "training_outlier_fraction": stats["outlier_fraction"],
        "cv_accuracies": cv.accuracies if cv else [],
        "cv_mean_accuracy": cv.mean if cv else None,
    }
    _write(json.dumps(report, indent=1) + "\n", args.out)
    return EXIT_PARTIAL if failed else EXIT_OK


def _emit_instrumented(files, target: str, cat) -> None:
    out = Path(target)
    as_dir = len(files) > 1 or out.is_dir() or target.endswith("/")
    if as_dir:
        out.mkdir(parents=True, exist_ok=True)
    for f in files:
        try:
            p = parse_program(Path(f).read_text(encoding="utf-8"))
        except (OSError, TirError):
            continue
        text = emit_program(instrument(p, cat).program)
        (out / Path(f).name if as_dir else out).write_text(text, encoding="utf-8")


def cmd_analyze(args) -> int:
    cat = _catalog(args)
    try:
        model = ocsvm.SvmModel.load(args.model)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot load model: {e}") from None
    files = corpus_files(args.apps)
    if not files:
        raise UsageError("no apps to analyze")
    results = _analyze_all(files, cat, model, args)
    if args.emit_instrumented:
        _emit_instrumented(files, args.emit_instrumented, cat)
    report = build_report(results, timing=not args.no_timing)
    _write(json.dumps(report, indent=1) + "\n", args.out)
    if args.vectors:
        rows = [(r.app, rec.trigger.method, rec.trigger.label, rec.vector)
                for r in results for rec in r.triggers]
        with open(args.vectors, "w", newline="", encoding="utf-8") as f:
            write_csv(rows, f)
    s = report["summary"]
    log.info("%d apps, %d triggers, %d SHSOs (reduction %.3f)",
             s["apps"], s["triggers"], s["shsos"], s["reduction"])
    return EXIT_PARTIAL if s["apps_ok"] < s["apps"] else EXIT_OK


def cmd_score(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
        truth = load_truth(args.truth)
        metrics = score_report(report, truth)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(str(e)) from None
    _write(json.dumps(metrics, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_dump_cfg(args) -> int:
    try:
        p = parse_program(Path(args.app).read_text(encoding="utf-8"))
    except (OSError, TirError) as e:
        raise UsageError(str(e)) from None
    methods = [m for m in p.methods() if args.method in (None, m.key, f"{m.cls}.{m.name}")]
    if not methods:
        raise UsageError(f"no method {args.method!r}")
    chunks = []
    for m in methods:
        g = build_cfg(m)
        chunks.append(to_dot(g, compute_dominators(g) if args.dom else None))
    _write("".join(chunks), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hsoscan", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, analysis=True):
        p.add_argument("--catalog", help="catalog JSON (default: bundled catalog)")
        p.add_argument("--out", help="output file (default: stdout)")
        if analysis:
            p.add_argument("--depth-limit", type=int, default=DEFAULT_DEPTH_LIMIT)
            p.add_argument("--timeout-secs", type=float, default=DEFAULT_TIMEOUT_SECS)
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--spec", help="CorpusSpec JSON; overrides the flags below")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--apps", type=int, default=10)
    p.add_argument("--bomb-rate", type=float, default=0.0)
    p.add_argument("--triggers-per-app", type=int, nargs=2, default=(2, 5), metavar=("LO", "HI"))
    p.add_argument("--loop-free", action="store_true")
    p.add_argument("--catalog")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the anomaly detector on a benign corpus")
    p.add_argument("corpus", help="corpus directory, or a CSV of feature vectors")
    p.add_argument("--model", required=True, help="where to write the model JSON")
    p.add_argument("--nu", type=float, default=ocsvm.DEFAULT_NU)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample", type=int, default=None, help="train on a random sample of vectors")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--vectors", help="also write the extracted vectors as CSV")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="find triggers and flag SHSOs")
    p.add_argument("apps", nargs="+", help=".tir files or directories")
    p.add_argument("--model", required=True)
    p.add_argument("--emit-instrumented", metavar="PATH")
    p.add_argument("--vectors", help="also write the extracted vectors as CSV")
    p.add_argument("--no-timing", action="store_true", help="omit timings (byte-stable reports)")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("score", help="precision/recall of a report against truth.json")
    p.add_argument("report")
    p.add_argument("truth")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("dump-cfg", help="print method CFGs in DOT")
    p.add_argument("app")
    p.add_argument("--method", help="method key, e.g. App.main/0")
    p.add_argument("--dom", action="store_true", help="overlay the dominator tree")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump_cfg)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"hsoscan: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
