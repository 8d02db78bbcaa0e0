import json
from collections import Counter

import pytest

from conftest import FIXTURES

from hsoscan.cli import main
from hsoscan.corpus import CorpusSpec, generate, load_truth, write_corpus
from hsoscan.pipeline import analyze_program, build_report, score_report, summarize
from hsoscan.tir import parse_program


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen", str(d / "train"), "--seed", "1", "--apps", "60"]) == 0
    assert main(["gen", str(d / "test"), "--seed", "2", "--apps", "60", "--bomb-rate", "0.1"]) == 0
    assert main(["train", str(d / "train"), "--model", str(d / "m.json"), "--out", str(d / "cv.json"),
                 "--vectors", str(d / "v.csv")]) == 0
    return d


def analyze(workdir, *extra):
    out = workdir / "rep.json"
    code = main(["analyze", str(workdir / "test"), "--model", str(workdir / "m.json"),
                 "--out", str(out), *extra])
    return code, json.loads(out.read_text())


def test_train_outputs(workdir):
    cv = json.loads((workdir / "cv.json").read_text())
    assert len(cv["cv_accuracies"]) == 10 and cv["cv_mean_accuracy"] >= 0.99
    assert cv["apps"] == 60 and cv["apps_failed"] == []
    assert (workdir / "v.csv").read_text().startswith("app,method,label,S,N,D,R,B,P,M1,S1,J\n")
    model = json.loads((workdir / "m.json").read_text())
    assert {"nu", "gamma", "rho", "scaling", "svs", "alphas"} <= set(model)


def test_train_from_csv(workdir, tmp_path):
    assert main(["train", str(workdir / "v.csv"), "--model", str(tmp_path / "m.json"),
                 "--out", str(tmp_path / "cv.json")]) == 0
    assert (tmp_path / "m.json").read_text() == (workdir / "m.json").read_text()


def test_analyze_report(workdir):
    code, rep = analyze(workdir, "--no-timing")
    assert code == 0 and rep["schema"] == 1
    names = [a["app"] for a in rep["apps"]]
    assert names == sorted(names) and len(names) == 60
    assert all("timing" not in a for a in rep["apps"])
    code, rep = analyze(workdir)
    assert set(rep["apps"][0]["timing"]) == {"parse", "taint", "features", "predict"}


def test_report_self_consistency(workdir):
    _, rep = analyze(workdir)
    apps, s = rep["apps"], rep["summary"]
    trig = [t for a in apps for t in a["triggers"]]
    flagged = [t for t in trig if t["is_outlier"]]
    assert s["apps"] == len(apps)
    assert s["triggers"] == len(trig) and s["shsos"] == len(flagged)
    assert s["apps_with_shso"] == sum(any(t["is_outlier"] for t in a["triggers"]) for a in apps)
    assert s["conditions"] == sum(a["conditions"] for a in apps)
    assert s["reduction"] == pytest.approx(1 - len(flagged) / len(trig))
    assert s["shso_types"] == dict(Counter(t["trigger_type"] for t in flagged))
    assert s["trigger_types"] == dict(Counter(t["trigger_type"] for t in trig))
    assert sum(a["shsos"] for a in apps) == len(flagged)
    per_app = Counter(a["shsos"] for a in apps if a["shsos"])
    assert s["shso_distribution"] == {str(k): v for k, v in per_app.items()}


def test_workers_give_identical_report(workdir, tmp_path):
    _, one = analyze(workdir, "--no-timing")
    out = tmp_path / "r.json"
    assert main(["analyze", str(workdir / "test"), "--model", str(workdir / "m.json"),
                 "--out", str(out), "--no-timing", "--workers", "2"]) == 0
    assert json.loads(out.read_text()) == one


def test_score(workdir, tmp_path):
    analyze(workdir, "--no-timing")
    out = tmp_path / "s.json"
    assert main(["score", str(workdir / "rep.json"), str(workdir / "test" / "truth.json"),
                 "--out", str(out)]) == 0
    s = json.loads(out.read_text())
    assert s["recall"] >= 0.9 and s["reduction"] >= 0.95


def test_score_edge_cases(bomb_corpus, cat):
    corpus, truth = bomb_corpus
    results = [analyze_program(p, cat, None, n) for n, p in sorted(corpus.items())]
    rep = build_report(results, timing=False)
    bombs = {(n, t.method, t.label) for n, a in truth.apps.items() for t in a.bombs}
    for a in rep["apps"]:
        for t in a["triggers"]:
            t["is_outlier"] = (a["app"], t["method"], t["label"]) in bombs
    s = score_report(rep, truth)
    assert s["precision"] == s["recall"] == 1.0
    for a in rep["apps"]:
        for t in a["triggers"]:
            t["is_outlier"] = False
    s = score_report(rep, truth)
    assert s["recall"] == 0.0 and s["reduction"] == 1.0 and s["precision"] is None
    rep["apps"].pop()
    with pytest.raises(ValueError, match="different apps"):
        score_report(rep, truth)


def test_benign_only_ratio(benign_model, cat):
    corpus, _ = generate(CorpusSpec(seed=77, apps=100), cat)
    results = [analyze_program(p, cat, benign_model, n) for n, p in sorted(corpus.items())]
    s = summarize(results)
    assert s["shsos"] / s["triggers"] <= 0.05


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["train"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["analyze", "x.tir"])              # --model is required
    assert e.value.code == 1
    assert main(["analyze", str(tmp_path), "--model", str(tmp_path / "missing.json")]) == 1


def test_empty_corpus(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["train", str(tmp_path / "empty"), "--model", str(tmp_path / "m.json")]) == 1
    assert "no vectors extracted" in capsys.readouterr().err


def test_partial_exit_code(workdir, tmp_path):
    d = tmp_path / "apps"
    d.mkdir()
    (d / "good.tir").write_text((FIXTURES / "country_code.tir").read_text())
    (d / "bad.tir").write_text("class {")
    out = tmp_path / "r.json"
    assert main(["analyze", str(d), "--model", str(workdir / "m.json"), "--out", str(out)]) == 2
    rep = json.loads(out.read_text())
    bad = next(a for a in rep["apps"] if a["app"] == "bad.tir")
    assert bad["status"] == "error" and "TirSyntaxError" in bad["error"]
    assert rep["summary"]["apps_error"] == 1


def test_timeout_is_partial(workdir, tmp_path):
    out = tmp_path / "r.json"
    code = main(["analyze", str(FIXTURES / "emulator_bomb.tir"), "--model", str(workdir / "m.json"),
                 "--timeout-secs", "0", "--out", str(out)])
    assert code == 2
    assert json.loads(out.read_text())["summary"]["apps_timeout"] == 1


def test_sample_is_deterministic(workdir, tmp_path):
    for name in ("a", "b"):
        assert main(["train", str(workdir / "train"), "--model", str(tmp_path / f"{name}.json"),
                     "--sample", "100", "--seed", "7", "--out", str(tmp_path / f"{name}.cv")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert json.loads((tmp_path / "a.cv").read_text())["training_vectors"] == 100


def test_emit_instrumented(workdir, tmp_path):
    out = tmp_path / "inst.tir"
    assert main(["analyze", str(FIXTURES / "country_code.tir"), "--model", str(workdir / "m.json"),
                 "--emit-instrumented", str(out), "--out", str(tmp_path / "r.json")]) == 0
    text = out.read_text()
    assert "call IfClass.ifMethod_0(cc)" in text
    parse_program(text)


def test_dump_cfg(tmp_path, capsys):
    assert main(["dump-cfg", str(FIXTURES / "country_code.tir"), "--dom"]) == 0
    out = capsys.readouterr().out
    assert out.startswith('digraph "Receiver.onReceive/0"') and "dashed" in out
    assert main(["dump-cfg", str(FIXTURES / "country_code.tir"), "--method", "Nope.x/0"]) == 1


def test_gen_from_spec_file(tmp_path):
    spec = CorpusSpec(seed=4, apps=5, bomb_rate=0.4)
    (tmp_path / "spec.json").write_text(json.dumps(spec.to_dict()))
    assert main(["gen", str(tmp_path / "c"), "--spec", str(tmp_path / "spec.json")]) == 0
    write_corpus(tmp_path / "d", *generate(spec))
    for f in (tmp_path / "d").iterdir():
        assert (tmp_path / "c" / f.name).read_bytes() == f.read_bytes()
    assert load_truth(tmp_path / "c" / "truth.json").spec == spec
