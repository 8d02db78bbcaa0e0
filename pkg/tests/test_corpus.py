import pytest

from hsoscan.callgraph import build_callgraph
from hsoscan.catalog import Catalog
from hsoscan.corpus import (BOMB_TEMPLATES, CorpusSpec, GroundTruth, StepLimitExceeded, generate,
                            input_bindings, interpret, load_truth, write_corpus)
from hsoscan.features import _sensitive_reached, feature_J
from hsoscan.pipeline import analyze_program
from hsoscan.tir import emit_program, parse_program

CAT = Catalog(sources=frozenset({"S.src"}))


def test_benign_only():
    corpus, truth = generate(CorpusSpec(seed=0, apps=10, bomb_rate=0.0))
    assert len(corpus) == 10 and len(truth.apps) == 10
    assert not any(a.bombs for a in truth.apps.values())


def test_listing1_template_everywhere(cat):
    spec = CorpusSpec(seed=3, apps=10, bomb_rate=1.0,
                      bomb_weights={t: float(t == "emulator_exfil") for t in BOMB_TEMPLATES})
    corpus, truth = generate(spec, cat)
    for name, p in corpus.items():
        (bomb,) = truth.apps[name].bombs
        assert bomb.template == "emulator_exfil" and bomb.trigger_type == "Build"
        res = analyze_program(p, cat, None, name)
        rec = next(r for r in res.triggers if (r.trigger.method, r.trigger.label) == (bomb.method, bomb.label))
        # the sensitive payload sits entirely on one side of the condition
        t = rec.trigger
        cg = build_callgraph(p)
        xt = _sensitive_reached(t, t.true_branch, cg, cat, 20)
        xf = _sensitive_reached(t, t.false_branch, cg, cat, 20)
        assert xf and not xt
        assert feature_J(t, cg, cat) == 1.0


def test_same_seed_same_bytes(tmp_path):
    spec = CorpusSpec(seed=9, apps=15, bomb_rate=0.2)
    for d in ("a", "b"):
        write_corpus(tmp_path / d, *generate(spec))
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    assert load_truth(tmp_path / "a" / "truth.json").to_dict() == generate(spec)[1].to_dict()


def test_bomb_count_and_truth_invariants(cat):
    corpus, truth = generate(CorpusSpec(seed=4, apps=50, bomb_rate=0.1), cat)
    assert sum(a.has_bomb for a in truth.apps.values()) == 5
    for name, a in truth.apps.items():
        assert len(a.bombs) == (1 if a.has_bomb else 0)
        labels = [(t.method, t.label) for t in a.triggers]
        assert len(labels) == len(set(labels))


def test_every_planted_trigger_is_a_hit(bomb_corpus, cat):
    corpus, truth = bomb_corpus
    for name, p in corpus.items():
        res = analyze_program(p, cat, None, name)
        found = {(r.trigger.method, r.trigger.label) for r in res.triggers}
        assert {(t.method, t.label) for t in truth.apps[name].triggers} <= found


def test_truth_round_trip():
    _, truth = generate(CorpusSpec(seed=1, apps=4, bomb_rate=0.5))
    assert GroundTruth.from_dict(truth.to_dict()).to_dict() == truth.to_dict()


@pytest.mark.parametrize("kw", [dict(bomb_rate=1.5), dict(benign_weights={"null_check": -1.0}),
                                dict(benign_weights={"nope": 1.0}), dict(benign_weights={"null_check": 0.0}),
                                dict(triggers_per_app=(3, 2)),
                                dict(bomb_rate=0.5, bomb_weights={t: 0.0 for t in BOMB_TEMPLATES})])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        CorpusSpec(**kw)


def test_spec_json_round_trip():
    spec = CorpusSpec(seed=2, apps=3, bomb_rate=0.3, triggers_per_app=(1, 2))
    assert CorpusSpec.from_dict(spec.to_dict()) == spec
    assert not spec.loop_free
    assert CorpusSpec(benign_weights={"null_check": 1.0}).loop_free


def run(src, inputs=None):
    return interpret(parse_program(src), inputs or {}, CAT)


def test_interpreter_tags_flow_into_if():
    tr = run("class A { entry m() { l0: x = S.src() l1: y = x + 1 l2: if y == 2 goto l3 l3: return } }",
             {"S.src": 1})
    assert tr.tagged_conditions == {("A.m/0", "l2")}
    assert tr.executed == [("A.m/0", f"l{i}") for i in range(4)]


def test_interpreter_overwrite_clears_tag():
    tr = run("class A { entry m() { l0: x = S.src() l1: x = 0 l2: if x == 1 goto l3 l3: return } }")
    assert tr.tagged_conditions == set()


def test_interpreter_branches_on_inputs():
    src = ('class A { entry m() { l0: x = S.src() l1: if x == "us" goto l3 l2: return '
           'l3: call Sms.send(x) l4: return } }')
    assert ("A.m/0", "l3") in run(src, {"S.src": "us"}).executed
    assert ("A.m/0", "l3") not in run(src, {"S.src": "fr"}).executed


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        interpret(parse_program("class A { entry m() { l0: goto l0 } }"), {}, CAT, step_limit=100)


def test_input_bindings():
    assert list(input_bindings({"b": [1, 2], "a": ["x"]})) == [{"a": "x", "b": 1}, {"a": "x", "b": 2}]
    assert list(input_bindings({})) == [{}]


def test_generated_programs_round_trip(bomb_corpus):
    corpus, _ = bomb_corpus
    for p in list(corpus.values())[:40]:
        assert parse_program(emit_program(p)) == p
