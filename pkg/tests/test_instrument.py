import pytest
from conftest import FIXTURES

from hsoscan.corpus import interpret
from hsoscan.instrument import (InstrumentationError, getter_name, instrument, instrument_field_sources,
                                instrument_ifs)
from hsoscan.tir import Assign, Call, If, VoidCall, emit_program, parse_program


def test_listing_style_sink_insertion():
    p = parse_program('class A { entry m() { l0: countryCode = Tel.getNetworkCountryIso() '
                      'l1: if countryCode == "us" goto l3 l2: return l3: return } }')
    q, reg = instrument_ifs(p)
    body = next(q.methods()).body
    labels = [s.label for s in body]
    i = labels.index("l1")
    assert body[i - 1].instr == VoidCall(Call("IfClass", "ifMethod_0", ("countryCode",)))
    assert reg == {"IfClass.ifMethod_0": ("A.m/0", "l1")}


def test_constant_condition_has_no_arguments():
    p = parse_program("class A { entry m() { l0: if 1 == 1 goto l1 l1: return } }")
    q, reg = instrument_ifs(p)
    assert next(q.methods()).body[0].instr == VoidCall(Call("IfClass", "ifMethod_0", ()))
    assert reg == {"IfClass.ifMethod_0": ("A.m/0", "l0")}


def test_no_ifs_is_identity(cat):
    p = parse_program("class A { entry m() { l0: x = 1 l1: return } }")
    inst = instrument(p, cat)
    assert inst.program == p and inst.sinks == {} and inst.sources == {}


def test_field_source_rewrite(cat):
    p = parse_program("class A { entry m() { l0: b = field Build.BRAND l1: y = field App.counter "
                      "l2: c = field Build.BRAND l3: return } }")
    q, reg = instrument_field_sources(p, cat)
    body = next(q.methods()).body
    assert body[0].instr == Assign("b", Call("BuildClass", "getBuild_BRAND", ()))
    assert body[1].instr == p.classes[0].methods[0].body[1].instr
    assert body[2].instr == Assign("c", Call("BuildClass", "getBuild_BRAND", ()))
    assert reg == {"BuildClass.getBuild_BRAND": "Build.BRAND"}
    assert getter_name("Build.BRAND") == "getBuild_BRAND"


def test_jumps_into_an_if_pass_through_its_sink():
    p = parse_program("class A { entry m(x) { l0: if x < 3 goto l2 l1: return "
                      "l2: x = x + 1 l3: goto l0 } }")
    q, _ = instrument_ifs(p)
    body = next(q.methods()).body
    assert body[0].label == "__if0"
    assert body[-1].instr.target == "__if0"
    assert body[1].instr.target == "l2"        # the if itself keeps its target


def test_counter_order_is_class_method_statement():
    p = parse_program("""class B { entry m(x) { l0: if x < 1 goto l1 l1: if x < 2 goto l2 l2: return } }
                         class A { n(y) { l0: if y < 1 goto l1 l1: return } }""")
    _, reg = instrument_ifs(p)
    assert reg == {"IfClass.ifMethod_0": ("B.m/1", "l0"), "IfClass.ifMethod_1": ("B.m/1", "l1"),
                   "IfClass.ifMethod_2": ("A.n/1", "l0")}


def test_already_instrumented_is_rejected(cat):
    p = parse_program((FIXTURES / "emulator_bomb.tir").read_text())
    inst = instrument(p, cat)
    with pytest.raises(InstrumentationError):
        instrument(inst.program, cat)
    with pytest.raises(InstrumentationError):
        instrument_ifs(inst.program)
    with pytest.raises(InstrumentationError):
        instrument_field_sources(inst.program, cat)


def test_label_clash_is_avoided():
    p = parse_program("class A { entry m(x) { __if0: x = 1 l1: if x < 2 goto l1 l2: return } }")
    q, _ = instrument_ifs(p)
    labels = [s.label for s in next(q.methods()).body]
    assert len(labels) == len(set(labels))


def _all_apps(corpus):
    return sorted(corpus.items())


def test_sink_registry_is_a_bijection(benign_corpus, cat):
    corpus, _ = benign_corpus
    for name, p in _all_apps(corpus)[:50]:
        inst = instrument(p, cat)
        ifs = {(m.key, s.label) for m in p.methods() for s in m.body if isinstance(s.instr, If)}
        assert len(set(inst.sinks.values())) == len(inst.sinks) == len(ifs)
        assert set(inst.sinks.values()) == ifs
        assert parse_program(emit_program(inst.program)) == inst.program


def test_semantic_transparency(benign_corpus, cat):
    """Variable values at every original label agree between the original and
    the instrumented program under the concrete interpreter."""
    corpus, truth = benign_corpus
    for name, p in _all_apps(corpus)[:60]:
        inst = instrument(p, cat)
        inputs = {k: v[-1] for k, v in truth.apps[name].inputs.items()}
        a = interpret(p, inputs, cat, record_states=True)
        b = interpret(inst.program, inputs, cat, getters=inst.sources, record_states=True)
        orig = {(m.key, s.label) for m in p.methods() for s in m.body}
        sb = [st for st in b.states if (st[0], st[1]) in orig]
        assert a.states == sb
