import random

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES

from hsoscan.catalog import Catalog, default_catalog
from hsoscan.corpus import CorpusSpec, generate, input_bindings, interpret
from hsoscan.instrument import instrument
from hsoscan.taint import taint_instrumented
from hsoscan.tir import parse_program

CAT = Catalog(sources=frozenset({"Tel.getNetworkCountryIso", "S.src"}))


def hits(src: str, cat=CAT, **kw):
    inst = instrument(parse_program(src), cat)
    return {(h.method, h.label): h.sources for h in taint_instrumented(inst, cat, **kw).hits}


def test_country_code_fixture():
    res = hits((FIXTURES / "country_code.tir").read_text())
    assert res == {("Receiver.onReceive/0", "l1"): {"Tel.getNetworkCountryIso"}}


def test_provenance_includes_site():
    inst = instrument(parse_program((FIXTURES / "country_code.tir").read_text()), CAT)
    (h,) = taint_instrumented(inst, CAT).hits
    assert h.provenance == {("Tel.getNetworkCountryIso", ("Receiver.onReceive/0", "l0"))}


def test_strong_update_kills_taint():
    assert hits("class A { entry m() { l0: x = S.src() l1: x = 0 l2: if x == 1 goto l3 l3: return } }") == {}


def test_interprocedural_formal():
    res = hits("""class A {
      entry main() { l0: t = S.src() l1: call A.helper(t) l2: return }
      helper(p) { l0: if p == 1 goto l1 l1: return } }""")
    assert res == {("A.helper/1", "l0"): {"S.src"}}


def test_return_value_flows_back():
    res = hits("""class A {
      entry main() { l0: v = A.get() l1: if v > 2 goto l2 l2: return }
      get() { l0: r = S.src() l1: return r } }""")
    assert ("A.main/0", "l1") in res


def test_static_fields_are_global():
    res = hits("""class A {
      entry main() { l0: t = S.src() l1: setfield A.F = t l2: call A.use() l3: return }
      use() { l0: y = field A.F l1: if y == 3 goto l2 l2: return } }""")
    assert res == {("A.use/0", "l1"): {"S.src"}}


def test_weak_update_on_fields():
    # a later untainted store does not clear the field
    res = hits("""class A {
      entry main() { l0: t = S.src() l1: setfield A.F = t l2: z = 0 l3: setfield A.F = z
                     l4: y = field A.F l5: if y == 3 goto l6 l6: return } }""")
    assert ("A.main/0", "l5") in res


def test_external_pass_through():
    res = hits("class A { entry m() { l0: t = S.src() l1: u = Str.trim(t) l2: if u == 1 goto l3 l3: return } }")
    assert res == {("A.m/0", "l2"): {"S.src"}}


def test_binop_and_copy():
    res = hits("class A { entry m() { l0: t = S.src() l1: u = t l2: w = 3 l3: v = w * u "
               "l4: if 2 < v goto l5 l5: return } }")
    assert ("A.m/0", "l4") in res


def test_no_implicit_flows():
    res = hits("""class A { entry m() { l0: t = S.src() l1: if t == 1 goto l3 l2: goto l4
                   l3: y = 1 l4: if y == 1 goto l5 l5: return } }""")
    assert set(res) == {("A.m/0", "l1")}


def test_build_field_source(cat):
    res = hits("class A { entry m() { l0: b = field Build.BRAND l1: if b == \"x\" goto l2 l2: return } }",
               cat=cat)
    assert res == {("A.m/0", "l1"): {"BuildClass.getBuild_BRAND"}}


def test_timeout_returns_partial_flagged():
    inst = instrument(parse_program((FIXTURES / "emulator_bomb.tir").read_text()), default_catalog())
    res = taint_instrumented(inst, default_catalog(), timeout_secs=0.0)
    assert res.timed_out and res.incomplete


def test_loops_reach_fixpoint():
    res = hits("""class A { entry m() { l0: x = 0 l1: if x > 5 goto l5 l2: y = x l3: x = S.src()
                   l4: goto l1 l5: return } }""")
    assert ("A.m/0", "l1") in res


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_adding_sources_never_removes_hits(seed):
    cat = default_catalog()
    corpus, _ = generate(CorpusSpec(seed=seed, apps=3), cat)
    rng = random.Random(seed)
    for p in corpus.values():
        extra = {c.signature for m in p.methods() for s in m.body if (c := s.call) is not None}
        bigger = cat.with_sources(rng.sample(sorted(extra), min(3, len(extra))))
        base = hits_of(p, cat)
        assert base <= hits_of(p, bigger)


def hits_of(p, cat):
    inst = instrument(p, cat)
    return {(h.method, h.label) for h in taint_instrumented(inst, cat).hits}


def test_oracle_containment_small(cat):
    corpus, truth = generate(CorpusSpec(seed=11, apps=40, bomb_rate=0.3,
                                        benign_weights={"null_check": 1, "ui_state": 1, "config": 1}), cat)
    for name, p in corpus.items():
        found = hits_of(p, cat)
        for b in input_bindings(truth.apps[name].inputs):
            assert interpret(p, b, cat).tagged_conditions <= found
