"""
From source values to trigger entry points
==========================================

Conditions only matter when they test data from a sensitive source. Each
conditional gets a dummy sink call carrying its variables, and each read of
a catalogued static field becomes a dummy source call; a taint analysis then
tells which conditions see source data.
"""

from hsoscan.catalog import default_catalog
from hsoscan.instrument import instrument
from hsoscan.taint import taint_instrumented
from hsoscan.tir import emit_program, parse_program
from hsoscan.triggers import extract_triggers

cat = default_catalog()

src = """
class Receiver {
  entry onReceive() {
    l0: cc = Tel.getNetworkCountryIso()
    l1: b = field Build.BRAND
    l2: if cc == "us" goto l5
    l3: if b == "x" goto l6
    l4: return
    l5: call Sms.sendTextMessage(cc)
    l6: n = 0
    l7: if n > 3 goto l4
    l8: return
  }
}
"""
p = parse_program(src)
inst = instrument(p, cat)
print(emit_program(inst.program))
print("sinks  :", inst.sinks)
print("sources:", inst.sources)

# %%
# ``n`` is a plain counter, so the check at l7 is not an entry point.
result = taint_instrumented(inst, cat)
for hit in result.hits:
    print(hit.method, hit.label, sorted(hit.sources))

for t in extract_triggers(result.hits, p):
    print(f"{t.label}: {t.condition:28s} type={t.trigger_type:10s} "
          f"T={sorted(t.true_branch)} F={sorted(t.false_branch)}")
