"""
Control flow, dominators and guarded code
=========================================

A conditional guards the statements whose execution it decides. Here we
parse a small method, build its CFG, and look at which statements land in
the true branch, the false branch, or neither.
"""

from hsoscan.cfg import build_cfg, compute_dominators, branch_sets, to_dot
from hsoscan.tir import parse_program

# The two arms of the check meet again at l5, so l5 runs whichever way the
# condition goes, even though l0 dominates it.
src = """
class Demo {
  entry m(x) {
    l0: if x == 1 goto l3
    l1: y = 2
    l2: goto l5
    l3: y = 3
    l4: goto l5
    l5: call Ui.show(y)
    l6: return
  }
}
"""
method = next(parse_program(src).methods())
g = build_cfg(method)
dom = compute_dominators(g)

for node in g.nodes:
    print(f"{node:8s} succ={g.succ[node]}  idom={dom.idom.get(node, '-')}")

bs = branch_sets(g, dom, "l0")
print("true branch :", sorted(bs.true_branch))
print("false branch:", sorted(bs.false_branch))
print("l5 guarded? ", "l5" in bs.guarded)

# %%
# The same graph in DOT, with the dominator tree drawn dashed. Pipe it
# through ``dot -Tsvg`` to look at it.
print(to_dot(g, dom))
