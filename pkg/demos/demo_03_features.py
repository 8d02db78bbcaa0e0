"""
Nine numbers per trigger
========================

Every trigger is summarised by what its guarded code can reach: sensitive
APIs, native code, dynamic loading, reflection and services, whether the
condition variable is reused, how exclusive its callees are, and how
differently the two branches behave.
"""

import numpy as np

from hsoscan.catalog import default_catalog
from hsoscan.corpus import CorpusSpec, generate
from hsoscan.features import FEATURE_NAMES, write_csv
from hsoscan.pipeline import analyze_program

cat = default_catalog()
corpus, truth = generate(CorpusSpec(seed=3, apps=30, bomb_rate=0.2), cat)

rows, labels = [], []
for name, p in sorted(corpus.items()):
    planted = {(t.method, t.label): t for t in truth.apps[name].triggers}
    for rec in analyze_program(p, cat, None, name).triggers:
        rows.append((name, rec.trigger.method, rec.trigger.label, rec.vector))
        labels.append(planted[(rec.trigger.method, rec.trigger.label)].template)

X = np.vstack([r[3].as_array() for r in rows])
is_bomb = np.array([any(t.is_bomb and (t.method, t.label) == (r[1], r[2])
                        for t in truth.apps[r[0]].triggers) for r in rows])
print(f"{len(rows)} triggers, {is_bomb.sum()} planted bombs")

# %%
# Mean of each feature for ordinary triggers versus planted bombs. Bombs
# reach more sensitive APIs and their branches differ (J close to 1).
print("feature  benign   bomb")
for i, f in enumerate(FEATURE_NAMES):
    print(f"{f:7s} {X[~is_bomb, i].mean():7.3f} {X[is_bomb, i].mean():6.3f}")

# %%
# Per-template view, and the CSV that ``hsoscan train`` can consume.
for tpl in sorted(set(labels)):
    sel = np.array([l == tpl for l in labels])
    print(f"{tpl:18s} n={sel.sum():3d} mean vector={np.round(X[sel].mean(0), 2)}")
print(write_csv(rows[:3]))
