"""
A one-class model of ordinary triggers
======================================

Only benign triggers are available for training, so the detector learns the
region where they live and flags anything outside it. The fraction of
training points left outside is bounded by nu, and nu also bounds the
fraction of support vectors from below.
"""

import numpy as np

from hsoscan import ocsvm
from hsoscan.catalog import default_catalog
from hsoscan.corpus import CorpusSpec, generate
from hsoscan.pipeline import analyze_program

# Continuous toy data first, where the nu-property is easy to see.
rng = np.random.default_rng(0)
x = rng.normal(size=(300, 9))
for nu in (0.05, 0.1, 0.2, 0.4):
    m = ocsvm.fit(x, nu=nu)
    stats = ocsvm.training_stats(m, x)
    print(f"nu={nu:4.2f}  outliers={stats['outlier_fraction']:.3f}  "
          f"support vectors={stats['sv_fraction']:.3f}  rho={m.rho:.4f}")

# %%
# Now the benign trigger vectors of a generated corpus, with 10-fold
# cross-validation (the accuracy is the share of held-out benign triggers
# accepted as inliers).
cat = default_catalog()
corpus, _ = generate(CorpusSpec(seed=1, apps=200), cat)
vectors = [rec.vector for n, p in sorted(corpus.items())
           for rec in analyze_program(p, cat, None, n).triggers]
cv = ocsvm.cross_validate(vectors, nu=0.05, k=10, seed=0)
print("distinct benign vectors:", len({v for v in vectors}), "of", len(vectors))
print("fold accuracies:", np.round(cv.accuracies, 4), "mean", round(cv.mean, 4))

model = ocsvm.fit(vectors)
far = np.array([[5, 1, 1, 1, 1, 1, 3, 5, 1.0]])
print("score of an extreme trigger:", model.decision_function(far)[0])
