"""Truncated SVD + latent-space user neighbors against the baselines on low-rank ratings."""

import numpy as np

from opinionrec.evaluation import EvalPair, mae, rmse, split
from opinionrec.recommend import RatingModel, baseline_mf
from opinionrec.synthetic import structured_ratings

full, cells = structured_ratings(seed=0)
triples = [(f"u{a:03d}", f"i{j:03d}", float(full[a, j])) for a, j in cells]
train_t, test_t = split(triples, 0.8, seed=0)

model = RatingModel.fit(train_t, f=20, k_nn=30)
mf = baseline_mf(train_t)
mu = float(np.mean([r for _, _, r in train_t]))

for name, predict in [("svd + user kNN", model.predict), ("biased MF", mf.predict),
                      ("global mean", lambda u, i: mu)]:
    pairs = [EvalPair(u, i, predict(u, i), r) for u, i, r in test_t]
    print(f"{name:15} RMSE {rmse(pairs):.4f}  MAE {mae(pairs):.4f}")

print("top-5 for u000:")
for rank, (item, score) in enumerate(model.top_n("u000", 5), 1):
    print(f"  {rank}. {item}  {score:.3f}")
