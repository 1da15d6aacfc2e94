"""Lexicon scores, aspect clusters, CP cluster weights and the blended rating."""

import numpy as np

from opinionrec.aspects import (AspectMention, Span, build_tensor, cluster_aspects, cp_fit,
                                load_opinion_lexicon, score_mention, star_rating,
                                weighted_rating_matrix)

lexicon = load_opinion_lexicon()
for text, span in [("great batteri", Span(1, 2, "batteri")),
                   ("not great batteri", Span(2, 3, "batteri")),
                   ("the batteri arriv", Span(1, 2, "batteri"))]:
    s = score_mention(span, text.split(), lexicon)
    print(f"{text!r:24} score {s:+.4f} stars {star_rating(s):.3f}")

# stems whose vectors point the same way fall into one cluster
vectors = {"sound": [1.0, 0.1], "tone": [0.9, 0.2], "price": [0.1, 1.0], "cost": [0.0, 0.9]}
clusters = cluster_aspects({"sound": 4, "tone": 2, "price": 3, "cost": 1},
                           {k: np.array(v) for k, v in vectors.items()}, theta=0.6)
for c in clusters:
    print(f"cluster {c.id}: medoid {c.medoid}, members {c.members}")

rng = np.random.default_rng(0)
mentions = []
for u in range(6):
    for i in range(4):
        # users care strongly about sound and only mildly about price
        mentions.append(AspectMention(f"u{u}", f"i{i}", 0, 1, "sound", rng.uniform(0.3, 0.9)))
        mentions.append(AspectMention(f"u{u}", f"i{i}", 0, 1, "cost", rng.uniform(-0.2, 0.2)))
tensor = build_tensor(mentions, clusters)
fit = cp_fit(tensor, rank=2)
print("cluster weights:", np.round(fit.weights, 3).tolist(), "residual", round(fit.residual, 4))

blended = weighted_rating_matrix(tensor, fit.weights, {("u0", "i0"): 2.0}, alpha=0.5)
print("u0/i0: stars 2.0 ->", round(blended[("u0", "i0")], 3))
