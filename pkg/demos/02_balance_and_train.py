"""SMOTE on embedded reviews, then a few epochs of the two-channel network."""

import numpy as np

from opinionrec.balance import FeatureSample, smote
from opinionrec.corpus import PolarityLabel
from opinionrec.dcnn import DcnnConfig, DcnnModel, Sample, predict, train
from opinionrec.evaluation import sentiment_accuracy, tag_f1
from opinionrec.synthetic import planted_samples

L, DIM = 32, 32
samples = planted_samples(120, L, dim=DIM, seed=3)
labels = [s.label for s in samples]
print("class counts before:", np.bincount(labels).tolist())

# SMOTE interpolates flattened word+POS matrices inside each class
flat = [FeatureSample(np.concatenate([s.word, s.pos], axis=1).ravel(), PolarityLabel(s.label))
        for s in samples]
balanced = smote(flat, k=5, seed=1)
synthetic = []
for fs in balanced[len(flat):]:
    m = fs.features.reshape(L, DIM + 45)
    synthetic.append(Sample(m[:, :DIM], m[:, DIM:], L, None, int(fs.label)))
print("class counts after: ", np.bincount([int(f.label) for f in balanced]).tolist())

train_set, test_set = samples[:96] + synthetic, samples[96:]
model = DcnnModel(DcnnConfig(word_dim=DIM, seq_len=L, word_filters=(32, 32),
                             pos_filters=(8, 8)), seed=0)
report = train(model, train_set, epochs=25, lr=3e-3, seed=0)
print("loss by epoch:", [round(x, 3) for x in report.epoch_losses[::5]])

tags, probs = predict(model, test_set)
gold = [t for s in test_set for t in s.tags[:s.length]]
pred = ["BIO"[i] for seq in tags for i in seq]
print("held-out token F1:", round(tag_f1(pred, gold).f1, 3))
print("held-out sentiment accuracy:",
      round(sentiment_accuracy((probs >= 0.5).astype(int).tolist(),
                               [s.label for s in test_set]), 3))
