"""
Backpropagation and Levenberg-Marquardt
=======================================

Trains the same small network with both methods on the geometric features
of a six-letter alphabet and prints how the error falls.
"""

import numpy as np

from hcrkit.harness import (ExperimentConfig, FeatureCache, load_dataset, preprocess_dataset,
                            split_indices)
from hcrkit.imaging import GlyphGenConfig
from hcrkit.mlp import TrainConfig, init_mlp, one_hot, predict_mlp, train_bp, train_lm

cfg = ExperimentConfig(alphabet=tuple("AEHLTZ"),
                       synthetic=GlyphGenConfig(jitter_translate=1, samples_per_class=6, seed=2),
                       train_per_class=4, test_per_class=2)
ds = load_dataset(cfg)
prepared, _ = preprocess_dataset(ds)
train, test = split_indices(ds, prepared.keys(), cfg.train_per_class, cfg.test_per_class)
cache = FeatureCache(prepared)
X, Xt = cache.matrix(train, "geometric"), cache.matrix(test, "geometric")
y, yt = ds.labels[train], ds.labels[test]
T = one_hot(y, len(ds.alphabet))

net = init_mlp((X.shape[1], 16, len(ds.alphabet)), seed=0)
# the loss averages over every output unit, so the useful BP step size grows
# with the number of classes; 2.0 suits six classes, the default suits 26
train_cfg = TrainConfig(hidden=16, learning_rate=2.0, max_epochs=3000, max_iterations=60)

for name, trainer in (("BP", train_bp), ("LM", train_lm)):
    fitted, trace = trainer(net, X, T, train_cfg)
    acc = np.mean([predict_mlp(fitted, x) == k for x, k in zip(Xt, yt)])
    mse = trace.mse
    steps = [0, len(mse) // 4, len(mse) // 2, len(mse) - 1]
    print(f"{name}: stop={trace.stop_reason} after {trace.records[-1].iteration} steps, "
          f"test accuracy {acc:.2%}")
    print("    mse at", ", ".join(f"{trace.records[i].iteration}: {mse[i]:.2e}" for i in steps))
