"""
A small benchmark grid
======================

Both methods on the same generated data, several seeds, mean and std per
cell.  The full-size grid is ``gdbn bench`` with a config file; this one
is shrunk to run in about a minute.
"""

from gdbn.baseline import LassoConfig
from gdbn.datagen import benchmark_config
from gdbn.evaluation import benchmark
from gdbn.training import TrainConfig

cells = [benchmark_config("nl_inner", m=4, T=300), benchmark_config("nl_outer", m=4, T=300)]
results, aggs = benchmark(
    cells,
    seeds=[0, 1],
    methods=("gdbn", "var_lasso"),
    model=dict(s_o=6, s_p=2, d_z=2, hidden=8),
    train_config=TrainConfig(epochs=150, patience=0),
    lasso_config=LassoConfig(lam=0.01),
)

for r in results:
    print("%-12s seed %d  %-9s  auroc %.3f  (%.1fs)" % (r.cell, r.seed, r.method, r.metrics["auroc"], r.seconds))
for a in aggs:
    print("%-12s %-9s  auroc %.3f +/- %.3f" % (a.cell, a.method, a.mean["auroc"], a.std["auroc"]))
