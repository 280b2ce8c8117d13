"""
Synthetic time series with a known causal graph
===============================================

Sample a temporal adjacency matrix (TAM), check it, simulate the three
data families and write everything to disk.
"""

import tempfile

import numpy as np

from gdbn import graph
from gdbn.datagen import GenConfig, generate, is_stationary, load_dataset, make_windows, benchmark_config, save_dataset

# a sparse, stationary VAR(5) over 6 variables
cfg = GenConfig(m=6, p=5, mode="linear", seed=1)
ds = generate(cfg)
A = ds.ground_truth
print("TAM shape:", A.weights.shape, " non-zeros:", np.count_nonzero(A.weights))
print("spectral radius of the companion matrix: %.3f" % is_stationary(A)[1])

# every variable drives itself at lag 1, every pair interacts at one lag
print("hypotheses hold:", graph.validate_hypotheses(graph.threshold(A, 0.0)).ok)
print(graph.serialize(A)[:200])

# the sine families stay bounded, so the dense graph needs no stationarity filter
for mode in ("nl_outer", "nl_inner"):
    d = generate(benchmark_config(mode, m=6, seed=1))
    print(mode, "edges:", np.count_nonzero(d.ground_truth.weights), " range: [%.2f, %.2f]" % (d.values.min(), d.values.max()))

# sliding windows of s_o observed + s_p predicted steps
wb = make_windows(ds, s_o=10, s_p=3)
print("windows:", wb.windows.shape)

with tempfile.TemporaryDirectory() as out:
    save_dataset(ds, out)
    back = load_dataset(out)
    print("round trip exact:", np.array_equal(back.values, ds.values) and back.ground_truth == A)
