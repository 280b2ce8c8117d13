"""Causal discovery in multivariate time series with a graph-based deep
Bayesian network (GDBN) trained by variational inference.

Submodules: ``tensor`` (reverse-mode autodiff), ``nn`` (MLPs, Adam,
gradient check), ``graph`` (temporal adjacency matrices), ``datagen``
(synthetic benchmarks), ``model``, ``training``, ``evaluation``,
``baseline`` (VAR-lasso) and ``cli``.
"""

__version__ = "0.1.0"
