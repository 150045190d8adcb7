"""
Reliability of hitting metrics.

A weighted spike-and-slab random-effects model, fit per metric by Gibbs
sampling, separates metrics that carry stable player-specific signal from
those that are mostly season-to-season noise. Lasso and PCA runs serve as
external cross-checks.
"""

__version__ = "0.1.0"
