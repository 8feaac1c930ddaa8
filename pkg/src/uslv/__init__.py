"""Stochastic-local-volatility engine on quasi-birth-death Markov chains.

Layers, bottom up: a linearity-generating term-structure curve, state
grids, Markov generators, transient probabilities by randomization,
nonparametric local-volatility calibration, two stochastic-volatility
extensions (activity-rate and implied-time-change), and a backward
induction pricer behind a batch CLI.
"""

__version__ = "0.1.0"
