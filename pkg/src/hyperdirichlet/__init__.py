"""Finite Gaussian mixtures with a Gamma hyperprior on the Dirichlet concentration."""
from .alpha_posterior import AlphaConditional, GammaHyper, log_density_and_deriv, sample_alpha
from .ars import ArsHull, LogConcaveTarget, hull_init
from .gibbs import ChainConfig, MixtureState, Trace, gibbs_sweep, run_chain
from .niw import ClusterStats, NIWParams, log_predictive

__version__ = "0.1.0"
