"""Gaussian graphical model inference with a noisy stochastic block model."""
from .greedy import FitResult, FitTrace, GreedyConfig, greedy_fit
from .icl import IclValue, Variant, icl_total
from .model import Hyperparams, LatentState, compute_count_stats
from .mtp import bh_select, fdp_tdp, lvalue_fdr_select

__version__ = "0.1.0"

__all__ = [
    "FitResult",
    "FitTrace",
    "GreedyConfig",
    "Hyperparams",
    "IclValue",
    "LatentState",
    "Variant",
    "bh_select",
    "compute_count_stats",
    "fdp_tdp",
    "greedy_fit",
    "icl_total",
    "lvalue_fdr_select",
]
