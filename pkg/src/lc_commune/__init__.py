"""Community detection in sparse latent space networks.

Spectral initialization with weighted k-median, local refinement by
normalized edge counting, a leave-one-out reference variant, a simulator for
the latent eigenmodel, and Monte-Carlo evaluators of the error rates.
"""

from .genmodel import LatentModelSpec, OmegaLaw, draw_model, preset_spec
from .graph_io import AdjacencyMatrix, load_edge_list, read_edge_list
from .pipeline import InitConfig, KMedianConfig, initialize, speclore
from .provable import provable_cluster
from .refine import refine
from .theory import bayes_risk, misclustering_loss, rate_bounds

__all__ = [
    "AdjacencyMatrix", "InitConfig", "KMedianConfig", "LatentModelSpec", "OmegaLaw",
    "bayes_risk", "draw_model", "initialize", "load_edge_list", "misclustering_loss",
    "preset_spec", "provable_cluster", "rate_bounds", "read_edge_list", "refine", "speclore",
]
__version__ = "0.1.0"
