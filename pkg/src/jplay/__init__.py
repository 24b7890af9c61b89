"""Joint and progressive linearized subspace learning (J-Play)."""

from .autorule import AdmmConfig, fit_autorule, project_nonneg, project_unit_columns
from .classify import grid_search, nn_classify, one_hot, overall_accuracy
from .data import Dataset, load_binary, load_csv, normalize, save_binary, save_csv, synth_blobs
from .embed import Projection, apply, fit_lpp, fit_pca
from .graph import GraphLaplacian, build_graph, knn_adjacency, laplacian
from .model import JPlayConfig, TrainedModel, fit, objective, transform, update_p
from .serialize import load_model, save_model

__version__ = "0.1.0"
