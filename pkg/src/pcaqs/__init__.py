"""PCA-guided quantile sampling (PCA-QS) and fidelity benchmarks."""

__version__ = "0.1.0"

from .ingest import DataMatrix, RunConfig, Scaler, load_csv, parse_config, standardize, write_csv
from .pca import PcaModel, fit_pca, project, select_k_spectral_gap, select_k_variance
from .sampler import SamplePlan, group_retention, pcaqs_sample, srs_sample
from .strata import GroupAssignment, QuantileGrid, assign_bins, composite_keys, compute_bin_edges

__all__ = [
    "DataMatrix", "GroupAssignment", "PcaModel", "QuantileGrid", "RunConfig", "SamplePlan", "Scaler",
    "assign_bins", "composite_keys", "compute_bin_edges", "fit_pca", "group_retention", "load_csv",
    "parse_config", "pcaqs_sample", "project", "select_k_spectral_gap", "select_k_variance",
    "srs_sample", "standardize", "write_csv",
]
