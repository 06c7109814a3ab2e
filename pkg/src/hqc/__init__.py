"""Hierarchical clustering of qualitative values using Maximum Mean Discrepancy.

Each distinct value of a qualitative column starts as a cluster of rows;
clusters are merged closest-first, where closeness is the MMD between the
clusters' quantitative rows.
"""

__version__ = "0.1.0"

from .data import Dataset, Sample, ValueGroup, group_by_value, load_csv, sample_for, standardize
from .embedding import DissimilarityPCA, Embedding2D, embed_dissimilarity
from .engine import (
    ClusterNode,
    DissimilarityMatrix,
    LinkageRecord,
    cut_linkage,
    initial_dissimilarity,
    merge_step,
    run_hqc,
)
from .estimator import HierarchicalQualitativeClustering
from .exceptions import ConfigError, DataError, HQCError, LinkageParseError, SmallSampleWarning
from .statdist import (
    KernelConfig,
    TwoSampleResult,
    ad_statistic,
    bootstrap_pvalue,
    jaccard_distance,
    ks_statistic,
    mmd2_unbiased,
    mmd_distance,
    overlap_dissimilarity,
    rbf_kernel,
)

__all__ = [
    "ClusterNode",
    "ConfigError",
    "DataError",
    "Dataset",
    "DissimilarityMatrix",
    "DissimilarityPCA",
    "Embedding2D",
    "HQCError",
    "HierarchicalQualitativeClustering",
    "KernelConfig",
    "LinkageParseError",
    "LinkageRecord",
    "Sample",
    "SmallSampleWarning",
    "TwoSampleResult",
    "ValueGroup",
    "ad_statistic",
    "bootstrap_pvalue",
    "cut_linkage",
    "embed_dissimilarity",
    "group_by_value",
    "initial_dissimilarity",
    "jaccard_distance",
    "ks_statistic",
    "load_csv",
    "merge_step",
    "mmd2_unbiased",
    "mmd_distance",
    "overlap_dissimilarity",
    "rbf_kernel",
    "run_hqc",
    "sample_for",
    "standardize",
]
