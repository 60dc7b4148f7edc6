"""Scenario-indexed polyhedral uncertainty sets from scarce multi-attribute hourly data."""

from .clustering import GroupClusters, KMeansPP, assign, kmeans
from .config import PipelineConfig
from .dataset import (
    BoundaryStats,
    ProfileStandardizer,
    RawSeries,
    StandardizedDataset,
    boundary_stats,
    destandardize,
    load_csv,
    standardize,
)
from .density import MarginalKDE, fit_kde, quantile, silverman_bandwidth
from .grouping import AttributeGrouping, CorrelationMatrix, auto_group, correlation_matrix, explicit_group
from .model import GroupModel, ScenarioPUSModel
from .multiday import DayChain, chain_membership, chain_sample, export_chain
from .polytope import (
    GroupScenarioPUS,
    LiftedPolytopeExport,
    PusParams,
    Verdict,
    build_pus,
    export_lifted,
    membership,
    sample,
)
from .reduction import PcaBasis, TruncatedPCA, choose_rank, fit_pca, lift, project
from .scenarios import ScenarioPUS, ScenarioSet, filter_scenarios, joint_probabilities, scenario_count_curve, scenario_pus

__version__ = "0.1.0"
