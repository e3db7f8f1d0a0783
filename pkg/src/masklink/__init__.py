"""Mask-track association: short-term linking, long-term merging, scoring."""

from .model import (
    Backend,
    BinaryMask,
    Detection,
    PipelineConfig,
    RefVariant,
    SequenceMeta,
    Track,
    Tracklet,
    filter_detections,
)
from .maskops import ColorHistogram, FlowField
from .assignment import AssignmentResult, hungarian_min
from .sta import build_tracklets, sta_step
from .lta import (
    PairCandidate,
    admissible_pairs,
    final_filter,
    greedy_merge,
    overlap_cost,
    select_references,
    spatial_cost,
    temporal_cost,
)
from .similarity import (
    Heatmap,
    HeatmapProvider,
    PropagationJob,
    make_backend,
    pair_jobs,
    sim_reid,
    sim_rgb,
    sim_stm,
)
from .metrics import EvalReport, evaluate
from .oracles import oracle_lta, oracle_slta
from .pipeline import LoadedSequence, RunResult, RunStats, load_sequence_dir, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AssignmentResult",
    "Backend",
    "BinaryMask",
    "ColorHistogram",
    "Detection",
    "EvalReport",
    "FlowField",
    "Heatmap",
    "HeatmapProvider",
    "LoadedSequence",
    "PairCandidate",
    "PipelineConfig",
    "PropagationJob",
    "RefVariant",
    "RunResult",
    "RunStats",
    "SequenceMeta",
    "Track",
    "Tracklet",
    "admissible_pairs",
    "build_tracklets",
    "evaluate",
    "filter_detections",
    "final_filter",
    "greedy_merge",
    "hungarian_min",
    "load_sequence_dir",
    "make_backend",
    "oracle_lta",
    "oracle_slta",
    "overlap_cost",
    "pair_jobs",
    "run_pipeline",
    "select_references",
    "sim_reid",
    "sim_rgb",
    "sim_stm",
    "spatial_cost",
    "sta_step",
    "temporal_cost",
    "__version__",
]
