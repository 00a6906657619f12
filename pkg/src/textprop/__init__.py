"""Scene-text proposal generation, ranking and evaluation."""

from .evaluation import (GroundTruth, GtEntry, RecallCurve,
                         corpus_recall_curve, detection_rate, parse_cocotext_gt,
                         parse_icdar_gt, recall_curve)
from .grouping import (Dendrogram, GroupingParams, Proposal,
                       build_dendrogram, compute_region_features,
                       enumerate_hypotheses, quality_score)
from .imaging import (BoundingBox, ColorImage, GrayImage, Heatmap,
                      IntegralImage, box_mean, build_integral, iou,
                      load_heatmap, load_image, save_heatmap)
from .mser import MserParams, Region, detect_regions
from .ranking import RankedList, mask_mtp_means, rank_bas, rank_mtp, rank_sup
from .synthgen import Scene, SceneConfig, generate_scene, write_scene

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "ColorImage", "GrayImage", "Heatmap", "IntegralImage",
    "box_mean", "build_integral", "iou", "load_heatmap", "load_image",
    "save_heatmap",
    "MserParams", "Region", "detect_regions",
    "GroupingParams", "Dendrogram", "Proposal", "build_dendrogram",
    "compute_region_features", "enumerate_hypotheses", "quality_score",
    "RankedList", "mask_mtp_means", "rank_bas", "rank_mtp", "rank_sup",
    "GroundTruth", "GtEntry", "RecallCurve", "corpus_recall_curve",
    "detection_rate", "parse_cocotext_gt", "parse_icdar_gt", "recall_curve",
    "Scene", "SceneConfig", "generate_scene", "write_scene",
    "__version__",
]
