"""Heatmap exporter: a small two-class text segmentation network plus
batch inference writing TPHM v1 files consumable by the proposal
pipeline."""

from .export import ExportError, ExportJob, export_heatmaps, predict_text_prob
from .model import ARCH, TinyTextFCN, load_checkpoint, save_checkpoint
from .tphm import write_tphm
from .train import load_pairs, read_tphm, train

__all__ = [
    "ARCH",
    "ExportError",
    "ExportJob",
    "TinyTextFCN",
    "export_heatmaps",
    "load_checkpoint",
    "load_pairs",
    "predict_text_prob",
    "read_tphm",
    "save_checkpoint",
    "train",
    "write_tphm",
]

__version__ = "0.1.0"
