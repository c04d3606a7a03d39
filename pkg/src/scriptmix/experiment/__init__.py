from scriptmix.experiment.config import ExperimentConfig, GenConfig
from scriptmix.experiment.data import CorpusData, LineDataset, build_union_vocab
from scriptmix.experiment.sampling import sample_k_subset
from scriptmix.experiment.runner import run_training, evaluate_checkpoint, evaluate_model
from scriptmix.experiment.analyze import TransferReport, analyze_transfer

__all__ = [
    "ExperimentConfig",
    "GenConfig",
    "CorpusData",
    "LineDataset",
    "build_union_vocab",
    "sample_k_subset",
    "run_training",
    "evaluate_checkpoint",
    "evaluate_model",
    "TransferReport",
    "analyze_transfer",
]
