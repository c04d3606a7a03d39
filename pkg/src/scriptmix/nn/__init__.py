from scriptmix.nn.tensor import Tensor
from scriptmix.nn.crnn import CrnnConfig, CrnnModel
from scriptmix.nn.optim import AdamW, MultiStepLr

__all__ = ["Tensor", "CrnnConfig", "CrnnModel", "AdamW", "MultiStepLr"]
