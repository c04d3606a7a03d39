"""Cross-script joint-training lab for line-level handwritten text recognition.

A CRNN+CTC recognizer with hand-rolled numpy forward/backward passes, a
synthetic-script data generator with controlled character overlap, and the
training/evaluation/analysis protocol for studying character-level transfer
between scripts under low-resource regimes.
"""

__version__ = "0.1.0"

from scriptmix.errors import ConfigError, DataError, DivergenceError

__all__ = ["ConfigError", "DataError", "DivergenceError", "__version__"]
