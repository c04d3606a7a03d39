"""Experiment and generator configuration, stored as JSON files."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from scriptmix.errors import ConfigError
from scriptmix.nn.crnn import CrnnConfig

_CRNN_KEYS = {
    "input_height",
    "stem_kernel",
    "stem_stride",
    "stage_blocks",
    "stage_channels",
    "lstm_layers",
    "lstm_hidden",
    "aux_loss_weight",
}

SAMPLING_MODES = ("proportional-mix", "balanced")


def stable_int(value) -> int:
    """Platform-independent 63-bit integer for seeding substreams."""
    if isinstance(value, (int, np.integer)):
        return int(value) & ((1 << 63) - 1)
    digest = hashlib.sha256(str(value).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def substream(*parts) -> np.random.Generator:
    """Named random substream: all experiment randomness flows through here."""
    return np.random.default_rng(np.random.SeedSequence([stable_int(p) for p in parts]))


@dataclass
class ExperimentConfig:
    """One training configuration: a target, its auxiliaries, and the budget.

    ``k`` caps the target training subset ("full" disables the cap);
    auxiliaries are always used in full. ``crnn`` holds architecture
    overrides (vocab size is derived from the data at run time).
    """

    name: str
    target: str
    datasets: dict[str, str]
    k: int | str
    seed: int
    iteration_budget: int
    auxiliaries: list[str] = field(default_factory=list)
    eval_every: int = 200
    sampling_mode: str = "proportional-mix"
    batch_size: int = 16
    base_lr: float = 5e-4
    weight_decay: float = 0.01
    lr_milestones: tuple[float, ...] = (0.5, 0.75)
    lr_gamma: float = 0.1
    runs: int = 3
    crnn: dict = field(default_factory=dict)
    augment: bool = True
    max_width: int = 1450

    def __post_init__(self):
        self.auxiliaries = list(self.auxiliaries)
        self.lr_milestones = tuple(self.lr_milestones)
        self.validate()

    @property
    def j(self) -> int:
        return len(self.auxiliaries)

    def validate(self) -> None:
        if self.target not in self.datasets:
            raise ConfigError(f"target {self.target!r} not in datasets")
        for a in self.auxiliaries:
            if a not in self.datasets:
                raise ConfigError(f"auxiliary {a!r} not in datasets")
            if a == self.target:
                raise ConfigError("target cannot also be an auxiliary")
        if not (self.k == "full" or (isinstance(self.k, int) and self.k >= 1)):
            raise ConfigError(f"k must be a positive integer or 'full', got {self.k!r}")
        if self.iteration_budget < 1:
            raise ConfigError("iteration_budget must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.sampling_mode not in SAMPLING_MODES:
            raise ConfigError(f"sampling_mode must be one of {SAMPLING_MODES}")
        unknown = set(self.crnn) - _CRNN_KEYS
        if unknown:
            raise ConfigError(f"unknown crnn config keys: {sorted(unknown)}")
        if "vocab_size" in self.crnn:
            raise ConfigError("crnn.vocab_size is derived from the data, not configured")

    def crnn_config(self, vocab_size: int) -> CrnnConfig:
        return CrnnConfig(vocab_size=vocab_size, **self.crnn)

    @property
    def input_height(self) -> int:
        return int(self.crnn.get("input_height", 48))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad experiment config: {e}") from None

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: invalid JSON: {e}") from None
        return cls.from_dict(d)

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class GenConfig:
    """Synthetic benchmark description for the data generator."""

    seed: int
    n_shared: int
    uniques: list[int]
    names: list[str]
    corpora: list[dict]  # per script: n_lines, duplication, lexicon_size, split_fractions
    zipf_exponent: float = 1.1
    line_length_range: tuple[int, int] = (6, 10)
    writer_styles: int = 8
    rtl: bool = True
    height: int = 48

    def __post_init__(self):
        self.uniques = list(self.uniques)
        self.names = list(self.names)
        self.line_length_range = tuple(self.line_length_range)
        if len(self.names) != len(self.uniques) or len(self.corpora) != len(self.uniques):
            raise ConfigError("names, uniques, and corpora must have equal length")
        for c in self.corpora:
            if "n_lines" not in c:
                raise ConfigError("each corpus entry needs n_lines")

    @classmethod
    def from_file(cls, path: str) -> "GenConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: invalid JSON: {e}") from None
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad generator config: {e}") from None
