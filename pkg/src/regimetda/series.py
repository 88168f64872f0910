"""Containers for single trials and multi-trial datasets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np


@dataclass(frozen=True)
class TrialSeries:
    """One trial: a uniformly sampled real-valued signal."""

    values: np.ndarray
    sampling_rate_hz: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError(f"trial must be one-dimensional, got shape {values.shape}")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sampling_rate_hz


@dataclass(frozen=True)
class MultiTrialDataset:
    """R trials of equal length T sharing one sampling rate.

    ``data`` is an (R, T) array; ``ground_truth`` is the index of the last
    trial before the regime change (trials are numbered from 1), if known.
    """

    data: np.ndarray
    sampling_rate_hz: float
    ground_truth: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"dataset must be (trials, samples), got shape {data.shape}")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        if self.ground_truth is not None and not 1 <= self.ground_truth < data.shape[0]:
            raise ValueError(f"ground_truth {self.ground_truth} outside 1..{data.shape[0] - 1}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_trials(cls, trials, ground_truth=None, meta=None) -> "MultiTrialDataset":
        trials = list(trials)
        if not trials:
            raise ValueError("no trials")
        fs = trials[0].sampling_rate_hz
        lengths = {len(t) for t in trials}
        if len(lengths) != 1:
            raise ValueError(f"trials differ in length: {sorted(lengths)}")
        if any(t.sampling_rate_hz != fs for t in trials):
            raise ValueError("trials differ in sampling rate")
        return cls(np.stack([t.values for t in trials]), fs, ground_truth, dict(meta or {}))

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]

    @property
    def trial_length(self) -> int:
        return self.data.shape[1]

    @property
    def trials(self) -> list[TrialSeries]:
        return list(self)

    def __len__(self) -> int:
        return self.n_trials

    def __iter__(self) -> Iterator[TrialSeries]:
        for row in self.data:
            yield TrialSeries(row, self.sampling_rate_hz)

    def __getitem__(self, index: int) -> TrialSeries:
        return TrialSeries(self.data[index], self.sampling_rate_hz)
