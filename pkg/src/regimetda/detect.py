"""Online regime-change detection across trials.

Three comparison regimes are supported:

1. past vs next: the running average of the smoothed periodograms of trials
   ``1..r`` against the smoothed periodogram of trial ``r+1``;
2. present vs next: smoothed periodogram of trial ``r`` against ``r+1``;
3. present vs next on spectrograms.

Each comparison yields one discrepancy per metric, emitted as soon as trial
``r+1`` arrives.  Discrepancies are labelled by the index of that incoming
trial (2..R), so the first alarm directly estimates the first post-change
trial.  A CUSUM with burn-in estimates of the in-control mean turns each
discrepancy stream into alarms.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import __version__
from .metrics import MetricKind, emd_1d, fn_distance, wasserstein_diagrams
from .series import MultiTrialDataset, TrialSeries
from .simgen import ScenarioSpec
from .spectral import (
    Spectrogram,
    Spectrum,
    default_half_bandwidth,
    default_half_window,
    periodogram,
    smooth,
    spectrogram,
    stack_mean,
    stack_update,
)
from .tda import filter_diagram, sublevel_ph_1d, sublevel_ph_2d

BOUNDARY_SCHEMA = "regimetda-boundaries/1"


class ConfigError(ValueError):
    """Detector configuration that cannot be run."""


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.  ``None`` spectral parameters resolve per dataset."""

    scenario: int = 1
    metric: MetricKind = MetricKind("L1_fn")
    burn_in: int = 20
    threshold_policy: str = "kappa_sigma"
    kappa: float = 5.0
    h: Optional[float] = None
    standardize: bool = False
    half_bandwidth: Optional[int] = None
    half_window: Optional[int] = None
    hop: Optional[int] = None
    spectrogram_smoothing: tuple = (0, 0)
    diagram_source: str = "smoothed"
    log_transform: bool = False
    ph_method: str = "union_find"

    def __post_init__(self):
        if isinstance(self.metric, str):
            object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        object.__setattr__(self, "spectrogram_smoothing", tuple(int(v) for v in self.spectrogram_smoothing))
        if self.scenario not in (1, 2, 3):
            raise ConfigError(f"scenario must be 1, 2 or 3, got {self.scenario!r}")
        if self.burn_in < 2:
            raise ConfigError("burn_in must be at least 2")
        if self.threshold_policy not in ("kappa_sigma", "absolute"):
            raise ConfigError(f"unknown threshold policy {self.threshold_policy!r}")
        if self.threshold_policy == "absolute" and not (self.h is not None and self.h > 0):
            raise ConfigError("absolute threshold policy needs h > 0")
        if self.threshold_policy == "kappa_sigma" and not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if self.diagram_source not in ("smoothed", "raw"):
            raise ConfigError(f"diagram_source must be 'smoothed' or 'raw', got {self.diagram_source!r}")
        check_compatible(self.scenario, self.metric)

    @property
    def l0_policy(self) -> str:
        return "from_start" if self.scenario == 1 else "previous_only"

    @property
    def uses_spectrograms(self) -> bool:
        return self.scenario == 3

    def with_metric(self, metric) -> "DetectorConfig":
        return replace(self, metric=MetricKind.parse(metric) if isinstance(metric, str) else metric)

    def resolved(self, trial_length: int, sampling_rate_hz: float) -> "DetectorConfig":
        """Fill spectral defaults for trials of the given shape."""
        m = default_half_bandwidth(trial_length) if self.half_bandwidth is None else self.half_bandwidth
        L = default_half_window(sampling_rate_hz) if self.half_window is None else self.half_window
        L = min(L, (trial_length - 1) // 2)
        hop = max(1, (2 * L + 1) // 4) if self.hop is None else self.hop
        return replace(self, half_bandwidth=int(m), half_window=int(L), hop=int(hop))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["metric"] = self.metric.name
        d["filter_fraction"] = self.metric.filter_fraction
        d["l0_policy"] = self.l0_policy
        d["spectrogram_smoothing"] = list(self.spectrogram_smoothing)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        d = dict(d)
        d.pop("l0_policy", None)
        frac = d.pop("filter_fraction", 0.01)
        if "metric" in d:
            d["metric"] = MetricKind.parse(d["metric"], frac)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown detector settings: {sorted(unknown)}")
        return cls(**d)


def check_compatible(scenario: int, metric: MetricKind) -> None:
    if scenario == 3 and metric.kind == "W1_fn":
        raise ConfigError("the earth mover's distance compares spectra; not available in scenario 3")
    if metric.is_diagram and metric.dim == 1 and scenario != 3:
        raise ConfigError("H1 diagrams need spectrograms (scenario 3)")


# --- per-trial features --------------------------------------------------------------


@dataclass(frozen=True)
class TrialFeatures:
    estimate: Union[Spectrum, Spectrogram]
    diagram_field: Union[Spectrum, Spectrogram, None]
    diagrams: Optional[dict]


def _diagram_values(est, cfg):
    values = est.power
    if cfg.log_transform:
        floor = max(float(values.max()), 1e-300) * 1e-12
        values = np.log10(np.maximum(values, floor))
    return values


def field_diagrams(values: np.ndarray, cfg: DetectorConfig, filter_fraction: float) -> dict:
    """Filtered sublevel diagrams of a 1D or 2D field keyed by dimension."""
    if values.ndim == 1:
        dgms = {0: sublevel_ph_1d(values)}
    else:
        d0, d1 = sublevel_ph_2d(values, cfg.ph_method)
        dgms = {0: d0, 1: d1}
    eps = filter_fraction * float(values.max() - values.min())
    return {dim: filter_diagram(d, eps) for dim, d in dgms.items()}


def trial_features(trial: TrialSeries, cfg: DetectorConfig, metrics: Sequence[MetricKind]) -> TrialFeatures:
    """Spectral estimate and (when needed) diagrams of one trial; ``cfg`` must be resolved."""
    if cfg.uses_spectrograms:
        est = spectrogram(trial, cfg.half_window, cfg.hop, cfg.spectrogram_smoothing)
        field_est = est
    else:
        raw = periodogram(trial)
        est = smooth(raw, cfg.half_bandwidth)
        field_est = est if cfg.diagram_source == "smoothed" else raw
    diagram_metrics = [m for m in metrics if m.is_diagram]
    if not diagram_metrics:
        return TrialFeatures(est, None, None)
    diagrams = field_diagrams(_diagram_values(field_est, cfg), cfg, diagram_metrics[0].filter_fraction)
    return TrialFeatures(est, field_est, diagrams)


def _distance(metric: MetricKind, past, past_diagrams, nxt: TrialFeatures) -> float:
    if metric.kind == "L1_fn":
        return fn_distance(past, nxt.estimate, 1)
    if metric.kind == "L2_fn":
        return fn_distance(past, nxt.estimate, 2)
    if metric.kind == "W1_fn":
        return emd_1d(past, nxt.estimate)
    return wasserstein_diagrams(past_diagrams[metric.dim], nxt.diagrams[metric.dim], 2.0)


class _Fold:
    """Sequential comparison state: running stack (scenario 1) or previous trial."""

    def __init__(self, cfg: DetectorConfig, metrics: Sequence[MetricKind]):
        self.cfg = cfg
        self.metrics = list(metrics)
        self.stack = None
        self.field_stack = None
        self.previous: Optional[TrialFeatures] = None
        self.needs_diagrams = any(m.is_diagram for m in self.metrics)

    def _past(self):
        if self.cfg.scenario != 1:
            return self.previous.estimate, self.previous.diagrams
        mean = stack_mean(self.stack)
        if not self.needs_diagrams:
            return mean, None
        field_mean = mean if self.field_stack is None else stack_mean(self.field_stack)
        frac = next(m for m in self.metrics if m.is_diagram).filter_fraction
        return mean, field_diagrams(_diagram_values(field_mean, self.cfg), self.cfg, frac)

    def _absorb(self, feats: TrialFeatures):
        if self.cfg.scenario == 1:
            self.stack = stack_update(self.stack, feats.estimate)
            if self.needs_diagrams and feats.diagram_field is not feats.estimate:
                self.field_stack = stack_update(self.field_stack, feats.diagram_field)
        self.previous = feats

    def step(self, feats: TrialFeatures) -> Optional[dict]:
        if self.previous is None:
            self._absorb(feats)
            return None
        past, past_dgms = self._past()
        out = {m.name: _distance(m, past, past_dgms, feats) for m in self.metrics}
        self._absorb(feats)
        return out


# --- series and CUSUM ---------------------------------------------------------------


@dataclass(frozen=True)
class DistanceSeries:
    """Discrepancies ``values[j]`` raised by the arrival of trial ``j + 2``."""

    values: np.ndarray
    metric: str
    scenario: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if np.any(self.values < 0):
            raise ValueError("distances must be non-negative")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return np.arange(2, len(self) + 2)

    def window_mean(self, first: int, last: int) -> float:
        """Mean over labels ``first..last`` inclusive."""
        lab = self.labels
        return float(self.values[(lab >= first) & (lab <= last)].mean())


@dataclass(frozen=True)
class CusumResult:
    statistics: np.ndarray
    mu: float
    sigma: float
    h: float
    alarms: tuple
    first_alarm: Optional[int]
    standardized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "statistics", np.asarray(self.statistics, dtype=float))
        object.__setattr__(self, "alarms", tuple(int(a) for a in self.alarms))


def _burn_in_stats(values, burn_in):
    # exact rational arithmetic: a constant block gives its value and zero spread
    block = [float(v) for v in values[:burn_in]]
    return statistics.mean(block), statistics.stdev(block)


def _resolve_threshold(cfg, mu, sigma):
    if cfg.threshold_policy == "absolute":
        return float(cfg.h)
    if sigma <= 0:
        raise ConfigError("burn-in distances have zero spread; use an absolute threshold")
    return cfg.kappa if cfg.standardize else cfg.kappa * sigma


def _cusum_values(values, mu, sigma, standardize):
    c = 0.0
    out = []
    for d in values:
        step = (d - mu) / sigma if standardize else d - mu
        c = max(0.0, c + step)
        out.append(c)
    return out


def cusum(series: DistanceSeries, cfg: DetectorConfig, mu: Optional[float] = None) -> CusumResult:
    """CUSUM ``C_r = max(0, C_{r-1} + D_r - mu)`` with alarms where ``C_r > h``.

    ``mu`` and the spread come from the first ``cfg.burn_in`` values, which
    are assumed change-free; pass ``mu`` to override the mean.
    """
    values = series.values.tolist()
    if cfg.burn_in >= len(values):
        raise ConfigError(f"burn-in of {cfg.burn_in} needs a longer series than {len(values)}")
    mu_hat, sigma = _burn_in_stats(values, cfg.burn_in)
    mu = mu_hat if mu is None else float(mu)
    h = _resolve_threshold(cfg, mu, sigma)
    if cfg.standardize and sigma <= 0:
        raise ConfigError("cannot standardize with zero burn-in spread")
    stats = _cusum_values(values, mu, sigma, cfg.standardize)
    labels = series.labels.tolist()
    alarms = tuple(lab for lab, c in zip(labels, stats) if c > h)
    return CusumResult(np.array(stats), mu, sigma, h, alarms, alarms[0] if alarms else None, cfg.standardize)


class CusumMonitor:
    """Streaming CUSUM: buffers the burn-in, then updates one value at a time."""

    def __init__(self, cfg: DetectorConfig):
        self.cfg = cfg
        self.buffer: list = []
        self.stats: list = []
        self.alarms: list = []
        self.mu = self.sigma = self.h = None
        self._c = 0.0

    def _advance(self, d, label):
        step = (d - self.mu) / self.sigma if self.cfg.standardize else d - self.mu
        self._c = max(0.0, self._c + step)
        self.stats.append(self._c)
        if self._c > self.h:
            self.alarms.append(label)

    def update(self, d: float) -> None:
        self.buffer.append(d)
        label = len(self.buffer) + 1
        if self.mu is None:
            if len(self.buffer) < self.cfg.burn_in:
                return
            self.mu, self.sigma = _burn_in_stats(self.buffer, self.cfg.burn_in)
            self.h = _resolve_threshold(self.cfg, self.mu, self.sigma)
            for j, value in enumerate(self.buffer):
                self._advance(value, j + 2)
            return
        self._advance(d, label)

    @property
    def alarm_raised(self) -> bool:
        return bool(self.alarms)

    def result(self) -> CusumResult:
        if self.mu is None or len(self.buffer) <= self.cfg.burn_in:
            raise ConfigError("series shorter than the burn-in")
        first = self.alarms[0] if self.alarms else None
        return CusumResult(np.array(self.stats), self.mu, self.sigma, self.h, tuple(self.alarms), first,
                           self.cfg.standardize)


# --- drivers ----------------------------------------------------------------------


def _resolve_metrics(cfg, metrics):
    metrics = [cfg.metric] if metrics is None else [
        MetricKind.parse(m, cfg.metric.filter_fraction) if isinstance(m, str) else m for m in metrics
    ]
    if not metrics:
        raise ConfigError("no metrics requested")
    names = [m.name for m in metrics]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate metrics in {names}")
    for m in metrics:
        check_compatible(cfg.scenario, m)
    return metrics


class OnlineDetector:
    """One-trial-at-a-time detector.

    ``push`` consumes the next trial and returns the discrepancies it raises
    (``None`` for the first trial) before any later trial is read.
    """

    def __init__(self, cfg: DetectorConfig, metrics: Optional[Sequence] = None):
        self.cfg = cfg
        self.metrics = _resolve_metrics(cfg, metrics)
        self._fold: Optional[_Fold] = None
        self._shape = None
        self.values: dict = {m.name: [] for m in self.metrics}
        self.monitors = {m.name: CusumMonitor(cfg) for m in self.metrics}

    @property
    def resolved_config(self) -> DetectorConfig:
        if self._shape is None:
            raise RuntimeError("no trial seen yet")
        return self.cfg.resolved(*self._shape)

    def push(self, trial: TrialSeries) -> Optional[dict]:
        shape = (len(trial), trial.sampling_rate_hz)
        if self._shape is None:
            self._shape = shape
            self._fold = _Fold(self.resolved_config, self.metrics)
        elif shape != self._shape:
            raise ValueError(f"trial shape {shape} differs from the first trial's {self._shape}")
        feats = trial_features(trial, self._fold.cfg, self.metrics)
        out = self._fold.step(feats)
        if out is not None:
            for name, d in out.items():
                self.values[name].append(d)
                self.monitors[name].update(d)
        return out

    def series(self) -> dict:
        return {name: DistanceSeries(np.array(v), name, self.cfg.scenario) for name, v in self.values.items()}

    def results(self) -> dict:
        return {name: mon.result() for name, mon in self.monitors.items()}


def _check_dataset(data: MultiTrialDataset):
    if data.n_trials < 3:
        raise ValueError("need at least three trials")


def distance_series_multi(data: MultiTrialDataset, cfg: DetectorConfig,
                          metrics: Optional[Sequence] = None, jobs: int = 1) -> dict:
    """Discrepancy series for several metrics in one pass over the trials.

    With ``jobs > 1`` per-trial spectra and diagrams are computed in worker
    processes; the comparison fold stays sequential in trial order.
    """
    _check_dataset(data)
    metrics = _resolve_metrics(cfg, metrics)
    rcfg = cfg.resolved(data.trial_length, data.sampling_rate_hz)
    trials = list(data)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            feats = list(pool.map(trial_features, trials, [rcfg] * len(trials), [metrics] * len(trials)))
    else:
        feats = [trial_features(t, rcfg, metrics) for t in trials]
    fold = _Fold(rcfg, metrics)
    values = {m.name: [] for m in metrics}
    for f in feats:
        out = fold.step(f)
        if out is not None:
            for name, d in out.items():
                values[name].append(d)
    return {name: DistanceSeries(np.array(v), name, cfg.scenario) for name, v in values.items()}


def distance_series(data: MultiTrialDataset, cfg: DetectorConfig) -> DistanceSeries:
    return distance_series_multi(data, cfg)[cfg.metric.name]


# --- report ---------------------------------------------------------------------------


@dataclass
class Report:
    config: DetectorConfig
    series: dict
    cusum: dict
    ground_truth: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def metric_names(self) -> list:
        return list(self.series)

    @property
    def n_boundaries(self) -> int:
        return len(next(iter(self.series.values())))

    def detection_delay(self, metric: str) -> Optional[int]:
        """``first_alarm - eta``; 1 means the first post-change trial raised it."""
        first = self.cusum[metric].first_alarm
        if first is None or self.ground_truth is None:
            return None
        return first - self.ground_truth

    def false_alarms(self, metric: str) -> Optional[int]:
        if self.ground_truth is None:
            return None
        return sum(1 for a in self.cusum[metric].alarms if a <= self.ground_truth)

    @property
    def any_alarm(self) -> bool:
        return any(res.alarms for res in self.cusum.values())

    def to_dict(self) -> dict:
        out = {
            "version": __version__,
            "config": self.config.to_dict(),
            "ground_truth": self.ground_truth,
            "labels": next(iter(self.series.values())).labels.tolist(),
            "metrics": {},
            "meta": self.meta,
        }
        for name, s in self.series.items():
            res = self.cusum[name]
            out["metrics"][name] = {
                "distances": s.values.tolist(),
                "cusum": res.statistics.tolist(),
                "mu": res.mu,
                "sigma": res.sigma,
                "h": res.h,
                "alarms": list(res.alarms),
                "first_alarm": res.first_alarm,
                "detection_delay": self.detection_delay(name),
                "false_alarms": self.false_alarms(name),
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """One row per boundary: label, then D and C per metric, then an alarm flag."""
        buf = io.StringIO()
        buf.write(f"# schema={BOUNDARY_SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        names = self.metric_names
        header = ["r"]
        for n in names:
            header += [f"D_{n}", f"C_{n}"]
        w.writerow(header + ["alarm"])
        labels = next(iter(self.series.values())).labels
        for j, lab in enumerate(labels):
            row = [int(lab)]
            alarm = 0
            for n in names:
                c = self.cusum[n].statistics[j]
                row += [repr(float(self.series[n].values[j])), repr(float(c))]
                alarm |= int(c > self.cusum[n].h)
            w.writerow(row + [alarm])
        return buf.getvalue()


def run_pipeline(source: Union[ScenarioSpec, MultiTrialDataset], cfg: DetectorConfig,
                 metrics: Optional[Sequence] = None, jobs: int = 1, streaming: bool = False) -> Report:
    """Generate or take a dataset, compute discrepancies and run CUSUM per metric."""
    data = source.generate() if isinstance(source, ScenarioSpec) else source
    _check_dataset(data)
    metrics = _resolve_metrics(cfg, metrics)
    if streaming:
        det = OnlineDetector(cfg, metrics)
        for trial in data:
            det.push(trial)
        series, results = det.series(), det.results()
    else:
        series = distance_series_multi(data, cfg, metrics, jobs)
        results = {name: cusum(s, cfg) for name, s in series.items()}
    rcfg = cfg.resolved(data.trial_length, data.sampling_rate_hz)
    meta = {
        "n_trials": data.n_trials,
        "trial_length": data.trial_length,
        "sampling_rate_hz": data.sampling_rate_hz,
        "half_bandwidth": rcfg.half_bandwidth,
        "half_window": rcfg.half_window if cfg.uses_spectrograms else None,
        "hop": rcfg.hop if cfg.uses_spectrograms else None,
        "diagram_filter_fraction": metrics[0].filter_fraction,
        "label_convention": "r = index of the incoming trial (2..R)",
    }
    meta.update({k: v for k, v in data.meta.items() if isinstance(v, (int, float, str, type(None)))})
    return Report(rcfg, series, results, data.ground_truth, meta)
