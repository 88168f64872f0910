"""Reader for IMS bearing run-to-failure recordings.

Each recording directory holds one ASCII file per snapshot, named by its
timestamp as ``YYYY.MM.DD.hh.mm.ss``.  A file is a whitespace-delimited
matrix with one row per sample and one column per accelerometer channel.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.signal import decimate as _decimate

from .series import MultiTrialDataset

log = logging.getLogger(__name__)

IMS_SAMPLING_RATE_HZ = 20000.0
IMS_SAMPLES_PER_FILE = 20480
CHANNEL_SCHEMA = "regimetda-channel/1"

_STAMP = re.compile(r"^(\d{4})\.(\d{1,2})\.(\d{1,2})\.(\d{1,2})\.(\d{1,2})\.(\d{1,2})$")


class IngestError(ValueError):
    """Base class for malformed recordings."""


class ColumnCountError(IngestError):
    pass


class TokenError(IngestError):
    pass


class ShortFileError(IngestError):
    pass


class NonFiniteError(IngestError):
    pass


class TimestampOrderError(IngestError):
    pass


class LayoutError(IngestError):
    """Requested bearing or accelerometer is not part of the layout."""


@dataclass(frozen=True)
class ImsExperimentLayout:
    """Column map of one experiment: ``channel_map[bearing]`` lists its columns."""

    name: str
    channel_count: int
    channel_map: dict
    sampling_rate_hz: float = IMS_SAMPLING_RATE_HZ
    samples_per_file: int = IMS_SAMPLES_PER_FILE

    def __post_init__(self):
        if self.channel_count < 1:
            raise LayoutError("channel_count must be positive")
        cmap = {int(b): tuple(int(c) for c in cols) for b, cols in self.channel_map.items()}
        for bearing, cols in cmap.items():
            if not cols or any(not 0 <= c < self.channel_count for c in cols):
                raise LayoutError(f"bearing {bearing}: columns {cols} outside 0..{self.channel_count - 1}")
        object.__setattr__(self, "channel_map", cmap)

    @classmethod
    def experiment(cls, number: int) -> "ImsExperimentLayout":
        """Defaults from the public dataset notes: experiment 1 has x/y accelerometers per bearing."""
        if number == 1:
            return cls("experiment-1", 8, {b: (2 * (b - 1), 2 * (b - 1) + 1) for b in range(1, 5)})
        if number in (2, 3):
            return cls(f"experiment-{number}", 4, {b: (b - 1,) for b in range(1, 5)})
        raise LayoutError(f"unknown IMS experiment {number!r}; expected 1, 2 or 3")

    def column(self, bearing: int, accel_index: int = 0) -> int:
        cols = self.channel_map.get(int(bearing))
        if cols is None:
            raise LayoutError(f"bearing {bearing} not in layout {self.name} (bearings {sorted(self.channel_map)})")
        if not 0 <= accel_index < len(cols):
            raise LayoutError(f"bearing {bearing} in layout {self.name} has {len(cols)} accelerometer(s); "
                              f"accel index {accel_index} is invalid")
        return cols[accel_index]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "channel_count": self.channel_count,
            "channel_map": {str(b): list(c) for b, c in sorted(self.channel_map.items())},
            "sampling_rate_hz": self.sampling_rate_hz,
            "samples_per_file": self.samples_per_file,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImsExperimentLayout":
        return cls(d["name"], int(d["channel_count"]), {int(b): c for b, c in d["channel_map"].items()},
                   float(d.get("sampling_rate_hz", IMS_SAMPLING_RATE_HZ)),
                   int(d.get("samples_per_file", IMS_SAMPLES_PER_FILE)))


@dataclass(frozen=True)
class TrialRecord:
    timestamp: _dt.datetime
    channels: np.ndarray  # (samples_per_file, channel_count)
    path: Optional[str] = None

    def channel(self, column: int) -> np.ndarray:
        return self.channels[:, column]


def parse_timestamp(name: str) -> Optional[_dt.datetime]:
    """Datetime encoded in a file name, or ``None`` if it does not parse."""
    m = _STAMP.match(name)
    if not m:
        return None
    try:
        return _dt.datetime(*(int(g) for g in m.groups()))
    except ValueError:
        return None


def format_timestamp(ts: _dt.datetime) -> str:
    return ts.strftime("%Y.%m.%d.%H.%M.%S")


def parse_ims_text(text: str, layout: ImsExperimentLayout, source: str = "<text>") -> np.ndarray:
    """Parse a sample matrix, reporting the first malformed row by its 1-based number."""
    rows = text.splitlines()
    while rows and not rows[-1].strip():
        rows.pop()
    n, k = layout.samples_per_file, layout.channel_count
    if len(rows) < n:
        raise ShortFileError(f"{source}: {len(rows)} rows, expected {n}")
    if len(rows) > n:
        raise IngestError(f"{source}: {len(rows)} rows, expected {n}")
    try:
        fast = np.array(text.split(), dtype=float)
    except ValueError:
        fast = None
    if fast is not None and fast.size == n * k and np.all(np.isfinite(fast)):
        return fast.reshape(n, k)
    # slow path locates the offending row
    out = np.empty((n, k))
    for i, line in enumerate(rows):
        tokens = line.split()
        if len(tokens) != k:
            raise ColumnCountError(f"{source}: row {i + 1} has {len(tokens)} columns, expected {k}")
        try:
            out[i] = [float(t) for t in tokens]
        except ValueError:
            bad = next(t for t in tokens if not _is_float(t))
            raise TokenError(f"{source}: row {i + 1} has non-numeric token {bad!r}") from None
        if not np.all(np.isfinite(out[i])):
            raise NonFiniteError(f"{source}: row {i + 1} contains a non-finite value")
    return out


def _is_float(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def read_ims_file(path, layout: ImsExperimentLayout) -> TrialRecord:
    path = Path(path)
    ts = parse_timestamp(path.name)
    if ts is None:
        raise IngestError(f"{path}: file name is not a dotted timestamp")
    channels = parse_ims_text(path.read_text(), layout, str(path))
    return TrialRecord(ts, channels, str(path))


def write_ims_file(path, channels: np.ndarray) -> None:
    """Write a sample matrix in the IMS text layout (tab separated, %.6g-safe repr)."""
    arr = np.asarray(channels, dtype=float)
    lines = ["\t".join(repr(float(v)) for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ExperimentScan:
    """Timestamp-ordered file list of one recording directory."""

    directory: str
    layout: ImsExperimentLayout
    entries: list = field(default_factory=list)  # (timestamp, path)
    skipped: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return self.count

    @property
    def time_span(self) -> Optional[tuple]:
        if not self.entries:
            return None
        return self.entries[0][0], self.entries[-1][0]

    def records(self, jobs: int = 1) -> Iterator[TrialRecord]:
        """Parsed records in timestamp order; ``jobs > 1`` parses ahead in threads."""
        paths = [p for _, p in self.entries]
        if jobs <= 1:
            for p in paths:
                yield read_ims_file(p, self.layout)
            return
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(read_ims_file, paths, [self.layout] * len(paths))

    def __iter__(self) -> Iterator[TrialRecord]:
        return self.records()

    def manifest(self) -> dict:
        span = self.time_span
        return {
            "directory": self.directory,
            "file_count": self.count,
            "skipped": list(self.skipped),
            "time_span": None if span is None else [format_timestamp(span[0]), format_timestamp(span[1])],
            "layout": self.layout.to_dict(),
        }


def scan_experiment(directory, layout: ImsExperimentLayout) -> ExperimentScan:
    """List snapshot files in timestamp order.

    Names that are not dotted timestamps are skipped with a warning.  The
    lexicographic order of names must agree with the parsed timestamps;
    any disagreement or repeated timestamp is an error.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    scan = ExperimentScan(str(directory), layout)
    for name in sorted(os.listdir(directory)):
        path = directory / name
        if not path.is_file():
            continue
        ts = parse_timestamp(name)
        if ts is None:
            log.warning("skipping %s: not a dotted timestamp", path)
            scan.skipped.append(name)
            continue
        if scan.entries and ts <= scan.entries[-1][0]:
            raise TimestampOrderError(f"{path}: timestamp {ts} does not follow {scan.entries[-1][0]}")
        scan.entries.append((ts, str(path)))
    if scan.skipped:
        log.warning("skipped %d file(s) in %s", len(scan.skipped), directory)
    return scan


def select_channel(records, layout: ImsExperimentLayout, bearing: int, accel_index: int = 0,
                   decimate: int = 1) -> MultiTrialDataset:
    """Single-channel dataset, optionally decimated by an integer factor (FIR anti-aliasing)."""
    column = layout.column(bearing, accel_index)
    if decimate < 1:
        raise ValueError("decimation factor must be at least 1")
    rows, stamps = [], []
    for rec in records:
        x = rec.channel(column)
        if decimate > 1:
            x = _decimate(x, decimate, ftype="fir", zero_phase=True)
        rows.append(np.asarray(x, dtype=float))
        stamps.append(format_timestamp(rec.timestamp))
    if not rows:
        raise IngestError("no records to select from")
    meta = {
        "layout": layout.name,
        "bearing": int(bearing),
        "accel_index": int(accel_index),
        "column": int(column),
        "decimation": int(decimate),
        "first_timestamp": stamps[0],
        "last_timestamp": stamps[-1],
    }
    return MultiTrialDataset(np.vstack(rows), layout.sampling_rate_hz / decimate, None, meta)


def channel_to_csv(dataset: MultiTrialDataset) -> str:
    """Per-channel export: one row per trial, one column per sample."""
    lines = [f"# schema={CHANNEL_SCHEMA} sampling_rate_hz={dataset.sampling_rate_hz!r} "
             + " ".join(f"{k}={v}" for k, v in sorted(dataset.meta.items()))]
    lines.append(",".join(["trial"] + [f"s{j}" for j in range(dataset.trial_length)]))
    for r, row in enumerate(dataset.data, start=1):
        lines.append(",".join([str(r)] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def channel_from_csv(text: str) -> MultiTrialDataset:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# schema={CHANNEL_SCHEMA}"):
        raise IngestError("missing channel CSV schema line")
    fields = dict(tok.split("=", 1) for tok in lines[0][2:].split() if "=" in tok)
    data = np.array([[float(v) for v in line.split(",")[1:]] for line in lines[2:] if line])
    return MultiTrialDataset(data, float(fields["sampling_rate_hz"]))


def manifest_json(scan: ExperimentScan, extra: Optional[dict] = None) -> str:
    d = scan.manifest()
    if extra:
        d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def write_synthetic_experiment(directory, layout: ImsExperimentLayout, timestamps: Sequence[_dt.datetime],
                               seed: int = 0, fault_from: Optional[int] = None) -> list:
    """Write Gaussian-noise snapshot files; from index ``fault_from`` on, a 3 kHz tone is added."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    t = np.arange(layout.samples_per_file) / layout.sampling_rate_hz
    paths = []
    for i, ts in enumerate(timestamps):
        rng = np.random.default_rng([seed, i])
        x = rng.normal(0.0, 0.1, size=(layout.samples_per_file, layout.channel_count))
        if fault_from is not None and i >= fault_from:
            x += 0.3 * np.sin(2 * np.pi * 3000.0 * t)[:, None]
        x = np.round(x, 3)
        path = directory / format_timestamp(ts)
        write_ims_file(path, x)
        paths.append(str(path))
    return paths
