"""Command-line front end.

Exit codes: 0 ok, 2 usage or configuration error, 3 I/O error, 4 alarm
raised while ``--fail-on-alarm`` is set.  Settings are resolved as command
line flags over ``--config`` file over built-in defaults, and the resolved
snapshot is written to ``manifest.json`` next to every output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .detect import ConfigError, DetectorConfig, run_pipeline
from .ingest import IngestError, ImsExperimentLayout, channel_to_csv, scan_experiment, select_channel
from .metrics import MetricKind
from .simgen import (
    build_example,
    dataset_from_csv,
    dataset_to_csv,
    dumps_scenario,
    load_scenario,
    loads_scenario,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_ALARM = 0, 2, 3, 4
JOBS_ENV = "REGIMETDA_JOBS"

log = logging.getLogger("regimetda")


class UsageError(Exception):
    pass


# --- manifest and atomic output ----------------------------------------------------------


def sha256_bytes(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path, data) -> str:
    """Write via a temporary file in the same directory and rename; returns the sha256."""
    path = Path(path)
    blob = data.encode() if isinstance(data, str) else bytes(data)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256_bytes(blob)


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.versions:
            self.versions = {
                "regimetda": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            }

    def emit(self, out_dir: Path, name: str, data) -> None:
        self.outputs[name] = atomic_write(out_dir / name, data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: Path) -> None:
        atomic_write(out_dir / "manifest.json", self.to_json())


def _prepare_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise UsageError(f"{JOBS_ENV}={raw!r} is not an integer") from None
    return max(1, jobs)


# --- detector settings -------------------------------------------------------------------

# flag name -> DetectorConfig field
_DETECT_FLAGS = {
    "scenario": "scenario",
    "burn_in": "burn_in",
    "kappa": "kappa",
    "h": "h",
    "half_bandwidth": "half_bandwidth",
    "half_window": "half_window",
    "hop": "hop",
    "spectrogram_smoothing": "spectrogram_smoothing",
    "diagram_source": "diagram_source",
    "ph_method": "ph_method",
}


def _load_config_file(path) -> dict:
    """Detector settings from JSON; a previous run manifest is accepted too."""
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if isinstance(d, dict) and "command" in d and isinstance(d.get("config"), dict):
        d = d["config"].get("detector", d["config"])
    if not isinstance(d, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return d


def resolve_detector(args) -> tuple[DetectorConfig, list]:
    settings = {}
    if args.config:
        settings.update(_load_config_file(args.config))
    metrics = settings.pop("metrics", None)
    for flag, key in _DETECT_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = value
    if args.h is not None:
        settings["threshold_policy"] = "absolute"
    if args.standardize:
        settings["standardize"] = True
    if args.log_transform:
        settings["log_transform"] = True
    if args.filter_fraction is not None:
        settings["filter_fraction"] = args.filter_fraction
    if args.metrics is not None:
        metrics = args.metrics
    if isinstance(metrics, str):
        metrics = [m for m in metrics.split(",") if m.strip()]
    metrics = metrics or ["L1_fn"]
    frac = settings.get("filter_fraction", 0.01)
    try:
        parsed = [MetricKind.parse(m, frac) for m in metrics]
        settings["metric"] = parsed[0].name
        cfg = DetectorConfig.from_dict(settings)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    return cfg, parsed


def _int_pair(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two integers as A,B")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected two integers as A,B") from None


def _add_detector_flags(p: argparse.ArgumentParser, scenario_required: bool = False) -> None:
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=scenario_required,
                   help="1: running average vs next, 2: trial vs next, 3: spectrogram vs next")
    p.add_argument("--metrics", help="comma list of L1_fn, L2_fn, W1_fn, W2_diagram:H0, W2_diagram:H1")
    p.add_argument("--kappa", type=float, help="threshold multiple of the burn-in spread")
    p.add_argument("--h", type=float, help="absolute CUSUM threshold (overrides --kappa)")
    p.add_argument("--burn-in", type=int, help="boundaries used to estimate the in-control mean")
    p.add_argument("--standardize", action="store_true", help="standardize D before the CUSUM")
    p.add_argument("--half-bandwidth", type=int, help="periodogram smoothing half-width m")
    p.add_argument("--half-window", type=int, help="spectrogram half window L")
    p.add_argument("--hop", type=int, help="spectrogram hop in samples")
    p.add_argument("--spectrogram-smoothing", type=_int_pair, metavar="A,B",
                   help="moving-average half-widths over time frames and frequency bins")
    p.add_argument("--diagram-source", choices=("smoothed", "raw"))
    p.add_argument("--log-transform", action="store_true", help="log10 values before persistence")
    p.add_argument("--filter-fraction", type=float, help="diagram persistence filter as fraction of range")
    p.add_argument("--ph-method", choices=("union_find", "reduction"))
    p.add_argument("--config", help="JSON detector settings or a previous manifest.json")
    p.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
    p.add_argument("--streaming", action="store_true", help="feed trials one at a time")
    p.add_argument("--fail-on-alarm", action="store_true", help="exit 4 if any metric alarms")
    p.add_argument("--out", required=True, help="output directory")


def _run_detector(data, args, manifest: RunManifest, out: Path) -> int:
    cfg, metrics = resolve_detector(args)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    return _detect_and_write(data, cfg, metrics, jobs, args.streaming, args.fail_on_alarm, manifest, out)


def _detect_and_write(data, cfg, metrics, jobs, streaming, fail_on_alarm, manifest, out) -> int:
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    try:
        report = run_pipeline(data, cfg, metrics, jobs=jobs, streaming=streaming)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    detector = report.config.to_dict()
    detector["metrics"] = report.metric_names
    manifest.config["detector"] = detector
    manifest.config["jobs"] = jobs
    manifest.config["streaming"] = bool(streaming)
    manifest.config["fail_on_alarm"] = bool(fail_on_alarm)
    manifest.emit(out, "report.json", report.to_json())
    manifest.emit(out, "boundaries.csv", report.to_csv())
    manifest.write(out)
    for name in report.metric_names:
        res = report.cusum[name]
        print(f"{name}: first_alarm={res.first_alarm} alarms={len(res.alarms)} h={res.h:.6g}")
    if fail_on_alarm and report.any_alarm:
        return EXIT_ALARM
    return EXIT_OK


# --- commands --------------------------------------------------------------------------------


def _scenario_from_args(args):
    if (args.example is None) == (args.scenario_file is None):
        raise UsageError("give exactly one of --example or --scenario-file")
    if args.example is not None:
        try:
            return build_example(args.example, args.seed if args.seed is not None else 0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        spec = load_scenario(args.scenario_file)
    except OSError:
        raise
    except ValueError as exc:
        raise UsageError(f"{args.scenario_file}: {exc}") from None
    return spec.replace(seed=args.seed) if args.seed is not None else spec


def cmd_simulate(args) -> int:
    spec = _scenario_from_args(args)
    out = _prepare_out(args.out)
    manifest = RunManifest("simulate", {"scenario": dumps_scenario(spec)}, {"seed": spec.seed})
    if args.scenario_file:
        manifest.inputs[str(args.scenario_file)] = sha256_file(args.scenario_file)
    manifest.emit(out, "scenario.txt", dumps_scenario(spec))
    manifest.emit(out, "dataset.csv", dataset_to_csv(spec.generate()))
    manifest.write(out)
    print(f"wrote {spec.trials} trials x {spec.trial_length} samples to {out / 'dataset.csv'}")
    return EXIT_OK


def cmd_detect(args) -> int:
    if args.dataset is not None and (args.example is not None or args.scenario_file is not None):
        raise UsageError("give either --dataset or a scenario source, not both")
    manifest = RunManifest("detect", {})
    if args.dataset is not None:
        text = Path(args.dataset).read_text()
        try:
            data = dataset_from_csv(text)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{args.dataset}: {exc}") from None
        manifest.inputs[str(args.dataset)] = sha256_bytes(text.encode())
    else:
        spec = _scenario_from_args(args)
        data = spec.generate()
        manifest.config["scenario"] = dumps_scenario(spec)
        manifest.seeds["seed"] = spec.seed
    return _run_detector(data, args, manifest, _prepare_out(args.out))


def cmd_bearings(args) -> int:
    layout = ImsExperimentLayout.experiment(args.experiment)
    if not Path(args.directory).is_dir():
        raise FileNotFoundError(f"no such directory: {args.directory}")
    if args.decimate < 1:
        raise UsageError("--decimate must be at least 1")
    try:
        layout.column(args.bearing, args.accel)
    except IngestError as exc:
        raise UsageError(str(exc)) from None
    jobs = args.jobs if args.jobs is not None else default_jobs()
    scan, data = _bearing_dataset(args.directory, layout, args.bearing, args.accel, args.decimate, jobs)
    out = _prepare_out(args.out)
    manifest = RunManifest("bearings", {
        "ingest": scan.manifest(),
        "bearing": args.bearing,
        "accel_index": args.accel,
        "decimation": args.decimate,
    })
    if args.export_channel:
        manifest.emit(out, "channel.csv", channel_to_csv(data))
    return _run_detector(data, args, manifest, out)


def _bearing_dataset(directory, layout, bearing, accel, decimate, jobs):
    scan = scan_experiment(directory, layout)
    if scan.count < 3:
        raise UsageError(f"{directory}: {scan.count} snapshot file(s); need at least 3")
    return scan, select_channel(scan.records(jobs), layout, bearing, accel, decimate)


def cmd_replay(args) -> int:
    """Re-run a previous command from its manifest alone."""
    try:
        old = json.loads(Path(args.manifest).read_text())
        command, config = old["command"], dict(old["config"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"{args.manifest} is not a run manifest: {exc}") from None
    out = _prepare_out(args.out)
    manifest = RunManifest(command, {}, dict(old.get("seeds", {})), inputs=dict(old.get("inputs", {})))
    if command == "simulate":
        spec = loads_scenario(config["scenario"])
        manifest.config["scenario"] = config["scenario"]
        manifest.emit(out, "scenario.txt", dumps_scenario(spec))
        manifest.emit(out, "dataset.csv", dataset_to_csv(spec.generate()))
        manifest.write(out)
        return EXIT_OK
    if command == "detect":
        if "scenario" in config:
            manifest.config["scenario"] = config["scenario"]
            data = loads_scenario(config["scenario"]).generate()
        else:
            (path, digest), = manifest.inputs.items()
            text = Path(path).read_text()
            if sha256_bytes(text.encode()) != digest:
                raise UsageError(f"{path} changed since the recorded run")
            data = dataset_from_csv(text)
    elif command == "bearings":
        ingest = config["ingest"]
        layout = ImsExperimentLayout.from_dict(ingest["layout"])
        _, data = _bearing_dataset(ingest["directory"], layout, config["bearing"], config["accel_index"],
                                   config["decimation"], config.get("jobs", 1))
        for key in ("ingest", "bearing", "accel_index", "decimation"):
            manifest.config[key] = config[key]
    else:
        raise UsageError(f"cannot replay command {command!r}")
    detector = dict(config["detector"])
    names = detector.pop("metrics")
    frac = detector.get("filter_fraction", 0.01)
    try:
        cfg = DetectorConfig.from_dict(detector)
        metrics = [MetricKind.parse(m, frac) for m in names]
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    return _detect_and_write(data, cfg, metrics, config.get("jobs", 1), config.get("streaming", False),
                             config.get("fail_on_alarm", False), manifest, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regimetda", description="Spectral and topological regime-change detection")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a multi-trial dataset")
    p.add_argument("--example", type=int, help="built-in example 1-4")
    p.add_argument("--scenario-file", help="plain-text scenario description")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="run the detector on a dataset or a generated example")
    p.add_argument("--dataset", help="dataset CSV written by simulate")
    p.add_argument("--example", type=int)
    p.add_argument("--scenario-file")
    p.add_argument("--seed", type=int)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bearings", help="analyze one channel of an IMS recording directory")
    p.add_argument("directory")
    p.add_argument("--experiment", type=int, choices=(1, 2), required=True)
    p.add_argument("--bearing", type=int, required=True)
    p.add_argument("--accel", type=int, default=0, help="accelerometer index within the bearing")
    p.add_argument("--decimate", type=int, default=1)
    p.add_argument("--export-channel", action="store_true", help="also write the selected channel as CSV")
    _add_detector_flags(p)
    p.set_defaults(func=cmd_bearings)

    p = sub.add_parser("replay", help="re-run a previous command from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"regimetda {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IngestError as exc:
        print(f"regimetda {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"regimetda {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
