"""Seeded AR(2) multi-trial simulators.

A stationary AR(2) with a spectral peak near ``f`` Hz is obtained by placing a
complex-conjugate pole pair at modulus ``rho`` and angle ``2*pi*f/fs``::

    X(t) = phi1 X(t-1) + phi2 X(t-2) + eps(t)
    phi1 = 2 rho cos(2 pi f / fs),  phi2 = -rho**2

Scenarios are assembled from segments of trials, each segment driven by one
generator family (fixed AR(2), mixtures, frequency paths, ...).  Every trial
draws from its own seed derived from ``(seed, trial_index)`` so trials can be
generated independently and in any order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .series import MultiTrialDataset, TrialSeries

BURN_IN = 500
DEFAULT_MODULUS = 0.95

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


def _check_frequency(freq_hz, fs):
    if not 0 < freq_hz < fs / 2:
        raise ValueError(f"peak frequency {freq_hz} Hz must lie in (0, {fs / 2}) Hz")


@dataclass(frozen=True)
class Ar2Spec:
    """Peak-parametrized AR(2) process."""

    peak_freq_hz: float
    sampling_rate_hz: float
    modulus: float = DEFAULT_MODULUS
    innovation_sd: float = 1.0

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        _check_frequency(self.peak_freq_hz, self.sampling_rate_hz)
        if not 0 < self.modulus < 1:
            raise ValueError(f"modulus {self.modulus} must lie strictly inside (0, 1)")
        if not self.innovation_sd >= 0:
            raise ValueError("innovation_sd must be non-negative")

    @classmethod
    def unit_variance(cls, peak_freq_hz, sampling_rate_hz, modulus=DEFAULT_MODULUS) -> "Ar2Spec":
        """Spec whose stationary variance is exactly one."""
        phi1, phi2 = _coefficients(peak_freq_hz, sampling_rate_hz, modulus)
        sd = 1.0 / math.sqrt(ar2_variance(phi1, phi2))
        return cls(peak_freq_hz, sampling_rate_hz, modulus, sd)

    def with_frequency(self, peak_freq_hz) -> "Ar2Spec":
        return Ar2Spec(peak_freq_hz, self.sampling_rate_hz, self.modulus, self.innovation_sd)


def _coefficients(freq_hz, fs, modulus):
    return 2.0 * modulus * math.cos(2.0 * math.pi * freq_hz / fs), -modulus * modulus


def ar2_coefficients(spec: Ar2Spec) -> tuple[float, float]:
    """Return ``(phi1, phi2)`` for the pole pair ``modulus * exp(±2πi f/fs)``."""
    return _coefficients(spec.peak_freq_hz, spec.sampling_rate_hz, spec.modulus)


def is_stationary(phi1, phi2) -> bool:
    """Triangle conditions for both AR(2) roots strictly inside the unit disk."""
    return abs(phi2) < 1 and phi2 + phi1 < 1 and phi2 - phi1 < 1


def ar2_variance(phi1, phi2, innovation_sd=1.0) -> float:
    """Stationary variance of an AR(2) process."""
    if not is_stationary(phi1, phi2):
        raise ValueError(f"non-stationary AR(2) coefficients ({phi1}, {phi2})")
    return innovation_sd**2 * (1 - phi2) / ((1 + phi2) * ((1 - phi2) ** 2 - phi1**2))


def ar2_spectrum(phi1, phi2, freqs_hz, sampling_rate_hz, innovation_sd=1.0) -> np.ndarray:
    """Closed-form spectral density on the periodogram's scale.

    ``innovation_sd**2 / |1 - phi1 e^{-2πiω} - phi2 e^{-4πiω}|**2`` with
    ``ω = f / fs``, so that ``E[I(ω_k)] ≈ S(ω_k)``.
    """
    w = 2j * np.pi * np.asarray(freqs_hz, dtype=float) / sampling_rate_hz
    transfer = 1 - phi1 * np.exp(-w) - phi2 * np.exp(-2 * w)
    return innovation_sd**2 / np.abs(transfer) ** 2


def _ar2_recursion(eps, phi1, phi2) -> np.ndarray:
    # Shared by the fixed and time-varying generators so a constant path
    # reproduces generate_ar2 bit for bit.
    out = [0.0] * len(eps)
    x1 = x2 = 0.0
    for n, (e, a, b) in enumerate(zip(eps, phi1, phi2)):
        x = a * x1 + b * x2 + e
        out[n] = x
        x2, x1 = x1, x
    return np.asarray(out)


def _innovations(seed, n, sd):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal(n) * sd).tolist()


def generate_ar2(spec: Ar2Spec, T: int, seed: SeedLike = 0, burn_in: int = BURN_IN) -> TrialSeries:
    """Simulate ``T`` samples of a stationary AR(2) after discarding ``burn_in``."""
    if T <= 0:
        raise ValueError("T must be positive")
    phi1, phi2 = ar2_coefficients(spec)
    n = burn_in + T
    eps = _innovations(seed, n, spec.innovation_sd)
    x = _ar2_recursion(eps, [phi1] * n, [phi2] * n)
    return TrialSeries(x[burn_in:], spec.sampling_rate_hz)


@dataclass(frozen=True)
class FreqPath:
    """Instantaneous peak frequency as a function of time within a trial.

    ``breakpoints`` are ``(time_s, freq_hz)`` pairs with strictly increasing
    times starting at 0.  The last frequency is held after the final
    breakpoint.  ``step`` holds each frequency until the next breakpoint.
    """

    breakpoints: tuple
    interpolation: str = "linear"

    def __post_init__(self):
        points = tuple((float(t), float(f)) for t, f in self.breakpoints)
        if not points:
            raise ValueError("empty frequency path")
        if self.interpolation not in ("step", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        times = [t for t, _ in points]
        if times[0] != 0:
            raise ValueError("frequency path must start at time 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        if any(f <= 0 for _, f in points):
            raise ValueError("path frequencies must be positive")
        object.__setattr__(self, "breakpoints", points)

    @classmethod
    def constant(cls, freq_hz) -> "FreqPath":
        return cls(((0.0, freq_hz),), "step")

    def __call__(self, times_s) -> np.ndarray:
        times = np.asarray(times_s, dtype=float)
        bt = np.array([t for t, _ in self.breakpoints])
        bf = np.array([f for _, f in self.breakpoints])
        if self.interpolation == "linear":
            return np.interp(times, bt, bf)
        idx = np.searchsorted(bt, times, side="right") - 1
        return bf[np.clip(idx, 0, len(bf) - 1)]


def generate_tvar2(
    path: FreqPath, template: Ar2Spec, T: int, seed: SeedLike = 0, burn_in: int = BURN_IN
) -> TrialSeries:
    """AR(2) whose coefficients follow ``path`` sample by sample.

    The modulus and innovation scale come from ``template``; the burn-in runs
    at the path's initial frequency.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    fs = template.sampling_rate_hz
    freqs = path(np.arange(T) / fs).tolist()
    for f in freqs:
        _check_frequency(f, fs)
    rho = template.modulus
    per_freq = {f: _coefficients(f, fs, rho) for f in set(freqs)}
    phi1 = [per_freq[freqs[0]][0]] * burn_in + [per_freq[f][0] for f in freqs]
    phi2 = [per_freq[freqs[0]][1]] * burn_in + [per_freq[f][1] for f in freqs]
    eps = _innovations(seed, burn_in + T, template.innovation_sd)
    x = _ar2_recursion(eps, phi1, phi2)
    return TrialSeries(x[burn_in:], fs)


def generate_mixture(
    components: Sequence[Ar2Spec], weights: Sequence[float], T: int, seed: SeedLike = 0
) -> TrialSeries:
    """Weighted sum of independent AR(2) trials rescaled to unit sample variance."""
    if len(components) != len(weights) or not components:
        raise ValueError("need one weight per mixture component")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(len(components))
    total = np.zeros(T)
    for spec, w, child in zip(components, weights, children):
        total += w * generate_ar2(spec, T, child).values
    sd = total.std()
    if sd > 0:
        total = total / sd
    return TrialSeries(total, components[0].sampling_rate_hz)


# --- segment generator families ------------------------------------------------
#
# Each family resolves, for trial k of n in its segment, to a concrete
# per-trial generator (Ar2Spec, PathAr2 or Mixture) and then realizes it.


@dataclass(frozen=True)
class PathAr2:
    path: FreqPath
    template: Ar2Spec

    def resolve(self, k, n, rng):
        return self


@dataclass(frozen=True)
class Mixture:
    components: tuple
    weights: tuple = ()

    def __post_init__(self):
        comps = tuple(self.components)
        weights = tuple(float(w) for w in self.weights) or (1.0,) * len(comps)
        if len(weights) != len(comps) or not comps:
            raise ValueError("mixture needs one weight per component")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)

    def resolve(self, k, n, rng):
        return self


@dataclass(frozen=True)
class Fixed:
    spec: Ar2Spec

    def resolve(self, k, n, rng):
        return self.spec


@dataclass(frozen=True)
class Drift:
    """Peak frequency moving linearly across the segment's trials."""

    start_hz: float
    end_hz: float
    modulus: float = DEFAULT_MODULUS

    def resolve(self, k, n, rng):
        f = self.start_hz + (self.end_hz - self.start_hz) * (k + 1) / n
        return _unit(f, rng.fs, self.modulus)


@dataclass(frozen=True)
class RandomPeak:
    """Peak frequency drawn uniformly per trial."""

    low_hz: float
    high_hz: float
    modulus: float = DEFAULT_MODULUS

    def resolve(self, k, n, rng):
        return _unit(rng.uniform(self.low_hz, self.high_hz), rng.fs, self.modulus)


@dataclass(frozen=True)
class RisingBump:
    """Within-trial excursion base -> peak -> base starting at a random onset.

    The rise and the fall each take half of ``duration_s``.
    """

    base_hz: float
    peak_hz: float
    onset_low_s: float
    onset_high_s: float
    duration_s: float
    modulus: float = DEFAULT_MODULUS

    def resolve(self, k, n, rng):
        onset = rng.uniform(self.onset_low_s, self.onset_high_s)
        half = self.duration_s / 2
        path = FreqPath(
            ((0.0, self.base_hz), (onset, self.base_hz), (onset + half, self.peak_hz), (onset + 2 * half, self.base_hz)),
            "linear",
        )
        return PathAr2(path, _unit(self.base_hz, rng.fs, self.modulus))


@dataclass(frozen=True)
class AlternatingSwitch:
    """Trials alternating between a fixed base frequency and abrupt switching.

    Even positions in the segment hold ``base_hz``; odd positions jump
    between ``base_hz`` and ``alt_hz`` ``n_switches`` times at equally spaced
    instants.
    """

    base_hz: float
    alt_hz: float
    n_switches: int = 3
    modulus: float = DEFAULT_MODULUS

    def resolve(self, k, n, rng):
        template = _unit(self.base_hz, rng.fs, self.modulus)
        if k % 2 == 0:
            return PathAr2(FreqPath.constant(self.base_hz), template)
        step = rng.duration_s / (self.n_switches + 1)
        points = [(0.0, self.base_hz)]
        for i in range(1, self.n_switches + 1):
            points.append((i * step, self.alt_hz if i % 2 else self.base_hz))
        return PathAr2(FreqPath(tuple(points), "step"), template)


def _unit(freq_hz, fs, modulus):
    return Ar2Spec.unit_variance(freq_hz, fs, modulus)


class _TrialRng:
    """numpy Generator plus the trial geometry families need to resolve."""

    def __init__(self, seed, fs, T):
        self._rng = np.random.default_rng(seed)
        self.fs = fs
        self.duration_s = T / fs

    def uniform(self, low, high):
        return float(self._rng.uniform(low, high))


def realize(generator, T: int, seed: SeedLike) -> TrialSeries:
    """Simulate one trial from a concrete per-trial generator."""
    if isinstance(generator, Ar2Spec):
        return generate_ar2(generator, T, seed)
    if isinstance(generator, PathAr2):
        return generate_tvar2(generator.path, generator.template, T, seed)
    if isinstance(generator, Mixture):
        return generate_mixture(generator.components, generator.weights, T, seed)
    raise TypeError(f"cannot realize {type(generator).__name__}")


@dataclass(frozen=True)
class Segment:
    first: int
    last: int
    generator: object


@dataclass(frozen=True)
class ScenarioSpec:
    """R trials of T samples built from consecutive segments (1-based, inclusive)."""

    trials: int
    trial_length: int
    sampling_rate_hz: float
    segments: tuple
    true_change_trial: Optional[int] = None
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        segments = tuple(
            s if isinstance(s, Segment) else Segment(*s) for s in self.segments
        )
        object.__setattr__(self, "segments", segments)
        if self.trials < 1 or self.trial_length < 1:
            raise ValueError("trials and trial_length must be positive")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        expected = 1
        for seg in segments:
            if seg.first != expected or seg.last < seg.first:
                raise ValueError(
                    f"segments must partition 1..{self.trials}; got {seg.first}..{seg.last} at trial {expected}"
                )
            expected = seg.last + 1
        if expected != self.trials + 1:
            raise ValueError(f"segments cover 1..{expected - 1}, expected 1..{self.trials}")
        if self.true_change_trial is not None:
            if self.true_change_trial not in {s.last for s in segments[:-1]}:
                raise ValueError(f"true_change_trial {self.true_change_trial} is not a segment boundary")

    def trial_generator(self, r: int):
        """Concrete generator for trial ``r`` (1-based) together with its seed."""
        for seg in self.segments:
            if seg.first <= r <= seg.last:
                break
        else:
            raise IndexError(f"trial {r} outside 1..{self.trials}")
        gen = seg.generator
        if isinstance(gen, Ar2Spec):
            gen = Fixed(gen)
        rng = _TrialRng([self.seed, r, 0], self.sampling_rate_hz, self.trial_length)
        concrete = gen.resolve(r - seg.first, seg.last - seg.first + 1, rng)
        return concrete, [self.seed, r, 1]

    def generate_trial(self, r: int) -> TrialSeries:
        concrete, seed = self.trial_generator(r)
        return realize(concrete, self.trial_length, seed)

    def generate(self) -> MultiTrialDataset:
        trials = [self.generate_trial(r) for r in range(1, self.trials + 1)]
        meta = {"scenario": self.name, "seed": self.seed}
        return MultiTrialDataset.from_trials(trials, self.true_change_trial, meta)

    def replace(self, **changes) -> "ScenarioSpec":
        from dataclasses import replace

        return replace(self, **changes)


def build_example(example_id: int, seed: int = 0, *, modulus=DEFAULT_MODULUS,
                  mixture_weights=(1.0, 1.0), n_switches: int = 3) -> ScenarioSpec:
    """Scenario configuration of simulation examples 1-4."""
    fs = 100.0

    def unit(f):
        return Ar2Spec.unit_variance(f, fs, modulus)

    mixture = Mixture((unit(10.0), unit(40.0)), tuple(mixture_weights))
    if example_id == 1:
        return ScenarioSpec(200, 200, fs, ((1, 100, unit(10.0)), (101, 200, unit(40.0))), 100, seed, "example1")
    if example_id == 2:
        return ScenarioSpec(200, 200, fs, ((1, 100, unit(10.0)), (101, 200, mixture)), 100, seed, "example2")
    if example_id == 3:
        segments = (
            (1, 100, unit(40.0)),
            (101, 200, Drift(40.0, 10.0, modulus)),
            (201, 300, RandomPeak(5.0, 15.0, modulus)),
            (301, 400, mixture),
        )
        return ScenarioSpec(400, 500, fs, segments, 300, seed, "example3")
    if example_id == 4:
        segments = (
            (1, 100, RisingBump(15.0, 35.0, 2.0, 9.0, 6.0, modulus)),
            (101, 200, AlternatingSwitch(15.0, 35.0, n_switches, modulus)),
        )
        return ScenarioSpec(200, 1500, fs, segments, 100, seed, "example4")
    raise ValueError(f"unknown example id {example_id!r}; expected 1, 2, 3 or 4")


# --- plain-text scenario files ---------------------------------------------------
#
#   trials = 200
#   trial_length = 200
#   sampling_rate_hz = 100
#   true_change_trial = 100
#   seed = 7
#
#   [segments]
#   1 100 ar2 peak_hz=10 modulus=0.95 innovation_sd=0.254
#   101 200 mixture peak_hz=10,40 modulus=0.95,0.95 innovation_sd=0.25,0.25 weights=1,1

_SCALARS = ("trials", "trial_length", "sampling_rate_hz", "true_change_trial", "seed", "name")


def _fmt(x) -> str:
    return repr(float(x)) if not isinstance(x, str) else x


def _segment_line(seg: Segment) -> str:
    g = seg.generator
    if isinstance(g, Fixed):
        g = g.spec
    if isinstance(g, Ar2Spec):
        kind, params = "ar2", {"peak_hz": g.peak_freq_hz, "modulus": g.modulus, "innovation_sd": g.innovation_sd}
    elif isinstance(g, Mixture):
        kind = "mixture"
        params = {
            "peak_hz": ",".join(_fmt(c.peak_freq_hz) for c in g.components),
            "modulus": ",".join(_fmt(c.modulus) for c in g.components),
            "innovation_sd": ",".join(_fmt(c.innovation_sd) for c in g.components),
            "weights": ",".join(_fmt(w) for w in g.weights),
        }
    elif isinstance(g, PathAr2):
        kind = "path"
        params = {
            "path": ",".join(f"{_fmt(t)}:{_fmt(f)}" for t, f in g.path.breakpoints),
            "interpolation": g.path.interpolation,
            "modulus": g.template.modulus,
            "innovation_sd": g.template.innovation_sd,
        }
    elif isinstance(g, Drift):
        kind, params = "drift", {"start_hz": g.start_hz, "end_hz": g.end_hz, "modulus": g.modulus}
    elif isinstance(g, RandomPeak):
        kind, params = "random_peak", {"low_hz": g.low_hz, "high_hz": g.high_hz, "modulus": g.modulus}
    elif isinstance(g, RisingBump):
        kind = "rising_bump"
        params = {
            "base_hz": g.base_hz, "peak_hz": g.peak_hz, "onset_low_s": g.onset_low_s,
            "onset_high_s": g.onset_high_s, "duration_s": g.duration_s, "modulus": g.modulus,
        }
    elif isinstance(g, AlternatingSwitch):
        kind = "alternating_switch"
        params = {"base_hz": g.base_hz, "alt_hz": g.alt_hz, "n_switches": str(g.n_switches), "modulus": g.modulus}
    else:
        raise TypeError(f"cannot serialize generator {type(g).__name__}")
    body = " ".join(f"{k}={_fmt(v)}" for k, v in params.items())
    return f"{seg.first} {seg.last} {kind} {body}"


def dumps_scenario(spec: ScenarioSpec) -> str:
    lines = ["# regimetda scenario v1"]
    for key in _SCALARS:
        value = getattr(spec, key)
        if value is None:
            continue
        if key == "sampling_rate_hz":
            value = repr(float(value))
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append("[segments]")
    lines.extend(_segment_line(s) for s in spec.segments)
    return "\n".join(lines) + "\n"


def _floats(text):
    return [float(v) for v in text.split(",")]


def _parse_segment(line: str, fs: float) -> Segment:
    tokens = line.split()
    if len(tokens) < 3:
        raise ValueError(f"malformed segment line: {line!r}")
    first, last, kind = int(tokens[0]), int(tokens[1]), tokens[2]
    p = {}
    for tok in tokens[3:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {tok!r}")
        p[key] = value
    mod = float(p.get("modulus", DEFAULT_MODULUS)) if kind != "mixture" else None
    try:
        if kind == "ar2":
            f = float(p["peak_hz"])
            if "innovation_sd" in p:
                gen = Ar2Spec(f, fs, mod, float(p["innovation_sd"]))
            else:
                gen = Ar2Spec.unit_variance(f, fs, mod)
        elif kind == "mixture":
            freqs = _floats(p["peak_hz"])
            mods = _floats(p["modulus"]) if "modulus" in p else [DEFAULT_MODULUS] * len(freqs)
            if "innovation_sd" in p:
                comps = tuple(Ar2Spec(f, fs, m, s) for f, m, s in zip(freqs, mods, _floats(p["innovation_sd"])))
            else:
                comps = tuple(Ar2Spec.unit_variance(f, fs, m) for f, m in zip(freqs, mods))
            gen = Mixture(comps, tuple(_floats(p["weights"])) if "weights" in p else ())
        elif kind == "path":
            points = tuple(tuple(float(v) for v in pair.split(":")) for pair in p["path"].split(","))
            path = FreqPath(points, p.get("interpolation", "linear"))
            if "innovation_sd" in p:
                template = Ar2Spec(points[0][1], fs, mod, float(p["innovation_sd"]))
            else:
                template = Ar2Spec.unit_variance(points[0][1], fs, mod)
            gen = PathAr2(path, template)
        elif kind == "drift":
            gen = Drift(float(p["start_hz"]), float(p["end_hz"]), mod)
        elif kind == "random_peak":
            gen = RandomPeak(float(p["low_hz"]), float(p["high_hz"]), mod)
        elif kind == "rising_bump":
            gen = RisingBump(float(p["base_hz"]), float(p["peak_hz"]), float(p["onset_low_s"]),
                             float(p["onset_high_s"]), float(p["duration_s"]), mod)
        elif kind == "alternating_switch":
            gen = AlternatingSwitch(float(p["base_hz"]), float(p["alt_hz"]), int(p.get("n_switches", 3)), mod)
        else:
            raise ValueError(f"unknown segment kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"segment {first}..{last} ({kind}) missing parameter {exc.args[0]!r}") from None
    return Segment(first, last, gen)


def loads_scenario(text: str) -> ScenarioSpec:
    scalars: dict = {}
    segment_lines = []
    in_segments = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[segments]":
            in_segments = True
            continue
        if in_segments:
            segment_lines.append(line)
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in _SCALARS:
            raise ValueError(f"unrecognized scenario line: {raw!r}")
        scalars[key] = value.strip()
    for key in ("trials", "trial_length", "sampling_rate_hz"):
        if key not in scalars:
            raise ValueError(f"scenario file missing {key!r}")
    fs = float(scalars["sampling_rate_hz"])
    segments = tuple(_parse_segment(line, fs) for line in segment_lines)
    change = scalars.get("true_change_trial")
    return ScenarioSpec(
        int(scalars["trials"]),
        int(scalars["trial_length"]),
        fs,
        segments,
        int(change) if change not in (None, "None") else None,
        int(scalars.get("seed", 0)),
        scalars.get("name", "custom"),
    )


def load_scenario(path) -> ScenarioSpec:
    with open(path) as fh:
        return loads_scenario(fh.read())


# --- dataset CSV -----------------------------------------------------------------

DATASET_SCHEMA = "regimetda-dataset/1"


def dataset_to_csv(dataset: MultiTrialDataset) -> str:
    """One column per trial, one row per sample; floats written losslessly."""
    buf = io.StringIO()
    gt = "" if dataset.ground_truth is None else dataset.ground_truth
    buf.write(f"# schema={DATASET_SCHEMA} sampling_rate_hz={dataset.sampling_rate_hz!r} ground_truth={gt}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"trial_{r}" for r in range(1, dataset.n_trials + 1)])
    for row in dataset.data.T:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def dataset_from_csv(text: str) -> MultiTrialDataset:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("dataset CSV lacks its schema comment line")
    fields = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    if fields.get("schema") != DATASET_SCHEMA:
        raise ValueError(f"unsupported dataset schema {fields.get('schema')!r}")
    fs = float(fields["sampling_rate_hz"])
    gt = fields.get("ground_truth") or None
    rows = list(csv.reader(lines[2:]))
    data = np.array([[float(v) for v in row] for row in rows], dtype=float).T
    return MultiTrialDataset(data, fs, int(gt) if gt else None)
