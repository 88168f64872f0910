"""Periodograms, smoothed periodograms, running averages and spectrograms.

Spectra live on the one-sided grid ``k * fs / T`` for ``k = 0..T//2``; the
two-sided periodogram of a real signal is recovered by Hermitian symmetry
whenever an operation (smoothing, Parseval) needs it.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import get_window

from .series import TrialSeries

SPG_MAGIC = b"SPG1"


@dataclass(frozen=True)
class Spectrum:
    freqs_hz: np.ndarray
    power: np.ndarray
    n_samples: int
    sampling_rate_hz: float
    half_bandwidth: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "freqs_hz", np.asarray(self.freqs_hz, dtype=float))
        object.__setattr__(self, "power", np.asarray(self.power, dtype=float))
        if self.power.shape != self.freqs_hz.shape:
            raise ValueError("power and frequency grid differ in length")
        if self.power.shape[0] != self.n_samples // 2 + 1:
            raise ValueError(f"one-sided grid for T={self.n_samples} must have {self.n_samples // 2 + 1} bins")

    @property
    def df(self) -> float:
        return self.sampling_rate_hz / self.n_samples

    def two_sided(self) -> np.ndarray:
        """Periodogram values on ``k = 0..T-1``."""
        return _two_sided(self.power, self.n_samples)

    def same_grid(self, other: "Spectrum") -> bool:
        return (
            isinstance(other, Spectrum)
            and self.n_samples == other.n_samples
            and self.sampling_rate_hz == other.sampling_rate_hz
        )

    def with_power(self, power, **changes) -> "Spectrum":
        kwargs = dict(
            freqs_hz=self.freqs_hz, power=power, n_samples=self.n_samples,
            sampling_rate_hz=self.sampling_rate_hz, half_bandwidth=self.half_bandwidth,
            meta=dict(self.meta),
        )
        kwargs.update(changes)
        return Spectrum(**kwargs)


@dataclass(frozen=True)
class Spectrogram:
    times_s: np.ndarray
    freqs_hz: np.ndarray
    power: np.ndarray
    half_window: int
    hop: int
    sampling_rate_hz: float
    weight: str = "hann"
    smoothing: tuple = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "times_s", np.asarray(self.times_s, dtype=float))
        object.__setattr__(self, "freqs_hz", np.asarray(self.freqs_hz, dtype=float))
        object.__setattr__(self, "power", np.asarray(self.power, dtype=float))
        if self.power.shape != (self.times_s.shape[0], self.freqs_hz.shape[0]):
            raise ValueError("power must be (n_times, n_freqs)")

    @property
    def window_length(self) -> int:
        return 2 * self.half_window + 1

    @property
    def dt(self) -> float:
        return self.hop / self.sampling_rate_hz

    @property
    def df(self) -> float:
        return self.sampling_rate_hz / self.window_length

    def same_grid(self, other: "Spectrogram") -> bool:
        return (
            isinstance(other, Spectrogram)
            and self.power.shape == other.power.shape
            and self.half_window == other.half_window
            and self.hop == other.hop
            and self.sampling_rate_hz == other.sampling_rate_hz
        )


def _two_sided(onesided: np.ndarray, n: int) -> np.ndarray:
    m = onesided.shape[-1]
    return np.concatenate([onesided, onesided[..., 1 : n - m + 1][..., ::-1]], axis=-1)


def _values(trial) -> tuple[np.ndarray, float]:
    if isinstance(trial, TrialSeries):
        return trial.values, trial.sampling_rate_hz
    raise TypeError(f"expected TrialSeries, got {type(trial).__name__}")


def periodogram(trial: TrialSeries) -> Spectrum:
    """``I(ω_k) = |T**-0.5 Σ_t X(t) exp(-2πi ω_k t)|**2`` on the one-sided grid."""
    x, fs = _values(trial)
    T = x.shape[0]
    if T < 8:
        raise ValueError(f"periodogram needs at least 8 samples, got {T}")
    if not np.all(np.isfinite(x)):
        raise ValueError("trial contains non-finite samples")
    coeffs = np.fft.rfft(x) / math.sqrt(T)
    power = coeffs.real**2 + coeffs.imag**2
    return Spectrum(np.fft.rfftfreq(T, 1.0 / fs), power, T, fs)


def default_half_bandwidth(n_samples: int) -> int:
    return math.ceil(math.sqrt(n_samples) / 2)


def _circular_average(two_sided: np.ndarray, m: int) -> np.ndarray:
    if m == 0:
        return two_sided.copy()
    total = two_sided.copy()
    for shift in range(1, m + 1):
        total += np.roll(two_sided, shift, axis=-1) + np.roll(two_sided, -shift, axis=-1)
    return total / (2 * m + 1)


def smooth(spectrum: Spectrum, half_bandwidth: int) -> Spectrum:
    """Moving average over ``2m+1`` bins of the two-sided periodogram (circular)."""
    m = int(half_bandwidth)
    if not 0 <= m < spectrum.power.shape[0]:
        raise ValueError(f"half bandwidth {m} outside 0..{spectrum.power.shape[0] - 1}")
    if m == 0:
        return spectrum
    full = _circular_average(spectrum.two_sided(), m)
    return spectrum.with_power(full[: spectrum.power.shape[0]], half_bandwidth=m)


def hann_weights(window_length: int) -> np.ndarray:
    """Symmetric Hann taper rescaled so that the squared weights sum to one."""
    w = get_window("hann", window_length + 2, fftbins=False)[1:-1]
    return w / np.sqrt(np.sum(w**2))


def spectrogram(trial: TrialSeries, half_window: int, hop: int, smoothing=(0, 0)) -> Spectrogram:
    """Tapered short-time periodogram at window centers ``L, L+hop, ..., T-1-L``.

    ``smoothing=(a, b)`` applies an optional separable moving average over
    ``2a+1`` time frames and ``2b+1`` frequency bins.
    """
    x, fs = _values(trial)
    T = x.shape[0]
    L = int(half_window)
    n = 2 * L + 1
    if L < 1 or n > T:
        raise ValueError(f"window of width {n} does not fit a trial of {T} samples")
    if hop < 1:
        raise ValueError("hop must be at least 1")
    if not np.all(np.isfinite(x)):
        raise ValueError("trial contains non-finite samples")
    frames = np.lib.stride_tricks.sliding_window_view(x, n)[::hop]
    coeffs = np.fft.rfft(frames * hann_weights(n), axis=1)
    power = coeffs.real**2 + coeffs.imag**2
    a, b = (int(v) for v in smoothing)
    if a:
        power = uniform_filter1d(power, 2 * a + 1, axis=0, mode="nearest")
    if b:
        power = _circular_average(_two_sided(power, n), b)[:, : power.shape[1]]
    power = np.maximum(power, 0.0)
    centers = L + hop * np.arange(frames.shape[0])
    return Spectrogram(centers / fs, np.fft.rfftfreq(n, 1.0 / fs), power, L, int(hop), fs, "hann", (a, b))


def default_half_window(sampling_rate_hz: float) -> int:
    """Half window giving a window of about one second."""
    return max(1, int(round(sampling_rate_hz)) // 2)


@dataclass(frozen=True)
class SpectralStack:
    """Running mean of spectra sharing one grid."""

    mean: np.ndarray
    count: int
    template: Spectrum


def stack_update(stack: Optional[SpectralStack], spectrum: Spectrum) -> SpectralStack:
    if stack is None:
        return SpectralStack(spectrum.power.copy(), 1, spectrum)
    if not stack.template.same_grid(spectrum):
        raise ValueError("spectrum grid does not match the stack")
    count = stack.count + 1
    # incremental form: identical inputs leave the mean bit-exact
    return SpectralStack(stack.mean + (spectrum.power - stack.mean) / count, count, stack.template)


def stack_mean(stack: SpectralStack) -> Spectrum:
    return stack.template.with_power(stack.mean.copy(), meta={"averaged": stack.count})


# --- export ----------------------------------------------------------------------


def spectrum_to_csv(spectrum: Spectrum) -> str:
    buf = io.StringIO()
    buf.write(f"# schema=regimetda-spectrum/1 n_samples={spectrum.n_samples} "
              f"sampling_rate_hz={spectrum.sampling_rate_hz!r} half_bandwidth={spectrum.half_bandwidth}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "power"])
    for f, p in zip(spectrum.freqs_hz, spectrum.power):
        w.writerow([repr(float(f)), repr(float(p))])
    return buf.getvalue()


def spectrogram_to_csv(spec: Spectrogram) -> str:
    """Long format: one row per (time, frequency) cell."""
    buf = io.StringIO()
    buf.write(f"# schema=regimetda-spectrogram/1 half_window={spec.half_window} hop={spec.hop} "
              f"sampling_rate_hz={spec.sampling_rate_hz!r} weight={spec.weight}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "freq_hz", "power"])
    for t, row in zip(spec.times_s, spec.power):
        for f, p in zip(spec.freqs_hz, row):
            w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])
    return buf.getvalue()


def dumps_spg1(obj) -> bytes:
    """Binary golden dump.

    Layout (little-endian): ``b"SPG1"``, u64 n_times, u64 n_freqs, then
    n_times time stamps, n_freqs frequencies and the row-major power matrix,
    all float64.  A spectrum is stored with ``n_times = 0`` and a single row
    of power.
    """
    if isinstance(obj, Spectrum):
        times = np.zeros(0)
        power = obj.power[None, :]
    elif isinstance(obj, Spectrogram):
        times = obj.times_s
        power = obj.power
    else:
        raise TypeError(f"cannot dump {type(obj).__name__}")
    header = SPG_MAGIC + struct.pack("<QQ", times.shape[0], obj.freqs_hz.shape[0])
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (times, obj.freqs_hz, power))
    return header + body


def loads_spg1(blob: bytes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(times, freqs, power)``; ``power`` is 1-D for a spectrum."""
    if blob[:4] != SPG_MAGIC:
        raise ValueError("not an SPG1 dump")
    n_times, n_freqs = struct.unpack("<QQ", blob[4:20])
    rows = max(n_times, 1)
    expected = 20 + 8 * (n_times + n_freqs + rows * n_freqs)
    if len(blob) != expected:
        raise ValueError(f"SPG1 dump has {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=20)
    times = data[:n_times]
    freqs = data[n_times : n_times + n_freqs]
    power = data[n_times + n_freqs :].reshape(rows, n_freqs)
    return times.copy(), freqs.copy(), (power[0] if n_times == 0 else power).copy()
