import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import circular_moving_average, direct_dft_periodogram
from regimetda.series import TrialSeries
from regimetda.simgen import Ar2Spec, ar2_coefficients, ar2_spectrum, generate_ar2
from regimetda.spectral import (
    Spectrum,
    default_half_bandwidth,
    dumps_spg1,
    hann_weights,
    loads_spg1,
    periodogram,
    smooth,
    spectrogram,
    spectrogram_to_csv,
    spectrum_to_csv,
    stack_mean,
    stack_update,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def series(x, fs=100.0):
    return TrialSeries(np.asarray(x, dtype=float), fs)


def test_zero_series():
    assert np.all(periodogram(series(np.zeros(32))).power == 0)


def test_constant_series_is_dc_only():
    p = periodogram(series(np.full(64, 1.5)))
    assert p.power[0] == pytest.approx(64 * 1.5**2)
    assert np.allclose(p.power[1:], 0, atol=1e-20)


def test_pure_cosine_against_direct_sum():
    T = 64
    x = np.cos(2 * np.pi * 8 * np.arange(T) / T)
    two = periodogram(series(x)).two_sided()
    oracle = direct_dft_periodogram(x)
    assert np.allclose(two, oracle, rtol=0, atol=1e-9)
    expected = np.zeros(T)
    expected[[8, 56]] = T / 4
    assert np.allclose(two, expected, atol=1e-9)


@pytest.mark.parametrize("T", [8, 9, 31, 64])
def test_random_series_against_direct_sum(T):
    x = np.random.default_rng(T).normal(size=T)
    assert np.allclose(periodogram(series(x)).two_sided(), direct_dft_periodogram(x), atol=1e-9)


def test_grid_and_validation():
    p = periodogram(series(np.ones(200)))
    assert p.freqs_hz.shape == (101,) and p.freqs_hz[-1] == 50.0 and p.df == 0.5
    with pytest.raises(ValueError):
        periodogram(series(np.ones(7)))
    with pytest.raises(ValueError):
        periodogram(series([1.0] * 7 + [np.nan]))


@given(st.sampled_from([8, 9, 64, 65]), st.integers(0, 2**32 - 1))
def test_parseval(T, seed):
    x = np.random.default_rng(seed).normal(size=T)
    p = periodogram(series(x))
    assert np.all(p.power >= 0)
    assert p.two_sided().sum() == pytest.approx(np.sum(x * x), rel=1e-9)


@given(arrays(float, st.integers(8, 80), elements=finite))
def test_time_reversal(x):
    a = periodogram(series(x)).power
    b = periodogram(series(x[::-1])).power
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9 * (1 + np.max(np.abs(x)) ** 2 * len(x)))


def test_smooth_identity_and_constant():
    p = periodogram(series(np.random.default_rng(0).normal(size=40)))
    assert smooth(p, 0) is p
    const = p.with_power(np.full_like(p.power, 2.5))
    assert np.allclose(smooth(const, 5).power, 2.5)
    with pytest.raises(ValueError):
        smooth(p, p.power.shape[0])


def test_smooth_single_bin_against_hand_convolution():
    T, k = 16, 3
    two = np.zeros(T)
    two[k] = two[T - k] = 1.0
    spec = Spectrum(np.arange(T // 2 + 1) * 100.0 / T, two[: T // 2 + 1], T, 100.0)
    out = smooth(spec, 1).two_sided()
    assert np.allclose(out, circular_moving_average(two, 1), atol=1e-15)
    assert np.allclose(out[[k - 1, k, k + 1]], 1 / 3)


@given(st.integers(8, 64), st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_smooth_preserves_mass_and_matches_oracle(T, seed, m):
    x = np.random.default_rng(seed).normal(size=T)
    p = periodogram(series(x))
    m = min(m, p.power.shape[0] - 1)
    s = smooth(p, m)
    assert s.two_sided().sum() == pytest.approx(p.two_sided().sum(), rel=1e-12)
    assert np.allclose(s.two_sided(), circular_moving_average(p.two_sided(), m), rtol=1e-12, atol=1e-12)
    assert np.all(s.power >= 0)


def test_default_half_bandwidth():
    assert default_half_bandwidth(200) == 8
    assert default_half_bandwidth(500) == 12


def test_hann_normalisation():
    for n in (5, 101, 1001):
        w = hann_weights(n)
        assert np.sum(w**2) == pytest.approx(1.0)
        assert np.all(w > 0) and np.allclose(w, w[::-1])


def test_spectrogram_zero_and_geometry():
    sg = spectrogram(series(np.zeros(300)), 10, 7)
    assert np.all(sg.power == 0)
    # window centres L, L+hop, ..., not beyond T-1-L
    assert sg.times_s[0] == pytest.approx(10 / 100)
    assert sg.times_s[-1] * 100 <= 300 - 1 - 10
    assert sg.power.shape == (len(range(10, 290, 7)), 11)
    with pytest.raises(ValueError):
        spectrogram(series(np.zeros(20)), 10, 1)
    with pytest.raises(ValueError):
        spectrogram(series(np.zeros(50)), 10, 0)


def test_spectrogram_frames_against_direct_sum():
    x = np.random.default_rng(1).normal(size=60)
    L, hop = 7, 5
    sg = spectrogram(series(x), L, hop)
    w = hann_weights(2 * L + 1)
    for j, t in enumerate(range(L, 60 - L, hop)):
        frame = x[t - L : t + L + 1] * w
        # the taper already carries the normalisation, so undo the 1/T of the oracle
        expect = direct_dft_periodogram(frame)[: L + 1] * (2 * L + 1)
        assert np.allclose(sg.power[j], expect, atol=1e-9)


def test_spectrogram_of_stationary_ar2_has_steady_ridge():
    x = generate_ar2(Ar2Spec.unit_variance(40.0, 100.0), 1500, seed=0)
    sg = spectrogram(x, 50, 25)
    ridge = sg.freqs_hz[np.argmax(sg.power, axis=1)]
    assert np.std(ridge, ddof=1) < 5.0


@given(st.integers(2, 48), st.floats(0.0, 2 * np.pi), st.sampled_from([101, 201, 301]))
def test_full_window_spectrogram_matches_periodogram_argmax(k, phase, T):
    x = series(np.cos(2 * np.pi * k * np.arange(T) / T + phase))
    sg = spectrogram(x, (T - 1) // 2, T)
    assert sg.power.shape[0] == 1
    assert np.argmax(sg.power[0]) == np.argmax(periodogram(x).power) == k


@given(st.floats(2.0, 48.0), st.floats(0.0, 2 * np.pi), st.sampled_from([101, 201, 301]))
def test_full_window_argmax_off_grid_within_one_bin(freq, phase, T):
    # between grid points the two tapers may round the peak to different neighbours
    x = series(np.cos(2 * np.pi * freq * np.arange(T) / 100.0 + phase))
    sg = spectrogram(x, (T - 1) // 2, T)
    assert abs(int(np.argmax(sg.power[0])) - int(np.argmax(periodogram(x).power))) <= 1


def test_spectrogram_smoothing_options():
    x = generate_ar2(Ar2Spec(12.0, 100.0), 400, 0)
    raw = spectrogram(x, 20, 10)
    sm = spectrogram(x, 20, 10, (2, 1))
    assert sm.smoothing == (2, 1)
    assert np.all(sm.power >= 0)
    assert np.var(np.diff(sm.power, axis=0)) < np.var(np.diff(raw.power, axis=0))


def test_stack():
    p = periodogram(series(np.random.default_rng(3).normal(size=32)))
    st1 = stack_update(None, p)
    assert np.array_equal(stack_mean(st1).power, p.power) and st1.count == 1
    st2 = stack_update(stack_update(None, p), p.with_power(3 * p.power))
    assert np.allclose(stack_mean(st2).power, 2 * p.power) and st2.count == 2
    with pytest.raises(ValueError):
        stack_update(st1, periodogram(series(np.ones(40))))


def _mean_periodogram(spec, n=100, T=200):
    stack = None
    for seed in range(n):
        stack = stack_update(stack, periodogram(generate_ar2(spec, T, seed)))
    return stack_mean(stack)


def _expected_periodogram(phi1, phi2, sd, freqs_hz, fs, T):
    """Exact mean of the periodogram: Fejér-weighted autocovariances."""
    psi = np.zeros(4000)
    psi[0], psi[1] = 1.0, phi1
    for k in range(2, psi.size):
        psi[k] = phi1 * psi[k - 1] + phi2 * psi[k - 2]
    gamma = sd**2 * np.array([np.dot(psi[: psi.size - h], psi[h:]) for h in range(T)])
    lags = np.arange(1, T)
    w = 2 * np.pi * np.asarray(freqs_hz) / fs
    return gamma[0] + 2 * np.cos(np.outer(w, lags)) @ ((1 - lags / T) * gamma[1:])


@pytest.mark.xfail(strict=True, reason="periodogram leakage bias near the spectral floor plus "
                   "sampling error of a 100-trial mean exceed 20% at some bins")
def test_mean_periodogram_matches_closed_form():
    spec = Ar2Spec(10.0, 100.0, 0.95)
    mean = _mean_periodogram(spec)
    phi1, phi2 = ar2_coefficients(spec)
    truth = ar2_spectrum(phi1, phi2, mean.freqs_hz, 100.0, spec.innovation_sd)
    rel = np.abs(mean.power - truth) / truth
    assert np.all(rel[2:] < 0.2)


def test_mean_periodogram_matches_exact_expectation():
    spec = Ar2Spec(10.0, 100.0, 0.95)
    mean = _mean_periodogram(spec)
    phi1, phi2 = ar2_coefficients(spec)
    expect = _expected_periodogram(phi1, phi2, spec.innovation_sd, mean.freqs_hz, 100.0, 200)
    # each periodogram ordinate is approximately exponential (chi-square at the ends),
    # so the mean of 100 has relative standard error 0.1 (0.14 at DC and Nyquist)
    se = np.full(mean.power.shape, 0.1)
    se[[0, -1]] = np.sqrt(2) * 0.1
    z = (mean.power - expect) / (expect * se)
    assert np.max(np.abs(z)) < 4.5
    assert abs(np.mean(z)) < 3 / np.sqrt(z.size)


def test_exports_roundtrip():
    x = generate_ar2(Ar2Spec(12.0, 100.0), 120, 0)
    p = smooth(periodogram(x), 2)
    t, f, power = loads_spg1(dumps_spg1(p))
    assert t.size == 0 and np.array_equal(f, p.freqs_hz) and np.array_equal(power, p.power)
    sg = spectrogram(x, 10, 5)
    blob = dumps_spg1(sg)
    assert blob[:4] == b"SPG1"
    t, f, power = loads_spg1(blob)
    assert np.array_equal(t, sg.times_s) and np.array_equal(power, sg.power)
    with pytest.raises(ValueError):
        loads_spg1(blob[:-8])
    text = spectrum_to_csv(p)
    assert text.startswith("# schema=regimetda-spectrum/1")
    vals = np.array([float(line.split(",")[1]) for line in text.splitlines()[2:]])
    assert np.array_equal(vals, p.power)
    rows = spectrogram_to_csv(sg).splitlines()
    assert rows[0].startswith("# schema=regimetda-spectrogram/1") and len(rows) == 2 + sg.power.size
