import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_wasserstein, transport_lp
from regimetda.metrics import MetricKind, emd_1d, fn_distance, wasserstein_diagrams
from regimetda.series import TrialSeries
from regimetda.simgen import Ar2Spec, generate_ar2
from regimetda.spectral import Spectrum, periodogram, spectrogram, stack_mean, stack_update
from regimetda.tda import PersistenceDiagram


def spectrum(power, fs=100.0):
    power = np.asarray(power, dtype=float)
    T = 2 * (power.size - 1)
    return Spectrum(np.arange(power.size) * fs / T, power, T, fs)


@st.composite
def diagrams(draw, max_points=6):
    n = draw(st.integers(0, max_points))
    births = draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n))
    lengths = draw(st.lists(st.floats(0, 4), min_size=n, max_size=n))
    return PersistenceDiagram(1, [(b, b + l) for b, l in zip(births, lengths)])


# --- function distances -------------------------------------------------------------


def test_fn_distance_basics():
    a = spectrum(np.random.default_rng(0).uniform(size=33))
    assert fn_distance(a, a, 1) == 0 and fn_distance(a, a, 2) == 0
    b = a.with_power(a.power + 0.5)
    measure = a.power.size * a.df
    assert fn_distance(a, b, 1) == pytest.approx(0.5 * measure)
    assert fn_distance(a, b, 2) == pytest.approx(0.5 * math.sqrt(measure))
    with pytest.raises(ValueError):
        fn_distance(a, b, 3)
    with pytest.raises(ValueError):
        fn_distance(a, spectrum(np.ones(17)), 1)
    with pytest.raises(TypeError):
        fn_distance(a, object(), 1)


def test_fn_distance_direct_sum():
    rng = np.random.default_rng(1)
    a, b = spectrum(rng.uniform(size=65)), spectrum(rng.uniform(size=65))
    total = 0.0
    for x, y in zip(a.power.tolist(), b.power.tolist()):
        total += (x - y) ** 2 * a.df
    assert fn_distance(a, b, 2) == pytest.approx(math.sqrt(total), rel=1e-12, abs=1e-12)


def test_spectrogram_cell_measure():
    rng = np.random.default_rng(2)
    x = TrialSeries(rng.normal(size=300), 100.0)
    y = TrialSeries(rng.normal(size=300), 100.0)
    a, b = spectrogram(x, 10, 5), spectrogram(y, 10, 5)
    cell = (5 / 100.0) * (100.0 / 21)
    assert fn_distance(a, b, 1) == pytest.approx(np.sum(np.abs(a.power - b.power)) * cell)
    with pytest.raises(ValueError):
        fn_distance(a, spectrogram(y, 10, 6), 1)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.sampled_from([1, 2]))
def test_fn_distance_scaling_and_bounds(seed, c, p):
    rng = np.random.default_rng(seed)
    a, b = spectrum(rng.uniform(size=17)), spectrum(rng.uniform(size=17))
    d = fn_distance(a, b, p)
    assert fn_distance(a.with_power(c * a.power), b.with_power(c * b.power), p) == pytest.approx(c * d, rel=1e-9)
    measure = a.power.size * a.df
    assert 0 <= d <= np.max(np.abs(a.power - b.power)) * measure ** (1 / p) * (1 + 1e-12)


# --- earth mover's distance ---------------------------------------------------------------


def test_emd_spikes():
    a, b = np.zeros(33), np.zeros(33)
    a[4], b[11] = 2.0, 5.0
    sa, sb = spectrum(a), spectrum(b)
    assert emd_1d(sa, sa) == 0
    assert emd_1d(sa, sb) == pytest.approx(7 * sa.df)
    with pytest.raises(ValueError):
        emd_1d(sa, spectrum(np.zeros(33)))


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_emd_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    a, b = spectrum(rng.uniform(size=17)), spectrum(rng.uniform(size=17))
    scaled = emd_1d(a.with_power(c * a.power), b.with_power(c * b.power))
    assert scaled == pytest.approx(emd_1d(a, b), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_emd_matches_lp(seed):
    rng = np.random.default_rng(seed)
    a, b = spectrum(rng.uniform(size=9) ** 3), spectrum(rng.uniform(size=9) ** 3)
    lp = transport_lp(a.power / a.power.sum(), b.power / b.power.sum(), a.freqs_hz)
    assert emd_1d(a, b) == pytest.approx(lp, abs=1e-6)


def _mean_periodogram(freq):
    stack = None
    for seed in range(50):
        stack = stack_update(stack, periodogram(generate_ar2(Ar2Spec.unit_variance(freq, 100.0), 200, seed)))
    return stack_mean(stack)


def _coarsen(spec, bins=16):
    """Move each fine bin's mass to the nearest point of a 16-point grid on 0..fs/2."""
    T = 2 * (bins - 1)
    df = spec.sampling_rate_hz / T
    idx = np.rint(spec.freqs_hz / df).astype(int)
    power = np.bincount(idx, weights=spec.power, minlength=bins)
    return Spectrum(np.arange(bins) * df, power, T, spec.sampling_rate_hz)


def test_emd_ar2_means_against_lp_oracle():
    a, b = _coarsen(_mean_periodogram(10.0)), _coarsen(_mean_periodogram(40.0))
    lp = transport_lp(a.power / a.power.sum(), b.power / b.power.sum(), a.freqs_hz)
    value = emd_1d(a, b)
    assert value == pytest.approx(lp, abs=1e-6)
    # pinned from the seeded run
    assert value == pytest.approx(30.523431725763626, abs=1e-6)


# --- diagram Wasserstein --------------------------------------------------------------------


def test_wasserstein_analytic_cases():
    one = PersistenceDiagram(1, [(0, 2)])
    empty = PersistenceDiagram(1, [])
    assert wasserstein_diagrams(one, one) == 0
    assert wasserstein_diagrams(one, empty) == pytest.approx(math.sqrt(2))
    assert brute_force_wasserstein(one.points, empty.points) == pytest.approx(math.sqrt(2))
    two = PersistenceDiagram(1, [(0, 2), (1, 1.1)])
    assert wasserstein_diagrams(one, two) == pytest.approx(0.1 / math.sqrt(2))
    assert wasserstein_diagrams(empty, empty) == 0
    with pytest.raises(ValueError):
        wasserstein_diagrams(one, PersistenceDiagram(0, [(0, 2)]))


@given(diagrams(), diagrams())
def test_wasserstein_matches_enumeration(d1, d2):
    assert wasserstein_diagrams(d1, d2) == pytest.approx(brute_force_wasserstein(d1.points, d2.points), abs=1e-9)


@given(diagrams(), diagrams(), diagrams())
def test_wasserstein_metric_axioms(a, b, c):
    ab, ba = wasserstein_diagrams(a, b), wasserstein_diagrams(b, a)
    assert ab == ba
    assert ab <= wasserstein_diagrams(a, c) + wasserstein_diagrams(c, b) + 1e-9
    assert wasserstein_diagrams(a, a) == 0


def test_wasserstein_order_one():
    a = PersistenceDiagram(0, [(0, 3), (1, 2)])
    b = PersistenceDiagram(0, [(0, 2.5)])
    assert wasserstein_diagrams(a, b, p=1) == pytest.approx(brute_force_wasserstein(a.points, b.points, 1))


# --- metric kinds ---------------------------------------------------------------------------


def test_metric_kind_parsing():
    assert MetricKind.parse("L1").name == "L1_fn"
    assert MetricKind.parse("W").kind == "W1_fn" and MetricKind.parse("W1_fn").mass_normalized
    m = MetricKind.parse("W2_diagram:H1", 0.05)
    assert (m.kind, m.dim, m.filter_fraction, m.name) == ("W2_diagram", 1, 0.05, "W2_diagram:H1")
    for bad in ("W2_diagram", "W2_diagram:H2", "Linf"):
        with pytest.raises(ValueError):
            MetricKind.parse(bad)
    with pytest.raises(ValueError):
        MetricKind("L1_fn", dim=0)
    with pytest.raises(ValueError):
        MetricKind("W2_diagram", 0, -0.1)
