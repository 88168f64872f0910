"""Recompute every seeded value that the test suite pins.

Run after an intentional numerical change; compare the output with the
constants in the tests before updating them.

    python scripts/pin_goldens.py
"""

from __future__ import annotations

import numpy as np

from regimetda.detect import DetectorConfig, distance_series_multi
from regimetda.metrics import emd_1d
from regimetda.simgen import Ar2Spec, build_example, generate_ar2
from regimetda.spectral import Spectrum, periodogram, stack_mean, stack_update
from regimetda.tda import filter_diagram, sublevel_ph_2d


def example2_h0_jump():
    s = distance_series_multi(build_example(2, 0).generate(), DetectorConfig(scenario=1), ["W2_diagram:H0"])
    s = s["W2_diagram:H0"]
    return s.window_mean(101, 120) / s.window_mean(20, 99)


def coarse_mean_emd():
    def mean(freq):
        st = None
        for seed in range(50):
            st = stack_update(st, periodogram(generate_ar2(Ar2Spec.unit_variance(freq, 100.0), 200, seed)))
        spec = stack_mean(st)
        df = 100.0 / 30
        power = np.bincount(np.rint(spec.freqs_hz / df).astype(int), weights=spec.power, minlength=16)
        return Spectrum(np.arange(16) * df, power, 30, 100.0)

    return emd_1d(mean(10.0), mean(40.0))


def noisy_two_bumps(multiple, sd=0.02):
    yy, xx = np.mgrid[:32, :32]
    clean = sum(h * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 2.5**2))
                for (cy, cx), h in (((9, 9), 1.0), ((22, 22), 0.8)))
    hits = 0
    for seed in range(100):
        f = clean + np.random.default_rng(seed).normal(0, sd, clean.shape)
        hits += len(filter_diagram(sublevel_ph_2d(f)[1], multiple * sd)) == 2
    return hits


if __name__ == "__main__":
    print(f"example 2 W2_diagram:H0 jump factor (seed 0): {example2_h0_jump()!r}")
    print(f"EMD between coarsened 50-trial mean periodograms at 10 and 40 Hz: {coarse_mean_emd()!r}")
    print(f"noisy two-bump replicates keeping exactly two H1 points: "
          f"{noisy_two_bumps(3.0)}/100 at 3 sd, {noisy_two_bumps(4.0)}/100 at 4 sd")
