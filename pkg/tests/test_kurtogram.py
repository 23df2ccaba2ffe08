import csv
from fractions import Fraction

import numpy as np
import pytest

from sparsehm import kurtogram as kg
from sparsehm.datasets import SynthSpec, synth_file
from sparsehm.errors import ParameterError
from sparsehm.sigprep import Band, Signal

FS = 20_000.0
N = 16_384


def noise(seed, n=N):
    return Signal(np.random.default_rng(seed).standard_normal(n), FS)


def faulty(fault_freq=97.0, i=180, n=8192, seed=0):
    spec = SynthSpec(points_per_file=n, fault_freq=fault_freq, seed=seed)
    return Signal(synth_file(spec, i, np.random.SeedSequence(seed)), spec.fs)


def gaussian_sk(n_bins, runs=200, seed=0):
    """Monte Carlo SK of a band of n_bins complex Gaussian bins, built directly in frequency."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(runs):
        spec = np.zeros(N, complex)
        spec[1 : n_bins + 1] = rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins)
        se = np.abs(np.fft.ifft(spec)) ** 2
        out.append(np.mean(se**2) / np.mean(se) ** 2)
    return np.mean(out), np.std(out)


@pytest.mark.parametrize("level", range(1, 7))
def test_edges_tile_exactly(level):
    edges = kg.band_edges(level, FS)
    assert edges[0] == 0 and edges[-1] == FS / 2
    widths = np.diff(edges)
    assert np.all(widths == FS / 2 ** (level + 1))
    assert [Fraction(e) for e in edges] == [Fraction(k * 20_000, 2 ** (level + 1)) for k in range(2**level + 1)]


def test_grid_shape():
    cells, best = kg.fast_kurtogram(noise(0), 4)
    assert len(cells) == 2 + 4 + 8 + 16 and best in cells
    for level in range(1, 5):
        row = [c for c in cells if c.level == level]
        assert [c.index for c in row] == list(range(2**level))
        assert all(a.high == b.low for a, b in zip(row, row[1:]))
        assert all(c.bandwidth == FS / 2 ** (level + 1) for c in row)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_white_noise_floor(seed):
    cells, best = kg.fast_kurtogram(noise(seed), 6)
    floors = {lv: gaussian_sk(N >> (lv + 1), seed=lv) for lv in range(1, 7)}
    for c in cells:
        mu, sd = floors[c.level]
        assert c.sk_value <= mu + 6 * sd
    assert best.sk_value < 3.0


def test_resonance_band():
    _, best = kg.fast_kurtogram(faulty(), 6)
    assert best.low <= 3000.0 <= best.high
    assert best.sk_value > 3.0


def test_scale_invariance():
    x = noise(4)
    a, _ = kg.fast_kurtogram(x, 5)
    b, _ = kg.fast_kurtogram(Signal(123.4 * x.samples, FS), 5)
    assert np.allclose([c.sk_value for c in a], [c.sk_value for c in b], rtol=1e-10, atol=0)


def test_jobs_identical():
    a = kg.fast_kurtogram(faulty(), 6)
    b = kg.fast_kurtogram(faulty(), 6, jobs=4)
    assert a == b


def test_tie_break():
    mk = lambda lv, k, lo, hi: kg.KurtogramCell(lv, k, lo, hi, 4.0)
    cells = [mk(2, 1, 100, 200), mk(1, 0, 0, 200), mk(1, 1, 200, 400)]
    assert kg._best(cells) == cells[1]


@pytest.mark.parametrize("level", [0, -1])
def test_bad_level(level):
    with pytest.raises(ParameterError):
        kg.fast_kurtogram(noise(0), level)


def test_too_short():
    with pytest.raises(ParameterError):
        kg.fast_kurtogram(noise(0, 2**9), 6)


def test_grid_csv(tmp_path):
    cells, _ = kg.fast_kurtogram(noise(0), 2)
    kg.write_grid_csv(cells, tmp_path / "g.csv")
    rows = list(csv.DictReader(open(tmp_path / "g.csv")))
    assert len(rows) == 6 and float(rows[0]["bandwidth_hz"]) == 5000.0


class TestDiagnose:
    def test_planted_100hz(self):
        x = faulty(fault_freq=100.0)
        _, best = kg.fast_kurtogram(x, 6)
        rep = kg.diagnose(x, best.band, [100.0], n_harmonics=3)
        assert rep.matched_orders(100.0) == [1, 2, 3]
        for m in rep.matches:
            assert abs(m.found - m.order * m.target) <= FS / 8192

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_noise_has_no_matches(self, seed):
        rep = kg.diagnose(noise(seed, 8192), Band(2500, 3750), [97.0], n_harmonics=3)
        assert rep.matches == []

    def test_tolerance_is_symmetric(self):
        x = faulty()
        band = Band(2500, 3750)
        for tol in (0.5, 2.0, 5.0):
            for m in kg.diagnose(x, band, [97.0], tolerance_hz=tol).matches:
                assert abs(m.found - m.order * m.target) <= tol

    def test_default_tolerance_is_one_bin(self):
        assert kg.diagnose(faulty(), Band(2500, 3750), [97.0]).tolerance_hz == FS / 8192

    def test_errors(self):
        with pytest.raises(ParameterError):
            kg.diagnose(faulty(), Band(2500, 3750), [97.0], n_harmonics=0)
        with pytest.raises(ParameterError):
            kg.diagnose(faulty(), Band(2500, 30000), [97.0])

    def test_find_peaks(self):
        f = np.arange(10.0)
        a = np.array([9, 1, 1, 8, 1, 1, 1, 1, 7, 1.0])
        assert kg.find_peaks(f, a) == [(3.0, 8.0), (8.0, 7.0)]
        assert kg.find_peaks(f, a, support_hz=4.0) == [(3.0, 8.0), (8.0, 7.0)]
        assert kg.find_peaks(f, a, floor_factor=10.0) == []
