"""Dyadic kurtogram band search and envelope-spectrum diagnosis.

Level ``l`` splits ``[0, fs/2]`` into ``2**l`` equal bands of width
``fs / 2**(l+1)``. Each band is demodulated with the ideal FFT mask and
scored by the spectral kurtosis of its squared envelope,
``mean(se**2) / mean(se)**2``, which is 2 for Gaussian noise and grows with
impulsiveness. One forward FFT serves the whole grid.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .sigprep import Band, Signal, band_analytic, envelope_spectrum, squared_envelope
from .sparsity import sk_values


@dataclass(frozen=True)
class KurtogramCell:
    level: int
    index: int
    low: float
    high: float
    sk_value: float

    @property
    def band(self) -> Band:
        return Band(self.low, self.high)

    @property
    def center(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def bandwidth(self) -> float:
        return self.high - self.low


def band_edges(level: int, sample_rate: float) -> np.ndarray:
    """``2**level + 1`` edges ``k * fs / 2**(level+1)``; exact for integer fs."""
    return np.arange(2**level + 1) * sample_rate / 2 ** (level + 1)


def _best(cells: list[KurtogramCell]) -> KurtogramCell:
    # highest SK, then the wider band, then the lower centre
    return max(cells, key=lambda c: (c.sk_value, c.bandwidth, -c.center))


def fast_kurtogram(x: Signal, max_level: int = 6, jobs: int = 1) -> tuple[list[KurtogramCell], KurtogramCell]:
    """Spectral kurtosis over the dyadic band grid, levels ``1..max_level``.

    Raises:
        ParameterError: ``max_level < 1`` or the record is shorter than
            ``2**(max_level + 4)`` samples.
    """
    if max_level < 1:
        raise ParameterError("max_level must be >= 1")
    n = len(x)
    if n < 2 ** (max_level + 4):
        raise ParameterError(f"level {max_level} needs at least {2 ** (max_level + 4)} samples, got {n}")
    spectrum = np.fft.fft(x.samples)
    freqs = np.fft.fftfreq(n, 1.0 / x.sample_rate)

    grid = []
    for level in range(1, max_level + 1):
        edges = band_edges(level, x.sample_rate)
        grid += [(level, k, float(edges[k]), float(edges[k + 1])) for k in range(2**level)]

    def cell(item):
        level, k, lo, hi = item
        z = band_analytic(spectrum, freqs, Band(lo, hi))
        se = z.real**2 + z.imag**2
        sk = float(sk_values(se)) if se.mean() > 0 else 0.0
        return KurtogramCell(level, k, lo, hi, sk)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(cell, grid))
    else:
        cells = [cell(g) for g in grid]
    return cells, _best(cells)


def write_grid_csv(cells: list[KurtogramCell], path, fmt: str = "{:.12g}") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "index", "low_hz", "high_hz", "center_hz", "bandwidth_hz", "sk"])
        for c in cells:
            w.writerow([c.level, c.index] + [fmt.format(v) for v in (c.low, c.high, c.center, c.bandwidth, c.sk_value)])


@dataclass(frozen=True)
class Match:
    target: float
    found: float
    order: int
    amplitude: float


@dataclass(frozen=True)
class DiagnosisReport:
    band: Band
    peaks: list[tuple[float, float]]
    matches: list[Match]
    tolerance_hz: float

    def matched_orders(self, target: float) -> list[int]:
        return sorted(m.order for m in self.matches if m.target == target)


def find_peaks(
    freqs: np.ndarray, amp: np.ndarray, floor_factor: float = 3.0, support_hz: float | None = None
) -> list[tuple[float, float]]:
    """Local maxima (DC excluded) above ``floor_factor`` times the median amplitude.

    The median is taken over ``(0, support_hz]``. The noise level of an
    envelope spectrum falls off towards the band width and is zero above
    it, so a median over the whole axis would sit far below the level
    around the frequencies being searched.
    """
    region = amp[1:] if support_hz is None else amp[1:][freqs[1:] <= support_hz]
    floor = floor_factor * float(np.median(region))
    a = amp[1:-1]
    is_peak = (a > amp[:-2]) & (a >= amp[2:]) & (a > floor)
    idx = np.flatnonzero(is_peak) + 1
    return [(float(freqs[i]), float(amp[i])) for i in idx]


def diagnose(
    x: Signal,
    band: Band,
    targets,
    tolerance_hz: float | None = None,
    n_harmonics: int = 3,
    floor_factor: float = 3.0,
) -> DiagnosisReport:
    """Look for each target frequency and its harmonics in the envelope spectrum.

    For harmonic ``k`` of target ``f`` the strongest peak with
    ``|found - k*f| <= tolerance_hz`` is reported. The default tolerance is
    one spectral bin, ``fs / N``.
    """
    if n_harmonics < 1:
        raise ParameterError("n_harmonics must be >= 1")
    band.validate(x.sample_rate)
    freqs, amp = envelope_spectrum(squared_envelope(x, band), x.sample_rate)
    tol = x.sample_rate / len(x) if tolerance_hz is None else float(tolerance_hz)
    targets = [float(f) for f in targets]
    support = min(band.width, (n_harmonics + 1) * max(targets)) if targets else band.width
    peaks = find_peaks(freqs, amp, floor_factor, support)
    matches = []
    for f0 in targets:
        for order in range(1, n_harmonics + 1):
            near = [(a, f) for f, a in peaks if abs(f - order * f0) <= tol]
            if near:
                a, f = max(near)
                matches.append(Match(float(f0), f, order, a))
    return DiagnosisReport(band, peaks, matches, tol)
