"""Raw vibration record -> band-limited squared envelope and its spectrum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEnvelopeError, DomainError, ParameterError

MIN_LENGTH = 16
# band output below this fraction of the input energy counts as empty
_EMPTY_BAND = 1e-20


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1:
            raise DomainError("signal must be 1-D")
        if arr.size < MIN_LENGTH:
            raise DomainError(f"signal needs at least {MIN_LENGTH} samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("signal contains non-finite samples")
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class Band:
    low: float
    high: float

    def validate(self, sample_rate: float) -> "Band":
        if not (0 <= self.low < self.high <= sample_rate / 2):
            raise ParameterError(
                f"band [{self.low}, {self.high}] Hz invalid for sample rate {sample_rate} Hz"
            )
        return self

    @property
    def center(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def width(self) -> float:
        return self.high - self.low

    def __contains__(self, freq: float) -> bool:
        return self.low <= freq <= self.high


def _onesided_weights(n: int) -> np.ndarray:
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[1 : (n + 1) // 2] = 2.0
    return h


def bandpass(x: Signal, band: Band) -> Signal:
    """Ideal zero-phase band-pass: keep FFT bins with low <= |f| <= high."""
    band.validate(x.sample_rate)
    n = len(x)
    spec = np.fft.rfft(x.samples)
    f = np.fft.rfftfreq(n, 1.0 / x.sample_rate)
    spec[(f < band.low) | (f > band.high)] = 0.0
    return Signal(np.fft.irfft(spec, n), x.sample_rate)


def analytic(x: Signal) -> np.ndarray:
    """Analytic signal via the one-sided spectrum; ``abs()`` of it is the envelope."""
    n = len(x)
    return np.fft.ifft(np.fft.fft(x.samples) * _onesided_weights(n))


def band_analytic(spectrum: np.ndarray, freqs: np.ndarray, band: Band) -> np.ndarray:
    """Analytic signal of the band-passed record from its precomputed full FFT.

    ``freqs`` must be ``np.fft.fftfreq(n, 1/fs)``. Equivalent to
    ``analytic(bandpass(x, band))`` but costs a single inverse FFT.
    """
    n = spectrum.size
    mag = np.abs(freqs)
    keep = (mag >= band.low) & (mag <= band.high)
    return np.fft.ifft(spectrum * (_onesided_weights(n) * keep))


def squared_envelope(x: Signal, band: Band) -> np.ndarray:
    """``|analytic(bandpass(x))|**2``; no positivity floor is applied.

    Raises:
        DegenerateEnvelopeError: when nothing of the record survives the band.
    """
    band.validate(x.sample_rate)
    n = len(x)
    z = band_analytic(np.fft.fft(x.samples), np.fft.fftfreq(n, 1.0 / x.sample_rate), band)
    se = z.real**2 + z.imag**2
    ref = float(np.mean(x.samples**2))
    if ref == 0.0 or float(np.mean(se)) <= _EMPTY_BAND * ref:
        raise DegenerateEnvelopeError(f"no energy in band [{band.low}, {band.high}] Hz")
    return se


def envelope_spectrum(se, sample_rate: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided amplitude spectrum of the mean-removed squared envelope."""
    se = np.asarray(se, dtype=np.float64)
    if se.size < MIN_LENGTH:
        raise DomainError(f"envelope needs at least {MIN_LENGTH} samples")
    n = se.size
    amp = np.abs(np.fft.rfft(se - se.mean())) * (2.0 / n)
    return np.fft.rfftfreq(n, 1.0 / sample_rate), amp
