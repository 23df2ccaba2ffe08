"""Run-to-failure data: IMS and XJTU-SY readers and a synthetic bearing rig.

A run is an ordered list of ``(file_id, Signal | None)`` pairs. ``None``
stands for a file that could not be parsed; it keeps its slot so that
file ids of later recordings stay aligned with the archive.
"""

from __future__ import annotations

import math
import os
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyRunError, FormatError, ParameterError
from .sigprep import Signal

IMS_SAMPLE_RATE = 20_000.0
IMS_POINTS = 20_480
XJTU_SAMPLE_RATE = 25_600.0
XJTU_POINTS = 32_768
XJTU_HEADER = "Horizontal_vibration_signals,Vertical_vibration_signals"
XJTU_AXES = {"horizontal": 0, "vertical": 1}


@dataclass
class RunToFailureRun:
    files: list[tuple[int, Signal | None]]
    sample_rate: float
    channel: int | str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rates = {s.sample_rate for _, s in self.files if s is not None}
        if rates - {self.sample_rate}:
            raise FormatError(f"run mixes sample rates {sorted(rates)}")
        ids = [fid for fid, _ in self.files]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise FormatError("file ids must be strictly increasing")

    def __len__(self) -> int:
        return len(self.files)

    @property
    def file_ids(self) -> list[int]:
        return [fid for fid, _ in self.files]

    @property
    def warnings(self) -> list[str]:
        return self.metadata.setdefault("warnings", [])

    def signal(self, file_id: int) -> Signal | None:
        """Recording with the given id; ``KeyError`` if the id is not in the run."""
        for fid, sig in self.files:
            if fid == file_id:
                return sig
        raise KeyError(file_id)


# ---------------------------------------------------------------------------
# readers
# ---------------------------------------------------------------------------


def _ims_sort_key(name: str) -> str:
    # IMS names look like 2004.02.12.10.32.39; pad every numeric field so
    # that plain string order is chronological even for unpadded names
    return re.sub(r"\d+", lambda m: m.group(0).zfill(6), name)


def _list_files(dir_path, pattern: str | None = None) -> list[Path]:
    root = Path(dir_path)
    if not root.is_dir():
        raise FileNotFoundError(f"no such directory: {root}")
    files = [p for p in root.iterdir() if p.is_file() and not p.name.startswith(".")]
    if pattern:
        files = [p for p in files if re.fullmatch(pattern, p.name)]
    if not files:
        raise EmptyRunError(f"{root} contains no data files")
    return files


def _parallel_map(fn, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _assemble(loaded, sample_rate, channel, meta) -> RunToFailureRun:
    files, warnings = [], []
    for fid, name, column, err in loaded:
        if err is not None:
            warnings.append(f"{name}: {err}")
            files.append((fid, None))
        else:
            files.append((fid, Signal(column, sample_rate)))
    if all(s is None for _, s in files):
        raise EmptyRunError("no file in the run could be parsed")
    meta = dict(meta, warnings=warnings, n_skipped=len(warnings))
    return RunToFailureRun(files, sample_rate, channel, meta)


def read_ims(dir_path, channel: int = 1, sample_rate: float = IMS_SAMPLE_RATE, jobs: int = 1) -> RunToFailureRun:
    """Read an IMS run: headerless whitespace-delimited ASCII, one column per channel.

    Args:
        dir_path: directory holding one file per recording.
        channel: 1-based column number.
        sample_rate: 20 kHz for the IMS rig.
        jobs: parser threads; the result does not depend on it.

    Returns:
        Run whose file ids are 1-based positions in chronological order.
        Files with malformed rows become ``None`` slots plus a warning.

    Raises:
        FormatError: a parsable file has fewer columns than ``channel``.
        EmptyRunError: empty directory or nothing parsable.
    """
    if channel < 1:
        raise ParameterError("IMS channels are numbered from 1")
    paths = sorted(_list_files(dir_path), key=lambda p: _ims_sort_key(p.name))

    def load(item):
        fid, path = item
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                data = np.loadtxt(path, dtype=np.float64, ndmin=2)
        except ValueError as exc:
            return fid, path.name, None, f"malformed row ({exc})"
        if data.shape[0] < 16:
            return fid, path.name, None, f"only {data.shape[0]} rows"
        if data.shape[1] < channel:
            raise FormatError(f"{path.name} has {data.shape[1]} columns, channel {channel} requested")
        return fid, path.name, data[:, channel - 1].copy(), None

    loaded = _parallel_map(load, list(enumerate(paths, start=1)), jobs)
    meta = {"format": "IMS", "directory": str(dir_path), "names": [p.name for p in paths]}
    return _assemble(loaded, sample_rate, channel, meta)


def read_xjtu(
    dir_path, axis: str = "horizontal", sample_rate: float = XJTU_SAMPLE_RATE, jobs: int = 1
) -> RunToFailureRun:
    """Read an XJTU-SY run: ``<minute>.csv`` files with a header and two columns.

    File ids are the integer file stems, sorted numerically.

    Raises:
        FormatError: header-only file, wrong column count or bad header.
        EmptyRunError: no ``<int>.csv`` files.
    """
    if axis not in XJTU_AXES:
        raise ParameterError(f"axis must be one of {sorted(XJTU_AXES)}, got {axis!r}")
    col = XJTU_AXES[axis]
    paths = sorted(_list_files(dir_path, r"\d+\.csv"), key=lambda p: int(p.stem))

    def load(path):
        fid = int(path.stem)
        with open(path, encoding="ascii") as fh:
            header = fh.readline()
            if not header.strip():
                raise FormatError(f"{path.name} is empty")
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)  # "input contained no data"
                    data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
            except ValueError as exc:
                return fid, path.name, None, f"malformed row ({exc})"
        if data.size == 0:
            raise FormatError(f"{path.name} has a header but no data")
        if data.shape[1] != 2:
            raise FormatError(f"{path.name} has {data.shape[1]} columns, expected 2")
        return fid, path.name, data[:, col].copy(), None

    loaded = _parallel_map(load, paths, jobs)
    meta = {"format": "XJTU-SY", "directory": str(dir_path)}
    return _assemble(loaded, sample_rate, axis, meta)


# ---------------------------------------------------------------------------
# synthetic rig
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Desk-scale bearing run: noise, then a growing outer-race impulse train.

    File ``i >= ffot_index`` carries impulses of amplitude
    ``onset + (final - onset) * ((i - ffot) / (n_files - ffot)) ** severity_ramp``.
    File ids are the 0-based positions.
    """

    fs: float = 20_000.0
    points_per_file: int = 8192
    n_files: int = 200
    ffot_index: int = 120
    fault_freq: float = 97.0
    resonance_freq: float = 3000.0
    resonance_decay: float = 600.0
    noise_std: float = 1.0
    severity_ramp: float = 1.5
    seed: int = 0
    onset_amplitude: float = 2.0
    final_amplitude: float = 8.0

    def validate(self) -> "SynthSpec":
        if self.fs <= 0 or self.points_per_file < 16 or self.n_files < 1:
            raise ParameterError("fs, points_per_file (>= 16) and n_files must be positive")
        if not 0 <= self.ffot_index < self.n_files:
            raise ParameterError("ffot_index must lie in [0, n_files)")
        if not 0 < self.fault_freq < self.fs / 2:
            raise ParameterError("fault_freq must lie in (0, fs/2)")
        if not 0 < self.resonance_freq < self.fs / 2:
            raise ParameterError("resonance_freq must lie in (0, fs/2)")
        if self.resonance_decay <= 0 or self.noise_std < 0 or self.severity_ramp < 0:
            raise ParameterError("resonance_decay must be > 0; noise_std and severity_ramp >= 0")
        if self.onset_amplitude < 0 or self.final_amplitude < 0:
            raise ParameterError("amplitudes must be non-negative")
        return self

    def amplitude(self, i: int) -> float:
        if i < self.ffot_index:
            return 0.0
        frac = (i - self.ffot_index) / (self.n_files - self.ffot_index)
        return self.onset_amplitude + (self.final_amplitude - self.onset_amplitude) * frac**self.severity_ramp


def impulse_train(n: int, fs: float, fault_freq: float, resonance: float, decay: float, phase: float) -> np.ndarray:
    """Unit-amplitude train of decaying sinusoids, first onset at ``phase`` seconds.

    Onsets before the record start are included so the train is already in
    steady state at sample 0.
    """
    t = np.arange(n) / fs
    period = 1.0 / fault_freq
    tail = 25.0 / decay  # exp(-25) ~ 1e-11
    k0 = -math.ceil(tail / period)
    k1 = math.ceil((n / fs - phase) / period)
    out = np.zeros(n)
    for k in range(k0, k1 + 1):
        t0 = phase + k * period
        a = max(0, math.ceil(t0 * fs))
        b = min(n, math.ceil((t0 + tail) * fs))
        if a >= b:
            continue
        dt = t[a:b] - t0
        out[a:b] += np.exp(-decay * dt) * np.sin(2 * np.pi * resonance * dt)
    return out


def synth_file(spec: SynthSpec, i: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = spec.noise_std * rng.standard_normal(spec.points_per_file)
    phase = rng.random() / spec.fault_freq
    amp = spec.amplitude(i)
    if amp > 0:
        x += amp * impulse_train(
            spec.points_per_file, spec.fs, spec.fault_freq, spec.resonance_freq, spec.resonance_decay, phase
        )
    return x


def synth_run(spec: SynthSpec = SynthSpec(), jobs: int = 1) -> RunToFailureRun:
    """Generate a seeded synthetic run; every file has its own sub-seed."""
    spec.validate()
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_files)
    arrays = _parallel_map(lambda i: synth_file(spec, i, seeds[i]), range(spec.n_files), jobs)
    files = [(i, Signal(a, spec.fs)) for i, a in enumerate(arrays)]
    return RunToFailureRun(files, spec.fs, 1, {"format": "synthetic", "spec": asdict(spec), "warnings": []})


def export_xjtu(run: RunToFailureRun, out_dir) -> list[Path]:
    """Write a run in XJTU-SY layout, ``<file_id>.csv``, with 17 significant digits.

    The synthetic rig has one sensor, so both columns carry the same samples.
    Skipped (``None``) files are not written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fid, sig in run.files:
        if sig is None:
            continue
        path = out / f"{fid}.csv"
        data = np.column_stack([sig.samples, sig.samples])
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header=XJTU_HEADER, comments="")
        written.append(path)
    return written


def write_ims_file(path: os.PathLike, columns: np.ndarray) -> None:
    """Write one IMS-layout file (tab-separated, no header); used for fixtures."""
    data = np.asarray(columns, dtype=np.float64)
    np.savetxt(path, data[:, None] if data.ndim == 1 else data, fmt="%.17g", delimiter="\t")
