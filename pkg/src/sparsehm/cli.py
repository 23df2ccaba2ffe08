"""Command-line front end: ``sparsehm {analyze,attributes,ffot,stages,kurtogram,synth}``.

Configuration is one INI file. Sections and keys (all optional unless noted):

``[dataset]``
    ``kind`` = synth | ims | xjtu; ``path`` (ims/xjtu); ``channel`` (ims,
    1-based); ``axis`` (xjtu); ``sample_rate`` (override).
``[synth]``
    any :class:`~sparsehm.datasets.SynthSpec` field.
``[pipeline]``
    ``seed``; ``band`` = auto | "low, high"; ``reference_file`` (needed by
    auto); ``index`` = HI1..HI4 | custom; ``tau``; ``baseline_count`` (default 300 for IMS, else 20% of the run);
    ``run_length``; ``fault_freq`` (comma list of Hz); ``n_harmonics``;
    ``lilliefors_runs``.
``[forest]``
    :class:`~sparsehm.iforest.ForestConfig` fields plus ``features`` =
    windowed | raw.
``[kurtogram]``
    ``max_level``.
``[index]``
    a custom :class:`~sparsehm.health_index.IndexSpec` (see ``to_config``).

The seed is taken from ``--seed``, then ``SPARSEHM_SEED``, then the config
(``[pipeline] seed``), then 42. A command-line or environment seed also
overrides ``[synth] seed`` and ``[forest] random_state``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import attributes as attr
from . import datasets, detect, iforest, kurtogram
from .errors import ConfigError, InvariantError, ParameterError, SparsehmError
from .health_index import DEFAULT_TAU, HiSeries, IndexSpec, hi_series
from .sigprep import Band

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4
DEFAULT_SEED = 42
SECTIONS = ("dataset", "synth", "pipeline", "forest", "kurtogram", "index")


def fmt(v) -> str:
    """Fixed 12-significant-digit rendering; NaN becomes an empty field."""
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else f"{v:.12g}"


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    dataset_kind: str = "synth"
    dataset_path: str | None = None
    channel: int = 1
    axis: str = "horizontal"
    sample_rate: float | None = None
    synth: datasets.SynthSpec = field(default_factory=datasets.SynthSpec)
    band: Band | None = None  # None means "auto"
    reference_file: int | None = None
    index: int | IndexSpec = 1
    tau: float = DEFAULT_TAU
    baseline_count: int | None = None  # None: 300 files for IMS, else 20% of the run
    run_length: int = 3
    fault_freqs: tuple[float, ...] = ()
    n_harmonics: int = 3
    lilliefors_runs: int = detect.DEFAULT_MC_RUNS
    forest: iforest.ForestConfig = field(default_factory=iforest.ForestConfig)
    forest_features: str = "windowed"
    max_level: int = 6
    seed: int = DEFAULT_SEED

    @property
    def index_name(self) -> str:
        return f"HI{self.index}" if isinstance(self.index, int) else "custom"

    def baseline_points(self, n_files: int) -> int:
        if self.baseline_count is not None:
            return self.baseline_count
        if self.dataset_kind == "ims":
            return 300
        return max(detect.MIN_BASELINE, round(0.2 * n_files))


def resolve_seed(cli_seed: int | None, config_seed: str | None) -> tuple[int, bool]:
    """Return ``(seed, overriding)``; ``overriding`` is True for CLI/env seeds."""
    if cli_seed is not None:
        return cli_seed, True
    env = os.environ.get("SPARSEHM_SEED")
    if env is not None and env.strip():
        try:
            return int(env), True
        except ValueError:
            raise ConfigError(f"SPARSEHM_SEED must be an integer, got {env!r}") from None
    if config_seed is not None:
        return int(config_seed), False
    return DEFAULT_SEED, False


def _typed(cls, section: configparser.SectionProxy, ignore=()):
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name in section and f.name not in ignore:
            raw = section[f.name].strip()
            typ = f.default.__class__ if f.default is not dataclasses.MISSING else float
            if f.name == "outlier_threshold":
                kw[f.name] = None if raw.lower() in ("", "auto", "none") else float(raw)
            elif typ is int:
                kw[f.name] = int(raw)
            else:
                kw[f.name] = float(raw)
    unknown = set(section) - {f.name for f in dataclasses.fields(cls)} - set(ignore)
    if unknown:
        raise ConfigError(f"[{section.name}] has unknown keys: {sorted(unknown)}")
    return kw


def load_config(path: str | None, cli_seed: int | None = None) -> PipelineConfig:
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown config section [{name}]")
    for name in SECTIONS:
        if not parser.has_section(name):
            parser.add_section(name)
    ds, sy, pl, fo, ku = (parser[s] for s in ("dataset", "synth", "pipeline", "forest", "kurtogram"))

    try:
        seed, overriding = resolve_seed(cli_seed, pl.get("seed"))
        synth_kw = _typed(datasets.SynthSpec, sy)
        if overriding or "seed" not in synth_kw:
            synth_kw["seed"] = seed
        forest_kw = _typed(iforest.ForestConfig, fo, ignore=("features",))
        if overriding or "random_state" not in forest_kw:
            forest_kw["random_state"] = seed

        band_raw = pl.get("band", "auto").strip().lower()
        band = None
        if band_raw != "auto":
            lo, hi = (float(v) for v in band_raw.split(","))
            band = Band(lo, hi)
        ref = pl.get("reference_file")

        index_raw = pl.get("index", "HI1").strip().upper()
        if index_raw == "CUSTOM":
            index = IndexSpec.from_config(parser["index"])
        elif index_raw in ("HI1", "HI2", "HI3", "HI4"):
            index = int(index_raw[2])
        else:
            raise ConfigError(f"index must be HI1..HI4 or custom, got {index_raw!r}")

        cfg = PipelineConfig(
            dataset_kind=ds.get("kind", "synth").strip().lower(),
            dataset_path=ds.get("path"),
            channel=int(ds.get("channel", 1)),
            axis=ds.get("axis", "horizontal").strip().lower(),
            sample_rate=float(ds["sample_rate"]) if "sample_rate" in ds else None,
            synth=datasets.SynthSpec(**synth_kw).validate(),
            band=band,
            reference_file=int(ref) if ref is not None else None,
            index=index,
            tau=float(pl.get("tau", DEFAULT_TAU)),
            baseline_count=int(pl["baseline_count"]) if "baseline_count" in pl else None,
            run_length=int(pl.get("run_length", 3)),
            fault_freqs=tuple(float(v) for v in pl.get("fault_freq", "").split(",") if v.strip()),
            n_harmonics=int(pl.get("n_harmonics", 3)),
            lilliefors_runs=int(pl.get("lilliefors_runs", detect.DEFAULT_MC_RUNS)),
            forest=iforest.ForestConfig(**forest_kw),
            forest_features=fo.get("features", "windowed").strip().lower(),
            max_level=int(ku.get("max_level", 6)),
            seed=seed,
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if cfg.dataset_kind not in ("synth", "ims", "xjtu"):
        raise ConfigError(f"dataset kind must be synth, ims or xjtu, got {cfg.dataset_kind!r}")
    if cfg.dataset_kind != "synth" and not cfg.dataset_path:
        raise ConfigError("[dataset] path is required for ims/xjtu")
    if cfg.forest_features not in ("windowed", "raw"):
        raise ConfigError("[forest] features must be windowed or raw")
    return cfg


# ---------------------------------------------------------------------------
# pipeline steps
# ---------------------------------------------------------------------------


def load_run(cfg: PipelineConfig, jobs: int = 1) -> datasets.RunToFailureRun:
    if cfg.dataset_kind == "synth":
        return datasets.synth_run(cfg.synth, jobs=jobs)
    if not Path(cfg.dataset_path).is_dir():
        raise ConfigError(f"dataset directory not found: {cfg.dataset_path}")
    if cfg.dataset_kind == "ims":
        fs = cfg.sample_rate or datasets.IMS_SAMPLE_RATE
        return datasets.read_ims(cfg.dataset_path, cfg.channel, fs, jobs=jobs)
    fs = cfg.sample_rate or datasets.XJTU_SAMPLE_RATE
    return datasets.read_xjtu(cfg.dataset_path, cfg.axis, fs, jobs=jobs)


def pick_file(run: datasets.RunToFailureRun, file_id: int):
    try:
        sig = run.signal(file_id)
    except KeyError:
        raise ConfigError(f"file index {file_id} is not in the run ({run.file_ids[0]}..{run.file_ids[-1]})") from None
    if sig is None:
        raise datasets.FormatError(f"file {file_id} could not be read")
    return sig


def resolve_band(cfg: PipelineConfig, run, jobs: int = 1) -> Band:
    if cfg.band is not None:
        return cfg.band.validate(run.sample_rate)
    if cfg.reference_file is None:
        raise ConfigError("band = auto needs [pipeline] reference_file")
    _, best = kurtogram.fast_kurtogram(pick_file(run, cfg.reference_file), cfg.max_level, jobs=jobs)
    return best.band


def compute_series(cfg: PipelineConfig, run, jobs: int = 1) -> tuple[HiSeries, Band]:
    band = resolve_band(cfg, run, jobs)
    series = hi_series(run.files, band, cfg.index, cfg.tau, jobs=jobs, name=cfg.index_name)
    if not np.any(np.isfinite(series.value)):
        raise datasets.EmptyRunError("no file produced a finite health index")
    return series, band


def trend(series: HiSeries) -> float:
    ok = np.isfinite(series.value)
    if ok.sum() < 3:
        return math.nan
    return float(spearmanr(series.file_index[ok], series.value[ok]).statistic)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_analyze(cfg: PipelineConfig, out: Path, jobs: int = 1) -> HiSeries:
    run = load_run(cfg, jobs)
    series, band = compute_series(cfg, run, jobs)
    rows = [["file_index", "value"]] + [[fmt(int(i)), fmt(v)] for i, v in zip(series.file_index, series.value)]
    _write_csv(out / "hi_series.csv", rows)
    finite = series.value[np.isfinite(series.value)]
    summary = [
        f"index = {series.index_name}",
        f"band_hz = {fmt(band.low)}, {fmt(band.high)}",
        f"files = {len(series)}",
        f"gaps = {int(series.gaps.sum())}",
        f"min = {fmt(finite.min())}",
        f"max = {fmt(finite.max())}",
        f"spearman_trend = {fmt(trend(series))}",
    ]
    summary += [f"skipped: {w}" for w in run.warnings]
    summary += [f"gap {fid}: {msg}" for fid, msg in sorted(series.errors.items())]
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    return series


def _ffot(cfg: PipelineConfig, series: HiSeries):
    baseline = detect.fit_baseline(series, cfg.baseline_points(len(series)), mc_runs=cfg.lilliefors_runs, seed=cfg.seed)
    return baseline, detect.detect_ffot(series, baseline, cfg.run_length)


def cmd_ffot(cfg: PipelineConfig, out: Path, jobs: int = 1) -> detect.FfotResult:
    run = load_run(cfg, jobs)
    series, band = compute_series(cfg, run, jobs)
    baseline, res = _ffot(cfg, series)
    if not baseline.lower <= baseline.mean <= baseline.upper:
        raise InvariantError("baseline thresholds do not bracket the mean")
    rows = [
        ["key", "value"],
        ["index", series.index_name],
        ["band_low_hz", fmt(band.low)],
        ["band_high_hz", fmt(band.high)],
        ["baseline_points", fmt(baseline.n)],
        ["baseline_mean", fmt(baseline.mean)],
        ["baseline_std", fmt(baseline.std)],
        ["upper_threshold", fmt(baseline.upper)],
        ["lower_threshold", fmt(baseline.lower)],
        ["lilliefors_statistic", fmt(baseline.lilliefors_statistic)],
        ["lilliefors_critical", fmt(baseline.lilliefors_critical)],
        ["lilliefors_normal", fmt(baseline.lilliefors_pass)],
        ["run_length", fmt(cfg.run_length)],
        ["ffot", fmt(res.ffot_index)],
    ]
    _write_csv(out / "ffot.csv", rows)
    return res


def stage_report(cfg: PipelineConfig, series: HiSeries, jobs: int = 1) -> iforest.StageReport:
    ok = np.isfinite(series.value)
    values = series.value[ok]
    ids = series.file_index[ok]
    feats = iforest.windowed_features(values, cfg.forest.window) if cfg.forest_features == "windowed" else values[:, None]
    forest = iforest.fit(feats, cfg.forest, jobs=jobs)
    scores = forest.score_samples(feats)
    n_base = int(np.sum(ok[: cfg.baseline_points(len(series))]))
    return iforest.segment_stages(scores, cfg.forest, baseline_count=max(1, n_base), file_index=ids)


def cmd_stages(cfg: PipelineConfig, out: Path, jobs: int = 1) -> iforest.StageReport:
    run = load_run(cfg, jobs)
    series, _ = compute_series(cfg, run, jobs)
    rep = stage_report(cfg, series, jobs)
    bounds = list(rep.stage_boundaries)
    if any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise InvariantError("stage boundaries are not strictly increasing")
    ok = np.isfinite(series.value)
    score = np.full(len(series), math.nan)
    flag = np.zeros(len(series), dtype=bool)
    score[ok], flag[ok] = rep.scores, rep.outlier_flags
    rows = [["file_index", "value", "score", "outlier", "stage"]]
    for i, v, s, f in zip(series.file_index, series.value, score, flag):
        stage = 1 + sum(1 for b in bounds if b <= i)
        rows.append([fmt(int(i)), fmt(v), fmt(s), fmt(bool(f)), fmt(stage)])
    _write_csv(out / "stages.csv", rows)
    summary = [["stage", "start_file_index"], ["1", fmt(int(series.file_index[0]))]]
    summary += [[fmt(k + 2), fmt(b)] for k, b in enumerate(bounds)]
    summary.append(["threshold", fmt(rep.threshold)])
    _write_csv(out / "stage_boundaries.csv", summary)
    return rep


def cmd_kurtogram(cfg: PipelineConfig, out: Path, file_index: int | None, jobs: int = 1):
    run = load_run(cfg, jobs)
    fid = cfg.reference_file if file_index is None else file_index
    if fid is None:
        raise ConfigError("kurtogram needs --file or [pipeline] reference_file")
    sig = pick_file(run, fid)
    cells, best = kurtogram.fast_kurtogram(sig, cfg.max_level, jobs=jobs)
    kurtogram.write_grid_csv(cells, out / "kurtogram.csv")
    rows = [
        ["key", "value"],
        ["file_index", fmt(fid)],
        ["level", fmt(best.level)],
        ["band_low_hz", fmt(best.low)],
        ["band_high_hz", fmt(best.high)],
        ["center_hz", fmt(best.center)],
        ["bandwidth_hz", fmt(best.bandwidth)],
        ["sk", fmt(best.sk_value)],
    ]
    _write_csv(out / "kurtogram_best.csv", rows)
    report = None
    if cfg.fault_freqs:
        report = kurtogram.diagnose(sig, best.band, cfg.fault_freqs, n_harmonics=cfg.n_harmonics)
        drows = [["target_hz", "order", "found_hz", "amplitude"]]
        drows += [[fmt(m.target), fmt(m.order), fmt(m.found), fmt(m.amplitude)] for m in report.matches]
        _write_csv(out / "diagnosis.csv", drows)
    return best, report


def cmd_attributes(measures, trials: int, seed: int, out: Path, oriented=False, quantifier="forall", jobs=1):
    known = attr.builtin_measures()
    unknown = [m for m in measures if m not in known]
    if unknown:
        raise ConfigError(f"unknown measures {unknown}; choose from {sorted(known)}")
    table = attr.attribute_table([known[m] for m in measures], trials, seed, oriented, quantifier, jobs)
    _write_csv(out / "attributes.csv", table.csv_rows())
    (out / "attributes.txt").write_text(table.render_text(), encoding="utf-8")
    return table


def cmd_synth(cfg: PipelineConfig, out: Path, jobs: int = 1) -> list[Path]:
    run = datasets.synth_run(cfg.synth, jobs=jobs)
    return datasets.export_xjtu(run, out / "run")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="global seed (overrides SPARSEHM_SEED and the config)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads; outputs do not depend on it")

    p = argparse.ArgumentParser(prog="sparsehm", description="Sparsity-measure health indexes for bearing runs.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="health-index series and summary")
    a = sub.add_parser("attributes", parents=[common], help="sparse-attribute verdict table")
    a.add_argument("--measures", default="SI,SNE", help="comma list from SI,SNE,GI,SK,LPLQ,PQ; empty for none")
    a.add_argument("--trials", type=int, default=10_000)
    a.add_argument("--oriented", action="store_true", help="flip LowerIsSparser measures before comparing")
    a.add_argument("--quantifier", choices=("forall", "exists"), default="forall")
    sub.add_parser("ffot", parents=[common], help="first fault occurrence time")
    sub.add_parser("stages", parents=[common], help="isolation-forest degradation stages")
    k = sub.add_parser("kurtogram", parents=[common], help="kurtogram grid of one file")
    k.add_argument("--file", type=int, dest="file_index", help="file index (default: [pipeline] reference_file)")
    sub.add_parser("synth", parents=[common], help="write a synthetic run in XJTU-SY layout")
    return p


def _dispatch(args) -> None:
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    out = Path(args.out)
    cfg = load_config(args.config, args.seed)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "attributes":
        measures = [m.strip().upper() for m in args.measures.split(",") if m.strip()]
        cmd_attributes(measures, args.trials, cfg.seed, out, args.oriented, args.quantifier, args.jobs)
    elif args.command == "analyze":
        cmd_analyze(cfg, out, args.jobs)
    elif args.command == "ffot":
        cmd_ffot(cfg, out, args.jobs)
    elif args.command == "stages":
        cmd_stages(cfg, out, args.jobs)
    elif args.command == "kurtogram":
        cmd_kurtogram(cfg, out, args.file_index, args.jobs)
    elif args.command == "synth":
        cmd_synth(cfg, out, args.jobs)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        _dispatch(args)
    except (ConfigError, ParameterError, FileNotFoundError) as exc:
        print(f"sparsehm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"sparsehm: internal invariant breached: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (SparsehmError, OSError) as exc:
        print(f"sparsehm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
