"""Monte Carlo campaigns: sweep SNR, decode seeded instances, emit metrics.

Campaigns are reproducible from ``(config, seed)``: every trial derives its
own child seed from the campaign seed and the (snr index, trial index) pair,
so adding grid points never reshuffles existing trials and trial order is
irrelevant.  The CSV output is byte-stable except for the trailing timing
column group.

Decoder specification grammar (the ``decoder`` config field)::

    mrc | zf | mmse | ml
    sd[:strategy=bfs|dfs|bestfs][,j=J]
    plsd[:threads=T][,batch=B]
    psd[:workers=W][,balancing=static|dynamic][,j=J]
    kbest:k=K
    sdkbest:k=K[,workers=W][,eps=E]

Key=value pairs may appear in any order; the first positional token of
``sd`` may be a bare strategy name (``sd:bestfs``).
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .audit import TraceRecorder, dump_trace
from .kbest import KbestConfig, kbest_decode, sd_kbest_decode
from .linalg import preprocess
from .linear import LinearKind, linear_decode
from .model import generate_instance, make_constellation
from .parallel import PsdConfig, pl_sd_decode, psd_decode
from .sphere import DetectionReport, Strategy, ml_bruteforce, sd_decode

__all__ = [
    "ConfigError",
    "CampaignConfig",
    "MetricRow",
    "CSV_SCHEMA_TAG",
    "run_campaign",
    "compare_report",
    "write_csv",
    "read_csv",
    "parse_snr_grid",
]

CSV_SCHEMA_TAG = "mimodec-metrics v1"

_CSV_HEADER = ("snr_db,decoder,ser,ber,erasure_rate,visited_mean,visited_max,"
               "pd_calcs_mean,pd_calcs_max,trials,time_mean_s")


class ConfigError(ValueError):
    """Invalid campaign configuration; message names the offending field."""


@dataclass
class MetricRow:
    snr_db: float
    decoder: str
    ser: float
    ber: float
    erasure_rate: float
    visited_mean: float
    visited_max: int
    pd_calcs_mean: float
    pd_calcs_max: int
    trials: int
    time_mean_s: float


@dataclass
class CampaignConfig:
    m: int
    n: int
    mod: str
    snr_grid: tuple
    trials: int
    decoder: str
    radius: str = "formula"
    threads: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    trace: Optional[str] = None
    erasure: str = "errors"
    trial_parallel: bool = False

    def validate(self) -> None:
        if self.m < 1:
            raise ConfigError(f"tx: must be >= 1, got {self.m}")
        if self.n < self.m:
            raise ConfigError(f"rx: must be >= tx, got rx={self.n} < tx={self.m}")
        if self.mod.lower() not in ("bpsk", "qpsk", "qam16", "qam64"):
            raise ConfigError(f"mod: unknown modulation {self.mod!r}")
        if not self.snr_grid:
            raise ConfigError("snr: grid must be non-empty")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.erasure not in ("errors", "mmse-fallback"):
            raise ConfigError(f"erasure: must be 'errors' or 'mmse-fallback', "
                              f"got {self.erasure!r}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads}")
        try:
            _resolve_radius_field(self.radius)
        except ValueError as exc:
            raise ConfigError(f"radius: {exc}") from None
        build_decoder(self)  # raises ConfigError on a malformed spec


def _resolve_radius_field(value: str):
    name = str(value).lower()
    if name in ("formula", "inf", "infinite", "infinity"):
        return name
    radius = float(value)  # may raise ValueError
    if radius <= 0:
        raise ValueError(f"explicit squared radius must be positive, got {radius}")
    return radius


def parse_snr_grid(text: str) -> tuple:
    """Parse ``a:b:step`` (inclusive) or a single dB value."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) == 3:
            a, b, step = (float(p) for p in parts)
            if step <= 0 or b < a:
                raise ValueError
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            return tuple(a + i * step for i in range(count))
    except ValueError:
        pass
    raise ConfigError(f"snr: expected 'a:b:step' or a single value, got {text!r}")


def _parse_params(body: str, spec: str) -> dict:
    params = {}
    if not body:
        return params
    for token in body.split(","):
        if "=" not in token:
            raise ConfigError(f"decoder: bad parameter {token!r} in {spec!r}")
        key, value = token.split("=", 1)
        params[key.strip().lower()] = value.strip().lower()
    return params


def _int_param(params, key, spec, default=None):
    if key not in params:
        if default is None:
            raise ConfigError(f"decoder: {spec!r} requires {key}=")
        return default
    try:
        return int(params.pop(key))
    except ValueError:
        raise ConfigError(f"decoder: {key} must be an integer in {spec!r}") from None


class _Decoder:
    """A ready-to-run decoder built from a spec string."""

    def __init__(self, label, family, runner, parallel_trials_ok):
        self.label = label
        self.family = family
        self._runner = runner
        self.parallel_trials_ok = parallel_trials_ok

    def run(self, instance, trace=None) -> DetectionReport:
        return self._runner(instance, trace)


def _wrap_linear(kind: LinearKind):
    def run(instance, trace=None):
        t0 = time.perf_counter()
        decoded = linear_decode(instance, kind)
        elapsed = time.perf_counter() - t0
        resid = instance.y - instance.h @ instance.constellation.points[decoded]
        return DetectionReport(
            decoded=decoded,
            dist=float(np.vdot(resid, resid).real),
            visited_nodes=0,
            pd_calcs=0,
            elapsed_s=elapsed,
            final_radius_sq=math.nan,
        )
    return run


def build_decoder(config: CampaignConfig) -> _Decoder:
    """Translate a decoder spec string into a runnable decoder."""
    spec = config.decoder.strip()
    name, _, body = spec.partition(":")
    name = name.strip().lower()
    if name == "sd" and body:
        tokens = body.split(",")
        if tokens and "=" not in tokens[0]:  # allow the bare form sd:bestfs
            tokens[0] = "strategy=" + tokens[0]
            body = ",".join(tokens)
    params = _parse_params(body, spec)
    radius = _resolve_radius_field(config.radius)
    cap = config.threads

    def cap_threads(value: int) -> int:
        return min(value, cap) if cap is not None else value

    def default_threads(key: str) -> int:
        if key in params:
            return _int_param(params, key, spec)
        if cap is not None:
            return cap
        raise ConfigError(f"decoder: {spec!r} needs {key}= or --threads")

    if name in ("mrc", "zf", "mmse"):
        if params:
            raise ConfigError(f"decoder: {name} takes no parameters")
        return _Decoder(name, "linear", _wrap_linear(LinearKind.from_name(name)), True)

    if name == "ml":
        if params:
            raise ConfigError(f"decoder: ml takes no parameters")

        def run_ml(instance, trace=None):
            return ml_bruteforce(preprocess(instance, "infinite"))
        return _Decoder("ml", "ml", run_ml, True)

    if name == "sd":
        strategy = params.pop("strategy", "bestfs")
        try:
            strat = Strategy.from_name(strategy)
        except ValueError as exc:
            raise ConfigError(f"decoder: {exc}") from None
        j = _int_param(params, "j", spec, default=1)
        if params:
            raise ConfigError(f"decoder: unknown parameters {sorted(params)} in {spec!r}")
        label = f"sd:{strat.value},j={j}"

        def run_sd(instance, trace=None):
            return sd_decode(preprocess(instance, radius), strat, j=j, trace=trace)
        return _Decoder(label, "sd", run_sd, False)

    if name == "plsd":
        threads = cap_threads(default_threads("threads"))
        batch = _int_param(params, "batch", spec, default=20)
        if params:
            raise ConfigError(f"decoder: unknown parameters {sorted(params)} in {spec!r}")
        label = f"plsd:threads={threads},batch={batch}"

        def run_plsd(instance, trace=None):
            return pl_sd_decode(preprocess(instance, radius), threads,
                                batch_size=batch, trace=trace)
        return _Decoder(label, "plsd", run_plsd, False)

    if name == "psd":
        workers = cap_threads(default_threads("workers"))
        balancing = params.pop("balancing", "dynamic")
        j = _int_param(params, "j", spec, default=1)
        if params:
            raise ConfigError(f"decoder: unknown parameters {sorted(params)} in {spec!r}")
        try:
            psd_config = PsdConfig(n_workers=workers, balancing=balancing, j=j)
        except ValueError as exc:
            raise ConfigError(f"decoder: {exc}") from None
        label = f"psd:workers={workers},balancing={balancing}"

        def run_psd(instance, trace=None):
            return psd_decode(preprocess(instance, radius), psd_config, trace=trace)
        return _Decoder(label, "psd", run_psd, False)

    if name == "kbest":
        k = _int_param(params, "k", spec)
        if params:
            raise ConfigError(f"decoder: unknown parameters {sorted(params)} in {spec!r}")
        label = f"kbest:k={k}"

        def run_kbest(instance, trace=None):
            return kbest_decode(preprocess(instance, radius), k, trace=trace)
        return _Decoder(label, "kbest", run_kbest, True)

    if name == "sdkbest":
        k = _int_param(params, "k", spec)
        workers = cap_threads(default_threads("workers"))
        eps = float(params.pop("eps", 0.05))
        if params:
            raise ConfigError(f"decoder: unknown parameters {sorted(params)} in {spec!r}")
        try:
            kconf = KbestConfig(k=k, closeness_eps=eps, n_workers=workers)
        except ValueError as exc:
            raise ConfigError(f"decoder: {exc}") from None
        label = f"sdkbest:k={k},workers={workers},eps={eps:g}"

        def run_sdkbest(instance, trace=None):
            return sd_kbest_decode(preprocess(instance, radius), kconf, trace=trace)
        return _Decoder(label, "sdkbest", run_sdkbest, False)

    raise ConfigError(f"decoder: unknown decoder {name!r}")


def _trial_seed(seed: int, snr_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(snr_index, trial)))


@dataclass
class _CellStats:
    sym_errors: int = 0
    bit_errors: int = 0
    erasures: int = 0
    visited: list = field(default_factory=list)
    pd_calcs: list = field(default_factory=list)
    times: list = field(default_factory=list)


def run_campaign(config: CampaignConfig, quiet: bool = False) -> list[MetricRow]:
    """Run the whole SNR sweep; returns one MetricRow per grid point.

    Writes the CSV when ``config.out`` is set, dumps a trace of the first
    trial per grid point when ``config.trace`` is set, and prints a summary
    table unless ``quiet``.
    """
    config.validate()
    decoder = build_decoder(config)
    if config.trial_parallel and not decoder.parallel_trials_ok:
        raise ConfigError("trial_parallel: only linear, ml, and kbest decoders "
                          "may run trials in parallel")
    constellation = make_constellation(config.mod)
    labels = constellation.label_matrix()
    bits = constellation.bits_per_symbol
    recorder = TraceRecorder() if config.trace else None
    rows = []
    for si, snr in enumerate(config.snr_grid):
        stats = _CellStats()

        def one_trial(t, _si=si, _snr=snr):
            rng = _trial_seed(config.seed, _si, t)
            inst = generate_instance(config.m, config.n, constellation, _snr, rng)
            trace = recorder if (recorder is not None and t == 0) else None
            rep = decoder.run(inst, trace=trace)
            return inst, rep

        results = []
        if config.trial_parallel:
            workers = config.threads or 4
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one_trial, range(config.trials)))
        else:
            results = (one_trial(t) for t in range(config.trials))

        for inst, rep in results:
            decoded = rep.decoded
            if decoded is None:
                stats.erasures += 1
                if config.erasure == "mmse-fallback":
                    decoded = linear_decode(inst, LinearKind.MMSE)
                else:
                    stats.sym_errors += config.m
                    stats.bit_errors += config.m * bits
            if decoded is not None:
                wrong = decoded != inst.s_true
                stats.sym_errors += int(np.count_nonzero(wrong))
                stats.bit_errors += int((labels[decoded] != labels[inst.s_true]).sum())
            stats.visited.append(rep.visited_nodes)
            stats.pd_calcs.append(rep.pd_calcs)
            stats.times.append(rep.elapsed_s)

        n_sym = config.trials * config.m
        rows.append(MetricRow(
            snr_db=float(snr),
            decoder=decoder.label,
            ser=stats.sym_errors / n_sym,
            ber=stats.bit_errors / (n_sym * bits),
            erasure_rate=stats.erasures / config.trials,
            visited_mean=float(np.mean(stats.visited)),
            visited_max=int(np.max(stats.visited)),
            pd_calcs_mean=float(np.mean(stats.pd_calcs)),
            pd_calcs_max=int(np.max(stats.pd_calcs)),
            trials=config.trials,
            time_mean_s=float(np.mean(stats.times)),
        ))
    if decoder.family in ("ml", "sd", "psd", "plsd"):
        _flag_nonmonotone_ser(rows, config)
    if config.out:
        write_csv(rows, config.out, config)
    if recorder is not None:
        dump_trace(recorder.events(), config.trace)
    if not quiet:
        print(format_rows(rows))
    return rows


def _flag_nonmonotone_ser(rows, config) -> None:
    """Warn (never fail) when an exact decoder's SER rises with SNR beyond
    what binomial noise at 95% confidence explains."""
    n_sym = config.trials * config.m
    ordered = sorted(rows, key=lambda r: r.snr_db)
    for lo, hi in zip(ordered, ordered[1:]):
        slack = 1.96 * math.sqrt(max(lo.ser * (1 - lo.ser), 1e-12) / n_sym)
        if hi.ser > lo.ser + slack:
            warnings.warn(
                f"SER rose from {lo.ser:.3e} at {lo.snr_db:g} dB to "
                f"{hi.ser:.3e} at {hi.snr_db:g} dB for {hi.decoder} "
                f"(beyond 95% binomial slack); check the radius policy",
                stacklevel=2)


def format_rows(rows) -> str:
    header = ["snr_db", "decoder", "ser", "ber", "eras", "visited", "pd_calcs", "time_s"]
    lines = ["  ".join(f"{h:>12}" for h in header)]
    for r in rows:
        lines.append("  ".join([
            f"{r.snr_db:>12g}", f"{r.decoder:>12.12}", f"{r.ser:>12.3e}",
            f"{r.ber:>12.3e}", f"{r.erasure_rate:>12.3f}",
            f"{r.visited_mean:>12.1f}", f"{r.pd_calcs_mean:>12.1f}",
            f"{r.time_mean_s:>12.2e}",
        ]))
    return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(rows, path, config: Optional[CampaignConfig] = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA_TAG}\n")
        if config is not None:
            fh.write(f"# grid tx={config.m} rx={config.n} mod={config.mod.lower()} "
                     f"seed={config.seed} radius={config.radius}\n")
        fh.write(_CSV_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")  # labels may contain commas
        for r in rows:
            writer.writerow([_fmt(getattr(r, f.name)) for f in fields(MetricRow)])


def read_csv(path):
    """Returns (meta dict, list[MetricRow])."""
    meta = {}
    rows = []
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != f"# {CSV_SCHEMA_TAG}":
        raise ConfigError(f"{path}: not a {CSV_SCHEMA_TAG} file")
    body_start = 1
    for ln in lines[1:]:
        if ln.startswith("# grid "):
            for token in ln[len("# grid "):].split():
                key, _, value = token.partition("=")
                meta[key] = value
            body_start += 1
        else:
            break
    if lines[body_start] != _CSV_HEADER:
        raise ConfigError(f"{path}: unexpected header")
    for parts in csv.reader(lines[body_start + 1:]):
        rows.append(MetricRow(
            snr_db=float(parts[0]), decoder=parts[1], ser=float(parts[2]),
            ber=float(parts[3]), erasure_rate=float(parts[4]),
            visited_mean=float(parts[5]), visited_max=int(parts[6]),
            pd_calcs_mean=float(parts[7]), pd_calcs_max=int(parts[8]),
            trials=int(parts[9]), time_mean_s=float(parts[10])))
    return meta, rows


_COMPARE_METRICS = ("ser", "ber", "erasure_rate", "visited_mean",
                    "pd_calcs_mean", "time_mean_s")


@dataclass
class CompareReport:
    label_a: str
    label_b: str
    snr_grid: tuple
    deltas: dict          # metric -> list of (value_a - value_b) per snr
    dominance: dict       # metric -> "A" | "B" | "tie" | "mixed"

    def __str__(self):
        lines = [f"A = {self.label_a}", f"B = {self.label_b}"]
        head = ["metric"] + [f"{s:g}dB" for s in self.snr_grid] + ["verdict"]
        lines.append("  ".join(f"{h:>12}" for h in head))
        for metric in _COMPARE_METRICS:
            cells = [f"{d:+.3e}" for d in self.deltas[metric]]
            lines.append("  ".join(
                f"{c:>12}" for c in [metric, *cells, self.dominance[metric]]))
        return "\n".join(lines)


def compare_report(csv_a, csv_b) -> CompareReport:
    """Per-SNR deltas (A minus B) and lower-is-better dominance verdicts.

    Both files must describe the same (tx, rx, mod) system on the same grid.
    """
    meta_a, rows_a = read_csv(csv_a)
    meta_b, rows_b = read_csv(csv_b)
    for key in ("tx", "rx", "mod"):
        if meta_a.get(key) != meta_b.get(key):
            raise ConfigError(
                f"grid mismatch: {key}={meta_a.get(key)} vs {meta_b.get(key)}")
    grid_a = tuple(r.snr_db for r in rows_a)
    grid_b = tuple(r.snr_db for r in rows_b)
    if grid_a != grid_b:
        raise ConfigError(f"grid mismatch: snr {grid_a} vs {grid_b}")
    deltas = {}
    dominance = {}
    for metric in _COMPARE_METRICS:
        dd = [getattr(a, metric) - getattr(b, metric)
              for a, b in zip(rows_a, rows_b)]
        deltas[metric] = dd
        if all(d == 0 for d in dd):
            dominance[metric] = "tie"
        elif all(d <= 0 for d in dd):
            dominance[metric] = "A"
        elif all(d >= 0 for d in dd):
            dominance[metric] = "B"
        else:
            dominance[metric] = "mixed"
    return CompareReport(
        label_a=rows_a[0].decoder if rows_a else "?",
        label_b=rows_b[0].decoder if rows_b else "?",
        snr_grid=grid_a,
        deltas=deltas,
        dominance=dominance,
    )
