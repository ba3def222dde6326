"""Massive-MIMO signal detection.

Exact sphere decoding with pluggable exploration strategies, grouped
branching and incremental metric evaluation; shared-pool and master/worker
parallel variants with a dynamically balanced work distribution; the
fixed-complexity K-best detector and the hybrid SD/K-best decoder; linear
baselines; and a reproducible Monte Carlo campaign harness.
"""

from .audit import (AuditVerdict, TraceEvent, TraceRecorder, dump_trace,
                    load_trace, scratch_pd, verify_trace)
from .harness import (CampaignConfig, CompareReport, ConfigError, MetricRow,
                      compare_report, read_csv, run_campaign, write_csv)
from .kbest import KbestConfig, kbest_decode, sd_kbest_decode
from .linalg import (PreprocessedProblem, QrFactors, RankDeficiencyError,
                     batch_evaluate, preprocess, qr_decompose)
from .linear import LinearKind, linear_decode, linear_estimate
from .model import (Constellation, MimoInstance, NoiseModel,
                    generate_instance, initial_radius_sq, make_constellation,
                    noise_variance)
from .parallel import (PsdConfig, SharedRadius, WorkerState, pl_sd_decode,
                       psd_decode)
from .sphere import (CapExceededError, DetectionReport, SearchNode, Strategy,
                     WorkPool, branch, evaluate_incremental, make_root,
                     ml_bruteforce, sd_decode)

__version__ = "0.1.0"

__all__ = [
    "AuditVerdict", "TraceEvent", "TraceRecorder", "dump_trace", "load_trace",
    "scratch_pd", "verify_trace",
    "CampaignConfig", "CompareReport", "ConfigError", "MetricRow",
    "compare_report", "read_csv", "run_campaign", "write_csv",
    "KbestConfig", "kbest_decode", "sd_kbest_decode",
    "PreprocessedProblem", "QrFactors", "RankDeficiencyError",
    "batch_evaluate", "preprocess", "qr_decompose",
    "LinearKind", "linear_decode", "linear_estimate",
    "Constellation", "MimoInstance", "NoiseModel", "generate_instance",
    "initial_radius_sq", "make_constellation", "noise_variance",
    "PsdConfig", "SharedRadius", "WorkerState", "pl_sd_decode", "psd_decode",
    "CapExceededError", "DetectionReport", "SearchNode", "Strategy",
    "WorkPool", "branch", "evaluate_incremental", "make_root",
    "ml_bruteforce", "sd_decode",
]
