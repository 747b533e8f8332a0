"""Monte Carlo campaign driver.

A campaign is a grid of (algorithm, antenna pair, sample size, SNR) points,
each run for a number of independent trials.  Every trial derives its own
64-bit seed from the base seed, the grid point and the trial index, so
results are reproducible row by row regardless of execution order or worker
count.  Results go to a CSV (one row per trial) plus a summary CSV with
per-point means and standard errors.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adaptive import adaptive_init, adaptive_step
from .metrics import resolve_ambiguity, ser, sinr
from .separators import SeparatorConfig, run_gcma, run_hgcma, run_lscma
from .signals import cm_cost, make_constellation, make_scenario, scenario_sources, observe
from .whitening import fit_whitener

__all__ = [
    "ALGORITHMS",
    "DATA_COLUMNS",
    "ExperimentConfig",
    "TrialPoint",
    "TrialMetrics",
    "load_config",
    "run_trial",
    "run_campaign",
    "summarize",
    "summary_path_for",
]

ALGORITHMS = {
    "gcma": (),
    "hgcma": ("exact", "semi", "linear"),
    "lscma": (),
    "adaptive-hgcma": ("sweep", "single", "two"),
}

DATA_COLUMNS = [
    "algorithm",
    "variant",
    "M",
    "N",
    "K",
    "snr_db",
    "trial",
    "sinr_db",
    "ser",
    "final_cost",
    "rotations",
    "wall_ms",
    "error",
]

SUMMARY_COLUMNS = [
    "algorithm",
    "variant",
    "M",
    "N",
    "K",
    "snr_db",
    "trials",
    "failed",
    "infinite",
    "mean_sinr_db",
    "se_sinr_db",
    "mean_ser",
    "se_ser",
    "mean_final_cost",
    "mean_rotations",
]


@dataclass(frozen=True)
class TrialPoint:
    """One grid point of a campaign."""

    algorithm: str
    variant: str
    M: int
    N: int
    K: int
    snr_db: float
    constellation: str
    sweeps: int
    steps: int


@dataclass
class TrialMetrics:
    sinr_db: float
    sinr_outputs_db: tuple
    ser: float
    final_cost: float
    rotations: int
    wall_ms: float
    error: Optional[str] = None
    sinr_trace_db: Optional[np.ndarray] = None  # adaptive runs only


@dataclass
class ExperimentConfig:
    algorithms: list
    M: list
    N: list
    K: list
    snr_db: list
    constellation: str = "psk8"
    sweeps: int = 10
    trials: int = 100
    seed: int = 0
    window: Optional[int] = None  # adaptive window; defaults to the grid K
    steps: int = 1000  # adaptive stream length

    def __post_init__(self):
        for name in ("algorithms", "M", "N", "K", "snr_db"):
            val = getattr(self, name)
            if not isinstance(val, (list, tuple)) or len(val) == 0:
                raise ValueError(f"config field {name!r} must be a nonempty list")
        if len(self.M) != len(self.N):
            raise ValueError("M and N lists must pair up (same length)")
        for m, n in zip(self.M, self.N):
            if n < m:
                raise ValueError(f"need N >= M, got M={m}, N={n}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        make_constellation(self.constellation)  # validates the tag
        for spec in self.algorithms:
            parse_algorithm(spec)

    def points(self):
        """Grid points in deterministic order.

        Adaptive runs use the grid K as their window length; when ``window``
        is set it replaces K for them (duplicate points are dropped).
        """
        out = []
        seen = set()
        for spec in self.algorithms:
            algorithm, variant = parse_algorithm(spec)
            for m, n in zip(self.M, self.N):
                for k in self.K:
                    eff_k = k
                    if algorithm == "adaptive-hgcma" and self.window is not None:
                        eff_k = self.window
                    for snr in self.snr_db:
                        out.append(
                            TrialPoint(
                                algorithm=algorithm,
                                variant=variant,
                                M=m,
                                N=n,
                                K=eff_k,
                                snr_db=float(snr),
                                constellation=self.constellation,
                                sweeps=self.sweeps,
                                steps=self.steps,
                            )
                        )
        deduped = []
        for p in out:
            if p not in seen:
                seen.add(p)
                deduped.append(p)
        return deduped


def parse_algorithm(spec):
    """Split 'name' or 'name:variant' and validate against ALGORITHMS."""
    name, _, variant = spec.partition(":")
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}")
    allowed = ALGORITHMS[name]
    if not variant:
        if name == "hgcma":
            variant = "linear"
        elif name == "adaptive-hgcma":
            variant = "two"
    if allowed and variant not in allowed:
        raise ValueError(f"unknown variant {variant!r} for {name}")
    if not allowed and variant:
        raise ValueError(f"algorithm {name} takes no variant")
    return name, variant


def load_config(path, trials=None, seed=None):
    """Load a flat JSON config file; optional trial/seed overrides."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in ("M", "N", "K", "snr_db", "algorithms"):
        if name in raw and not isinstance(raw[name], list):
            raw[name] = [raw[name]]
    cfg = ExperimentConfig(**raw)
    if trials is not None:
        cfg.trials = trials
    if seed is not None:
        cfg.seed = seed
    cfg.__post_init__()
    return cfg


def trial_seed(base_seed, point, trial):
    """Stable 64-bit seed: base_seed XOR sha256(point, trial)."""
    key = "|".join(
        [
            point.algorithm,
            point.variant,
            str(point.M),
            str(point.N),
            str(point.K),
            repr(point.snr_db),
            point.constellation,
            str(point.sweeps),
            str(point.steps),
            str(trial),
        ]
    )
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return (int.from_bytes(digest[:8], "little") ^ (base_seed & (2**64 - 1))) % 2**64


def _to_db(x):
    if math.isinf(x):
        return math.inf
    if x <= 0.0:
        return -math.inf
    return 10.0 * math.log10(x)


def _run_batch_trial(point, seed, record_trace):
    scenario = make_scenario(
        point.M, point.N, point.K, point.snr_db, point.constellation, seed
    )
    S = scenario_sources(scenario)
    Y = observe(scenario, S)
    cfg = SeparatorConfig(sweeps=point.sweeps, record_trace=record_trace)
    start = time.perf_counter()
    if point.algorithm == "gcma":
        state = run_gcma(Y, point.M, cfg)
    elif point.algorithm == "hgcma":
        cfg.shear_variant = point.variant
        state = run_hgcma(Y, point.M, cfg)
    elif point.algorithm == "lscma":
        state = run_lscma(Y, point.M, iters=point.sweeps)
    else:
        raise ValueError(f"not a batch algorithm: {point.algorithm}")
    wall_ms = 1e3 * (time.perf_counter() - start)
    per, avg = sinr(state.W, scenario.A, scenario.noise_var)
    _, aligned = resolve_ambiguity(state.work, S)
    return TrialMetrics(
        sinr_db=_to_db(avg),
        sinr_outputs_db=tuple(_to_db(v) for v in per),
        ser=ser(aligned, S, scenario.constellation),
        final_cost=cm_cost(state.work),
        rotations=state.rotations,
        wall_ms=wall_ms,
    )


def _run_adaptive_trial(point, seed, record_trace):
    window = point.K  # for adaptive runs the grid K is the window length
    steps = point.steps
    if steps <= window:
        raise ValueError("steps must exceed the window length")
    scenario = make_scenario(
        point.M, point.N, window, point.snr_db, point.constellation, seed
    )
    S = scenario_sources(scenario, K=steps)
    Y = observe(scenario, S)
    if window < point.M:
        raise ValueError("window must be >= M to fit the warm-start whitener")
    if point.N > point.M:
        # rectangular systems are reduced to square by a fixed input whitener
        pre = fit_whitener(Y[:, :window], point.M).matrix
        X = pre @ Y
        W0 = None
    else:
        # square systems warm start the separator from the same whitener
        pre = np.eye(point.M, dtype=complex)
        X = Y
        W0 = fit_whitener(Y[:, :window], point.M).matrix
    state = adaptive_init(point.M, window, strategy=point.variant, W0=W0)
    outputs = np.empty((point.M, steps - window), dtype=complex)
    trace = [] if record_trace else None
    start = time.perf_counter()
    for t in range(steps):
        out = adaptive_step(state, X[:, t])
        if t >= window:
            outputs[:, t - window] = out
            if trace is not None:
                _, avg = sinr(state.W @ pre, scenario.A, scenario.noise_var)
                trace.append(_to_db(avg))
    wall_ms = 1e3 * (time.perf_counter() - start)
    W_eff = state.W @ pre
    per, avg = sinr(W_eff, scenario.A, scenario.noise_var)
    _, aligned = resolve_ambiguity(outputs, S[:, window:])
    return TrialMetrics(
        sinr_db=_to_db(avg),
        sinr_outputs_db=tuple(_to_db(v) for v in per),
        ser=ser(aligned, S[:, window:], scenario.constellation),
        final_cost=cm_cost(state.window),
        rotations=state.rotations,
        wall_ms=wall_ms,
        sinr_trace_db=np.array(trace) if trace is not None else None,
    )


def run_trial(point, trial, base_seed, record_trace=False):
    """Run one deterministic trial; algorithm failures become error rows."""
    seed = trial_seed(base_seed, point, trial)
    try:
        if point.algorithm == "adaptive-hgcma":
            return _run_adaptive_trial(point, seed, record_trace)
        return _run_batch_trial(point, seed, record_trace)
    except Exception as exc:  # failed trials must not poison the campaign
        return TrialMetrics(
            sinr_db=math.nan,
            sinr_outputs_db=(),
            ser=math.nan,
            final_cost=math.nan,
            rotations=0,
            wall_ms=0.0,
            error=type(exc).__name__,
        )


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.9g}"
    return str(x)


def _row_for(point, trial, metrics):
    return [
        point.algorithm,
        point.variant,
        str(point.M),
        str(point.N),
        str(point.K),
        _fmt(point.snr_db),
        str(trial),
        _fmt(metrics.sinr_db),
        _fmt(metrics.ser),
        _fmt(metrics.final_cost),
        str(metrics.rotations),
        f"{metrics.wall_ms:.3f}",
        metrics.error or "",
    ]


def _trial_job(args):
    point, trial, base_seed = args
    return run_trial(point, trial, base_seed)


def run_campaign(config, out_path, jobs=1):
    """Run the full grid and write the data CSV plus its summary CSV.

    Rows appear in deterministic (grid point, trial) order and are
    byte-identical across re-runs and worker counts, except for the wall_ms
    column.  Returns (data_path, summary_path).
    """
    tasks = [
        (point, trial, config.seed)
        for point in config.points()
        for trial in range(config.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_job, tasks, chunksize=8))
    else:
        results = [_trial_job(t) for t in tasks]
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATA_COLUMNS)
        for (point, trial, _), metrics in zip(tasks, results):
            writer.writerow(_row_for(point, trial, metrics))
    spath = summary_path_for(out_path)
    summarize(out_path, spath)
    return out_path, spath


def summary_path_for(data_path):
    base = str(data_path)
    if base.endswith(".csv"):
        base = base[:-4]
    return base + ".summary.csv"


def _mean_se(values):
    if not values:
        return math.nan, math.nan
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var / len(values))


def summarize(in_path, out_path):
    """Aggregate a data CSV into per-point means and standard errors.

    Failed trials (error column set) and infinite SINR values are counted
    separately and excluded from the means.
    """
    groups = {}
    with open(in_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in DATA_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{in_path}: missing columns {missing}")
        for row in reader:
            key = (
                row["algorithm"],
                row["variant"],
                int(row["M"]),
                int(row["N"]),
                int(row["K"]),
                float(row["snr_db"]),
            )
            groups.setdefault(key, []).append(row)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for key in sorted(groups):
            rows = groups[key]
            ok = [r for r in rows if not r["error"]]
            sinr_vals = [float(r["sinr_db"]) for r in ok if r["sinr_db"]]
            finite = [v for v in sinr_vals if math.isfinite(v)]
            n_inf = sum(1 for v in sinr_vals if math.isinf(v))
            ser_vals = [float(r["ser"]) for r in ok if r["ser"]]
            cost_vals = [float(r["final_cost"]) for r in ok if r["final_cost"]]
            rot_vals = [float(r["rotations"]) for r in ok]
            m_sinr, se_sinr = _mean_se(finite)
            m_ser, se_ser = _mean_se(ser_vals)
            m_cost, _ = _mean_se(cost_vals)
            m_rot, _ = _mean_se(rot_vals)
            writer.writerow(
                [
                    key[0],
                    key[1],
                    str(key[2]),
                    str(key[3]),
                    str(key[4]),
                    _fmt(key[5]),
                    str(len(rows)),
                    str(len(rows) - len(ok)),
                    str(n_inf),
                    _fmt(m_sinr),
                    _fmt(se_sinr),
                    _fmt(m_ser),
                    _fmt(se_ser),
                    _fmt(m_cost),
                    _fmt(m_rot),
                ]
            )
    return out_path
