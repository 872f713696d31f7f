"""Monte-Carlo experiment driver.

Sweeps the power-disparity ratio N*p_u_max/p_b_tot over a grid, runs many
independent network drops per ratio point, evaluates the requested schemes
under the requested utilities, and aggregates per-user rates into records
with 95% confidence intervals.

Determinism contract: given the same config and base seed the emitted CSV is
byte-identical regardless of how many worker processes are used.  Every
(ratio, utility, drop) work unit derives its randomness from
base_seed XOR drop_index alone, and aggregation walks units in a fixed
order, so scheduling cannot reorder any floating-point reduction.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import multiprocessing
import numpy as np

from .errors import ConfigurationError, InvalidParameterError
from .links import UtilityKind
from .overlap import DEFAULT_ALPHA_MIN, PulseOverlapProfile, default_profile
from .scenario import SystemParams, realize
from .schemes import SchemeConfig, SchemeKind, SchemeResult, run_scheme, compare_all

DEFAULT_RATIO_GRID = (0.0025, 0.005, 0.0125, 0.025)

CSV_HEADER = (
    "ratio,scheme,utility,mean_total,ci_total,mean_ul,ci_ul,mean_dl,ci_dl,"
    "mean_alpha,conv_frac"
)

_SEED_MASK = 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams = SystemParams()
    ratio_grid: tuple = DEFAULT_RATIO_GRID
    n_drops: int = 100
    base_seed: int = 12345
    utility_kinds: tuple = (UtilityKind.SUM_RATE, UtilityKind.SUM_LOG_RATE)
    schemes: tuple = tuple(SchemeKind)
    n_starts: int = 5
    output_dir: str = "."

    def __post_init__(self):
        grid = tuple(float(r) for r in self.ratio_grid)
        if len(grid) == 0:
            raise InvalidParameterError("ratio_grid must be non-empty")
        if any(r <= 0 for r in grid):
            raise InvalidParameterError("ratio_grid entries must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidParameterError("ratio_grid must be strictly ascending")
        object.__setattr__(self, "ratio_grid", grid)
        if int(self.n_drops) < 1:
            raise InvalidParameterError("n_drops must be >= 1")
        object.__setattr__(self, "n_drops", int(self.n_drops))
        if int(self.n_starts) < 1:
            raise InvalidParameterError("n_starts must be >= 1")
        object.__setattr__(self, "n_starts", int(self.n_starts))
        object.__setattr__(self, "base_seed", int(self.base_seed))
        kinds = tuple(self.utility_kinds)
        if not kinds or len(set(kinds)) != len(kinds):
            raise InvalidParameterError("utility_kinds must be non-empty and unique")
        object.__setattr__(self, "utility_kinds", kinds)
        schemes = tuple(self.schemes)
        if not schemes or len(set(schemes)) != len(schemes):
            raise InvalidParameterError("schemes must be non-empty and unique")
        object.__setattr__(self, "schemes", schemes)

    def p_u_max_for_ratio(self, ratio: float) -> float:
        return float(ratio) * self.params.p_b_tot / self.params.N


@dataclass
class SchemeDropStats:
    total: float
    ul: float
    dl: float
    mean_alpha: float
    utility: float
    converged: bool


@dataclass
class DropRecord:
    ratio: float
    utility_kind: UtilityKind
    drop_index: int
    seed: int
    stats: dict
    selected_alpha: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SweepRecord:
    ratio: float
    scheme: SchemeKind
    utility_kind: UtilityKind
    mean_total: float
    ci_total: float
    mean_ul: float
    ci_ul: float
    mean_dl: float
    ci_dl: float
    mean_alpha: float
    conv_frac: float
    n_drops: int


def _ci95(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(1.96 * np.std(values, ddof=1) / np.sqrt(values.size))


def _stats_from_result(res: SchemeResult, params: SystemParams) -> SchemeDropStats:
    denom = params.N * params.B
    return SchemeDropStats(
        total=res.per_user_total_rate_per_B,
        ul=float(np.sum(res.R_u) / denom),
        dl=float(np.sum(res.R_b) / denom),
        mean_alpha=res.mean_alpha,
        utility=res.utility,
        converged=res.converged,
    )


def _run_unit(cfg: ExperimentConfig, profile: PulseOverlapProfile, key) -> DropRecord:
    ratio_idx, util_idx, drop_idx = key
    ratio = cfg.ratio_grid[ratio_idx]
    kind = cfg.utility_kinds[util_idx]
    params = replace(cfg.params, p_u_max=cfg.p_u_max_for_ratio(ratio))
    seed = (cfg.base_seed ^ drop_idx) & _SEED_MASK
    net = realize(params, seed)

    stats = {}
    alphas = None
    if SchemeKind.ALPHA_DUPLEX_OPT in cfg.schemes:
        results = compare_all(net, profile, params, kind, cfg.n_starts)
        for res in results:
            stats[res.kind] = _stats_from_result(res, params)
            if res.kind is SchemeKind.ALPHA_DUPLEX_OPT:
                alphas = np.array(res.x.alpha, copy=True)
    else:
        for scheme in cfg.schemes:
            res = run_scheme(
                SchemeConfig(scheme, kind, cfg.n_starts), net, profile, params
            )
            stats[scheme] = _stats_from_result(res, params)
    return DropRecord(
        ratio=ratio,
        utility_kind=kind,
        drop_index=drop_idx,
        seed=seed,
        stats=stats,
        selected_alpha=alphas,
    )


_WORKER_CTX = None


def _init_worker(cfg, profile):
    global _WORKER_CTX
    _WORKER_CTX = (cfg, profile)


def _run_unit_in_worker(key):
    cfg, profile = _WORKER_CTX
    return _run_unit(cfg, profile, key)


def _resolve_workers(requested: Optional[int], n_units: int) -> int:
    env = os.environ.get("ALPHADUPLEX_THREADS")
    cap = None
    if env is not None and env.strip():
        try:
            cap = int(env)
        except ValueError:
            raise ConfigurationError(
                f"ALPHADUPLEX_THREADS must be an integer, got {env!r}"
            )
        if cap < 1:
            raise ConfigurationError("ALPHADUPLEX_THREADS must be >= 1")
    w = requested if requested is not None else (os.cpu_count() or 1)
    if w < 1:
        raise InvalidParameterError("max_workers must be >= 1")
    if cap is not None:
        w = min(w, cap)
    return max(1, min(w, n_units))


def _aggregate(cfg: ExperimentConfig, drops: Sequence[DropRecord]) -> list:
    by_key = {}
    for d in drops:
        by_key.setdefault((d.ratio, d.utility_kind), []).append(d)
    records = []
    for ratio in cfg.ratio_grid:
        for kind in cfg.utility_kinds:
            group = sorted(by_key.get((ratio, kind), []), key=lambda d: d.drop_index)
            for scheme in cfg.schemes:
                total = np.array([d.stats[scheme].total for d in group])
                ul = np.array([d.stats[scheme].ul for d in group])
                dl = np.array([d.stats[scheme].dl for d in group])
                al = np.array([d.stats[scheme].mean_alpha for d in group])
                conv = np.array([d.stats[scheme].converged for d in group])
                records.append(
                    SweepRecord(
                        ratio=ratio,
                        scheme=scheme,
                        utility_kind=kind,
                        mean_total=float(np.mean(total)),
                        ci_total=_ci95(total),
                        mean_ul=float(np.mean(ul)),
                        ci_ul=_ci95(ul),
                        mean_dl=float(np.mean(dl)),
                        ci_dl=_ci95(dl),
                        mean_alpha=float(np.mean(al)),
                        conv_frac=float(np.mean(conv)),
                        n_drops=len(group),
                    )
                )
    return records


def run_sweep(
    cfg: ExperimentConfig,
    max_workers: Optional[int] = None,
    profile: Optional[PulseOverlapProfile] = None,
    return_drops: bool = False,
):
    """Run the full (ratio x utility x drop) grid and aggregate.

    Results are independent of max_workers: work units are keyed, each seeds
    itself from base_seed XOR drop_index, and aggregation iterates keys in a
    fixed order.
    """
    if profile is None:
        profile = default_profile()
    units = [
        (ri, ui, di)
        for ri in range(len(cfg.ratio_grid))
        for ui in range(len(cfg.utility_kinds))
        for di in range(cfg.n_drops)
    ]
    workers = _resolve_workers(max_workers, len(units))
    if workers == 1:
        drops = [_run_unit(cfg, profile, key) for key in units]
    else:
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:
            ctx = multiprocessing.get_context()
        chunk = max(1, len(units) // (workers * 8))
        with ProcessPoolExecutor(
            max_workers=workers,
            mp_context=ctx,
            initializer=_init_worker,
            initargs=(cfg, profile),
        ) as pool:
            drops = list(pool.map(_run_unit_in_worker, units, chunksize=chunk))
    records = _aggregate(cfg, drops)
    if return_drops:
        return records, drops
    return records


def alpha_histogram(
    results: Sequence[DropRecord],
    bins: int = 14,
    alpha_min: float = DEFAULT_ALPHA_MIN,
) -> dict:
    """Histogram of the adaptive scheme's selected per-cell overlaps.

    Returns {(ratio, utility_kind): (bin_edges, frequencies)} with
    frequencies normalized to sum to 1 over [alpha_min, 1].
    """
    if bins < 1:
        raise InvalidParameterError("bins must be >= 1")
    pooled = {}
    for d in results:
        if d.selected_alpha is None:
            continue
        pooled.setdefault((d.ratio, d.utility_kind), []).append(d.selected_alpha)
    out = {}
    for key in sorted(pooled, key=lambda k: (k[0], k[1].value)):
        values = np.concatenate(pooled[key])
        counts, edges = np.histogram(values, bins=bins, range=(alpha_min, 1.0))
        total = counts.sum()
        freqs = counts / total if total > 0 else counts.astype(float)
        out[key] = (edges, freqs)
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_text(records: Sequence[SweepRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    _fmt(r.ratio),
                    r.scheme.value,
                    r.utility_kind.value,
                    _fmt(r.mean_total),
                    _fmt(r.ci_total),
                    _fmt(r.mean_ul),
                    _fmt(r.ci_ul),
                    _fmt(r.mean_dl),
                    _fmt(r.ci_dl),
                    _fmt(r.mean_alpha),
                    _fmt(r.conv_frac),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def emit_csv(records: Sequence[SweepRecord], path) -> str:
    """Write aggregated records as CSV; full float precision, LF endings."""
    text = csv_text(records)
    path = os.fspath(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def histogram_csv_text(hists: dict) -> str:
    lines = ["ratio,utility,bin_lo,bin_hi,frequency"]
    for (ratio, kind), (edges, freqs) in hists.items():
        for lo, hi, f in zip(edges[:-1], edges[1:], freqs):
            lines.append(
                ",".join([_fmt(ratio), kind.value, _fmt(lo), _fmt(hi), _fmt(f)])
            )
    return "\n".join(lines) + "\n"
