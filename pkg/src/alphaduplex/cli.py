"""Command-line front end.

Subcommands:
  factors   dump the cross-factor table C_u/C_b over alpha as CSV
  run       one realization, all schemes, human-readable summary
  sweep     Monte-Carlo ratio sweep, aggregated CSV
  hist      Monte-Carlo sweep, histogram of selected overlaps as CSV

Configuration comes from an optional flat key = value file (--config) plus
flag overrides.  Exit codes: 0 success, 2 configuration error, 1 runtime
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields, replace

from .errors import (
    AlphaDuplexError,
    ConfigurationError,
    InfeasibleSpecError,
    InvalidParameterError,
)
from .harness import (
    ExperimentConfig,
    alpha_histogram,
    emit_csv,
    histogram_csv_text,
    run_sweep,
)
from .links import UtilityKind
from .overlap import default_profile, factors_table
from .scenario import FadingModel, SystemParams, realize
from .schemes import SchemeConfig, SchemeKind, compare_all, run_scheme

_PARAM_FLOAT_KEYS = {
    "isd", "B", "fc", "noise_density_N0", "p_u_max", "p_b_min", "p_b_tot",
    "alpha_min", "d_min",
}
_PARAM_INT_KEYS = {"N"}
_EXP_INT_KEYS = {"n_drops", "base_seed", "n_starts"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat key = value lines; # comments and blank lines ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"{source}:{lineno}: expected 'key = value', got {raw!r}"
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigurationError(
                f"{source}:{lineno}: empty key or value in {raw!r}"
            )
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _parse_enum_list(value: str, enum_cls, key: str):
    items = []
    for tok in value.split(","):
        tok = tok.strip()
        try:
            items.append(enum_cls(tok))
        except ValueError:
            valid = ", ".join(e.value for e in enum_cls)
            raise ConfigurationError(
                f"config key {key!r}: unknown value {tok!r} (valid: {valid})"
            )
    return tuple(items)


def build_experiment_config(raw: dict) -> ExperimentConfig:
    """Assemble an ExperimentConfig from string key/value pairs."""
    param_names = {f.name for f in fields(SystemParams)}
    exp_names = {f.name for f in fields(ExperimentConfig)} - {"params"}
    pk, ek = {}, {}
    for key, value in raw.items():
        try:
            if key in _PARAM_INT_KEYS:
                pk[key] = int(value)
            elif key in _PARAM_FLOAT_KEYS:
                pk[key] = float(value)
            elif key == "noise_density_user":
                pk[key] = None if value.lower() == "none" else float(value)
            elif key == "fading":
                pk[key] = FadingModel(value)
            elif key in _EXP_INT_KEYS:
                ek[key] = int(value)
            elif key == "ratio_grid":
                ek[key] = tuple(float(tok) for tok in value.split(","))
            elif key == "utility_kinds":
                ek[key] = _parse_enum_list(value, UtilityKind, key)
            elif key == "schemes":
                ek[key] = _parse_enum_list(value, SchemeKind, key)
            elif key == "output_dir":
                ek[key] = value
            elif key in param_names or key in exp_names:
                raise ConfigurationError(f"config key {key!r} is not settable")
            else:
                raise ConfigurationError(f"unknown config key {key!r}")
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"config key {key!r}: bad value {value!r} ({exc})")
    try:
        params = SystemParams(**pk)
        return ExperimentConfig(params=params, **ek)
    except InvalidParameterError as exc:
        raise ConfigurationError(str(exc))


def load_config(path) -> ExperimentConfig:
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return build_experiment_config(parse_config_text(text, source=str(path)))


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "drops", None) is not None:
        updates["n_drops"] = args.drops
    if getattr(args, "utility", None):
        updates["utility_kinds"] = _parse_enum_list(
            args.utility, UtilityKind, "--utility"
        )
    if getattr(args, "scheme", None):
        updates["schemes"] = _parse_enum_list(args.scheme, SchemeKind, "--scheme")
    if updates:
        try:
            cfg = replace(cfg, **updates)
        except InvalidParameterError as exc:
            raise ConfigurationError(str(exc))
    return cfg


def _cmd_factors(args) -> int:
    text = factors_table(n_points=args.points)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    profile = default_profile()
    seed = cfg.base_seed
    net = realize(cfg.params, seed)
    print(f"seed={seed} N={cfg.params.N} p_u_max={cfg.params.p_u_max!r} "
          f"p_b_tot={cfg.params.p_b_tot!r}")
    for kind in cfg.utility_kinds:
        if SchemeKind.ALPHA_DUPLEX_OPT in cfg.schemes:
            results = [
                r for r in compare_all(net, profile, cfg.params, kind, cfg.n_starts)
                if r.kind in cfg.schemes
            ]
        else:
            results = [
                run_scheme(
                    SchemeConfig(s, kind, cfg.n_starts), net, profile, cfg.params
                )
                for s in cfg.schemes
            ]
        for r in results:
            ul = float(sum(r.R_u) / (cfg.params.N * cfg.params.B))
            dl = float(sum(r.R_b) / (cfg.params.N * cfg.params.B))
            print(
                f"utility={kind.value} scheme={r.kind.value} "
                f"objective={r.utility!r} total={r.per_user_total_rate_per_B!r} "
                f"ul={ul!r} dl={dl!r} mean_alpha={r.mean_alpha!r} "
                f"converged={r.converged}"
            )
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    records = run_sweep(cfg)
    out = args.out or os.path.join(cfg.output_dir, "sweep.csv")
    emit_csv(records, out)
    print(f"wrote {out}")
    return 0


def _cmd_hist(args) -> int:
    cfg = _config_from_args(args)
    if SchemeKind.ALPHA_DUPLEX_OPT not in cfg.schemes:
        raise ConfigurationError(
            "hist needs the adaptive scheme; include alpha_duplex in schemes"
        )
    _, drops = run_sweep(cfg, return_drops=True)
    hists = alpha_histogram(drops, bins=args.bins, alpha_min=cfg.params.alpha_min)
    text = histogram_csv_text(hists)
    out = args.out or os.path.join(cfg.output_dir, "alpha_hist.csv")
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alphaduplex",
        description="Adaptive spectrum-overlap network simulator and optimizer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_factors = sub.add_parser("factors", help="dump the cross-factor table")
    p_factors.add_argument("--points", type=int, default=1001)
    p_factors.add_argument("--out", default=None)
    p_factors.set_defaults(func=_cmd_factors)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="flat key = value file")
    common.add_argument("--seed", type=int, default=None, help="override base_seed")
    common.add_argument("--utility", default=None,
                        help="comma list: sum_rate,sum_log_rate")
    common.add_argument("--scheme", default=None,
                        help="comma list of scheme names to run")

    p_run = sub.add_parser("run", parents=[common],
                           help="single realization, scheme comparison")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="Monte-Carlo ratio sweep to CSV")
    p_sweep.add_argument("--drops", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_hist = sub.add_parser("hist", parents=[common],
                            help="histogram of selected overlap fractions")
    p_hist.add_argument("--drops", type=int, default=None)
    p_hist.add_argument("--bins", type=int, default=14)
    p_hist.add_argument("--out", default=None)
    p_hist.set_defaults(func=_cmd_hist)
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigurationError, InvalidParameterError, InfeasibleSpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AlphaDuplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
