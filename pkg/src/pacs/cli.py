"""Command-line front end.

Subcommands: ``select`` (covariate selection + ATE on a CSV file),
``ate`` (ATE only), ``simulate`` (replicated experiment cells), and
``report`` (merge cell outputs).  Exit codes: 0 success, 1 runtime
error, 2 usage error.  The default seed is 1729; the PACS_SEED
environment variable overrides it and explicit --seed beats both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .data import DataError, load_csv
from .oal import OalConfig
from .report import (
    ReportError,
    combine_cells,
    read_cell,
    summarize,
    write_cell_chart,
    write_cell_csvs,
)
from .selector import DEFAULT_SEED, PacsConfig, pacs_fit
from .simulate import (
    ALL_METHODS,
    PRESET_NAMES,
    preset,
    run_experiment,
)


class UsageError(ValueError):
    pass


def _default_seed() -> int:
    env = os.environ.get("PACS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"PACS_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines mirroring the long flag names."""
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    out = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{p}: line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


_CONFIG_KEYS = {
    "data": str, "rule": str, "gamma-grid": str, "lambda-grid-size": int,
    "folds": int, "seed": int, "workers": int, "m": int, "preset": str,
    "out": str, "methods": str,
}


def _apply_config(args: argparse.Namespace, conf: dict[str, str]) -> None:
    for key, raw in conf.items():
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config field {key!r}")
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is not None:
            continue  # explicit flags win over the config file
        caster = _CONFIG_KEYS[key]
        try:
            setattr(args, attr, caster(raw))
        except ValueError:
            raise UsageError(f"config field {key!r}: bad value {raw!r}") from None


def _parse_gamma_grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"bad --gamma-grid value {text!r}") from None
    if not grid:
        raise UsageError("empty --gamma-grid")
    return grid


def _pacs_config(args: argparse.Namespace) -> PacsConfig:
    return PacsConfig(
        gamma_grid=_parse_gamma_grid(args.gamma_grid or "0.5,1,2"),
        lambda_grid_size=args.lambda_grid_size or 50,
        cv_folds=args.folds or 5,
        rule=args.rule or "and",
        seed=args.seed if args.seed is not None else _default_seed(),
    )


def _cmd_select(args: argparse.Namespace) -> int:
    if args.data is None:
        raise UsageError("select requires --data")
    ds = load_csv(args.data)
    cfg = _pacs_config(args)
    res = pacs_fit(ds, cfg)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    table_path = out_dir / "pacs_result.csv"
    with table_path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("name,beta_wls_T,beta_pacs_T,beta_wls_C,beta_pacs_C,selected\n")
        for j, name in enumerate(ds.names):
            fh.write(",".join([
                name,
                repr(float(res.wls_T.beta_tilde[j])),
                repr(float(res.fit_T.beta_hat[j])),
                repr(float(res.wls_C.beta_tilde[j])),
                repr(float(res.fit_C.beta_hat[j])),
                "1" if j in res.selected else "0",
            ]) + "\n")

    detail = {
        "rule": cfg.rule,
        "seed": cfg.seed,
        "selected": [ds.names[j] for j in sorted(res.selected)],
        "empty_selection": res.empty_selection,
        "ate": res.ate,
        "n_treated": res.ate_detail.n_treated,
        "n_control": res.ate_detail.n_control,
        "lambda_T": res.fit_T.lam,
        "gamma_T": res.fit_T.gamma,
        "lambda_C": res.fit_C.lam,
        "gamma_C": res.fit_C.gamma,
        "timing_seconds": res.timing,
    }
    (out_dir / "selection.json").write_text(
        json.dumps(detail, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"selected: {' '.join(detail['selected']) or '(none)'}")
    print(f"ate: {res.ate!r}")
    print(f"wrote {table_path}")
    return 0


def _cmd_ate(args: argparse.Namespace) -> int:
    if args.data is None:
        raise UsageError("ate requires --data")
    ds = load_csv(args.data)
    res = pacs_fit(ds, _pacs_config(args))
    print(repr(res.ate))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.preset is None:
        raise UsageError("simulate requires --preset (or preset= in --config)")
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        cfg = preset(args.preset, m=args.m, seed=seed)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    methods = tuple((args.methods or "pacs-and,oal").split(","))
    for method in methods:
        if method not in ALL_METHODS:
            raise UsageError(
                f"unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")
    workers = args.workers or 1
    reports = run_experiment(
        cfg, methods,
        pacs_config=PacsConfig(seed=seed),
        oal_config=OalConfig(),
        workers=workers,
    )
    tables = summarize(cfg, reports)
    out_dir = Path(args.out or "reports") / cfg.name
    paths = write_cell_csvs(tables, out_dir)
    paths.append(write_cell_chart(tables, out_dir))
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    root = Path(args.reports_dir)
    if not root.is_dir():
        raise ReportError(f"no reports found: {root} is not a directory")
    cells = []
    for sub in sorted(root.iterdir()):
        if sub.is_dir() and (sub / "runtime.csv").exists():
            cells.append(read_cell(sub))
    if not cells:
        raise ReportError(f"no reports found under {root}")
    paths = combine_cells(cells, root)
    for t in cells:
        paths.append(write_cell_chart(t, root / t.cell))
    for path in paths:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pacs",
        description="Propensity-adapted covariate selection and "
                    "IPW treatment-effect estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="key=value file mirroring the flags")
        sp.add_argument("--data", help="input CSV with y, d and covariate columns")
        sp.add_argument("--rule", choices=["and", "or"], default=None)
        sp.add_argument("--gamma-grid", dest="gamma_grid",
                        help="comma-separated positive gammas (default 0.5,1,2)")
        sp.add_argument("--lambda-grid-size", dest="lambda_grid_size", type=int)
        sp.add_argument("--folds", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--m", type=int, help="replication count override")
        sp.add_argument("--preset", help="experiment cell name")
        sp.add_argument("--methods",
                        help="comma-separated methods (default pacs-and,oal)")
        sp.add_argument("--out", help="output directory")

    for name, fn in (("select", _cmd_select), ("ate", _cmd_ate),
                     ("simulate", _cmd_simulate)):
        sp = sub.add_parser(name)
        add_common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("report")
    sp.add_argument("reports_dir", help="directory of per-cell report folders")
    sp.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config(args, _read_config_file(args.config))
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ReportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
