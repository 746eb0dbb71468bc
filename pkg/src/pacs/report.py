"""Summary tables, CSV emission, and SVG selection-frequency charts.

CSV schemas (stable column order):
  selection_frequency.csv: method,covariate,role,frequency
  ate_summary.csv:         method,mean,bias,sd,rmse,n_failed
  runtime.csv:             method,n,p,m,seconds

All emission is deterministic given the inputs: fixed float formatting,
no timestamps.  The ``seconds`` column is the one exception across
reruns, since it records measured wall clock.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .simulate import ReplicationReport, ScenarioConfig


class ReportError(ValueError):
    """Malformed or missing report inputs."""


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return repr(float(v))


@dataclass(frozen=True)
class SummaryTables:
    cell: str
    n: int
    p: int
    m: int
    frequency_rows: tuple[tuple[str, str, str, float], ...]
    ate_rows: tuple[tuple[str, float, float, float, float, int], ...]
    runtime_rows: tuple[tuple[str, int, int, int, float], ...]


def summarize(cfg: ScenarioConfig, reports: list[ReplicationReport]) -> SummaryTables:
    """Aggregate per-method reports into frequency / ATE / runtime tables."""
    if not reports:
        raise ReportError("no reports to summarize")
    freq_rows = []
    ate_rows = []
    runtime_rows = []
    true_ate = cfg.true_ate
    for rep in reports:
        freqs = rep.frequencies
        for j in range(cfg.p):
            freq_rows.append(
                (rep.method, f"x{j + 1}", cfg.roles.label(j), float(freqs[j])))
        ates = rep.ate_estimates
        if ates.size:
            mean = float(ates.mean())
            bias = mean - true_ate
            sd = float(ates.std(ddof=1)) if ates.size > 1 else float("nan")
            rmse = float(math.sqrt(((ates - true_ate) ** 2).mean()))
        else:
            mean = bias = sd = rmse = float("nan")
        ate_rows.append((rep.method, mean, bias, sd, rmse, rep.n_failed))
        runtime_rows.append(
            (rep.method, cfg.n, cfg.p, cfg.m, float(rep.wall_clock_total)))
    return SummaryTables(
        cell=cfg.name, n=cfg.n, p=cfg.p, m=cfg.m,
        frequency_rows=tuple(freq_rows),
        ate_rows=tuple(ate_rows),
        runtime_rows=tuple(runtime_rows),
    )


def write_cell_csvs(tables: SummaryTables, out_dir) -> list[Path]:
    """Write the three per-cell CSV files; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    path = out_dir / "selection_frequency.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "covariate", "role", "frequency"])
        for method, cov, role, freq in tables.frequency_rows:
            w.writerow([method, cov, role, _fmt(freq)])
    paths.append(path)

    path = out_dir / "ate_summary.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "mean", "bias", "sd", "rmse", "n_failed"])
        for method, mean, bias, sd, rmse, failed in tables.ate_rows:
            w.writerow([method, _fmt(mean), _fmt(bias), _fmt(sd),
                        _fmt(rmse), str(failed)])
    paths.append(path)

    path = out_dir / "runtime.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "n", "p", "m", "seconds"])
        for method, n, p, m, seconds in tables.runtime_rows:
            w.writerow([method, str(n), str(p), str(m), _fmt(seconds)])
    paths.append(path)
    return paths


_PALETTE = ("#3b6fb6", "#d1752c", "#3f9444", "#b0403d", "#7b5ea7")


def frequency_chart_svg(tables: SummaryTables) -> str:
    """Grouped bar chart of selection frequency per covariate per method."""
    methods = []
    for method, *_ in tables.frequency_rows:
        if method not in methods:
            methods.append(method)
    p = tables.p
    freq = {m: [0.0] * p for m in methods}
    covs = [f"x{j + 1}" for j in range(p)]
    pos = {c: j for j, c in enumerate(covs)}
    roles = [""] * p
    for method, cov, role, f in tables.frequency_rows:
        freq[method][pos[cov]] = f
        roles[pos[cov]] = role

    bar_w = 9 if p <= 30 else 4
    gap = 6 if p <= 30 else 3
    group_w = bar_w * len(methods) + gap
    left, top, bottom = 46, 34, 40
    plot_h = 260
    width = left + p * group_w + 160
    height = top + plot_h + bottom

    def ybar(v: float) -> float:
        return top + plot_h * (1.0 - v)

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">')
    out.append('<rect width="100%" height="100%" fill="white"/>')
    out.append(
        f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">'
        f"selection frequency by covariate — {tables.cell} "
        f"(n={tables.n}, p={tables.p}, m={tables.m})</text>")
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = ybar(tick)
        out.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{left + p * group_w}" '
            f'y2="{y:.1f}" stroke="#cccccc" stroke-width="1"/>')
        out.append(
            f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick:.2f}</text>')
    for mi, method in enumerate(methods):
        color = _PALETTE[mi % len(_PALETTE)]
        for j in range(p):
            v = freq[method][j]
            x = left + j * group_w + mi * bar_w
            y = ybar(v)
            out.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w}" '
                f'height="{top + plot_h - y:.1f}" fill="{color}"/>')
        lx = left + p * group_w + 14
        ly = top + 16 * mi
        out.append(
            f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{color}"/>')
        out.append(
            f'<text x="{lx + 14}" y="{ly + 9}" font-family="sans-serif" '
            f'font-size="11">{method}</text>')
    label_step = 1 if p <= 30 else 5
    for j in range(p):
        if (j + 1) % label_step and j != 0:
            continue
        x = left + j * group_w + (group_w - gap) / 2
        out.append(
            f'<text x="{x:.1f}" y="{top + plot_h + 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="9">{covs[j]}</text>')
    out.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        'stroke="black" stroke-width="1"/>')
    out.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + p * group_w}" '
        f'y2="{top + plot_h}" stroke="black" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_cell_chart(tables: SummaryTables, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "selection_frequency.svg"
    path.write_text(frequency_chart_svg(tables), encoding="utf-8")
    return path


def _read_csv_rows(path: Path, expect_header: list[str]) -> list[list[str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ReportError(f"{path}: empty file") from None
        if header != expect_header:
            raise ReportError(
                f"{path}: row 1: bad header {header!r}, expected {expect_header!r}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(expect_header):
                raise ReportError(
                    f"{path}: row {i}: {len(row)} fields, expected {len(expect_header)}")
            rows.append(row)
    if not rows:
        raise ReportError(f"{path}: no data rows")
    return rows


def read_cell(cell_dir) -> SummaryTables:
    """Parse one cell directory back into summary tables."""
    cell_dir = Path(cell_dir)
    freq_path = cell_dir / "selection_frequency.csv"
    ate_path = cell_dir / "ate_summary.csv"
    rt_path = cell_dir / "runtime.csv"
    for path in (freq_path, ate_path, rt_path):
        if not path.exists():
            raise ReportError(f"missing report file: {path}")

    freq_rows = []
    for i, (method, cov, role, f) in enumerate(
            _read_csv_rows(freq_path, ["method", "covariate", "role", "frequency"]),
            start=2):
        try:
            freq_rows.append((method, cov, role, float(f)))
        except ValueError:
            raise ReportError(
                f"{freq_path}: row {i}: bad frequency {f!r}") from None

    ate_rows = []
    for i, (method, mean, bias, sd, rmse, failed) in enumerate(
            _read_csv_rows(ate_path,
                           ["method", "mean", "bias", "sd", "rmse", "n_failed"]),
            start=2):
        try:
            ate_rows.append((method, float(mean), float(bias), float(sd),
                             float(rmse), int(failed)))
        except ValueError:
            raise ReportError(f"{ate_path}: row {i}: bad numeric field") from None

    runtime_rows = []
    for i, (method, n, p, m, seconds) in enumerate(
            _read_csv_rows(rt_path, ["method", "n", "p", "m", "seconds"]),
            start=2):
        try:
            runtime_rows.append((method, int(n), int(p), int(m), float(seconds)))
        except ValueError:
            raise ReportError(f"{rt_path}: row {i}: bad numeric field") from None

    n, p, m = runtime_rows[0][1], runtime_rows[0][2], runtime_rows[0][3]
    covs = {cov for _, cov, _, _ in freq_rows}
    if len(covs) != p:
        raise ReportError(
            f"{freq_path}: covers {len(covs)} covariates but runtime.csv says p={p}")
    return SummaryTables(
        cell=cell_dir.name, n=n, p=p, m=m,
        frequency_rows=tuple(freq_rows),
        ate_rows=tuple(ate_rows),
        runtime_rows=tuple(runtime_rows),
    )


def combine_cells(cells: list[SummaryTables], out_dir) -> list[Path]:
    """Merge per-cell tables into a cross-cell summary and a wide runtime
    matrix (method rows, cell columns); regenerates each cell's chart."""
    if not cells:
        raise ReportError("no reports found")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = sorted(cells, key=lambda t: t.cell)
    paths = []

    path = out_dir / "combined_summary.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "method", "n", "p", "m", "seconds",
                    "ate_mean", "ate_bias", "ate_sd", "ate_rmse", "n_failed",
                    "target_min_freq", "nontarget_max_freq"])
        for t in cells:
            seconds = {r[0]: r[4] for r in t.runtime_rows}
            for method, mean, bias, sd, rmse, failed in t.ate_rows:
                target = [f for mth, _, role, f in t.frequency_rows
                          if mth == method and role in
                          ("confounder", "outcome_predictor")]
                nontarget = [f for mth, _, role, f in t.frequency_rows
                             if mth == method and role in
                             ("instrument", "spurious")]
                w.writerow([
                    t.cell, method, str(t.n), str(t.p), str(t.m),
                    _fmt(seconds.get(method, float("nan"))),
                    _fmt(mean), _fmt(bias), _fmt(sd), _fmt(rmse), str(failed),
                    _fmt(min(target) if target else float("nan")),
                    _fmt(max(nontarget) if nontarget else float("nan")),
                ])
    paths.append(path)

    methods = []
    for t in cells:
        for r in t.runtime_rows:
            if r[0] not in methods:
                methods.append(r[0])
    path = out_dir / "runtime_matrix.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method"] + [t.cell for t in cells])
        for method in methods:
            row = [method]
            for t in cells:
                sec = {r[0]: r[4] for r in t.runtime_rows}.get(method)
                row.append(_fmt(sec) if sec is not None else "")
            w.writerow(row)
    paths.append(path)
    return paths
