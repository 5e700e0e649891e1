"""CSV parsing and deterministic figure rendering."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_LINE_HEADER = ("x", "t", "value")
_GRID_HEADER = ("x", "z", "value")


class CsvFormatError(ValueError):
    """The input file does not follow the exporter's CSV contract."""


@dataclass
class ParsedCsv:
    kind: str                 # "line" (x,t,value) | "grid" (x,z,value)
    xs: np.ndarray            # sorted unique x
    ys: np.ndarray            # sorted unique t (line) or z (grid)
    values: np.ndarray        # shape (len(ys), len(xs)); NaN marks gaps


@dataclass
class PlotJob:
    inputs: list[Path]
    figure_id: int
    output: Path
    clip_quantile: float = 0.99
    xlabel: str = "x"
    dpi: int = 100


def parse_csv(path: Path) -> ParsedCsv:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CsvFormatError(f"{path}: empty file")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header == _LINE_HEADER:
        kind = "line"
    elif header == _GRID_HEADER:
        kind = "grid"
    else:
        raise CsvFormatError(f"{path}: unexpected header {header!r}")
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != 3:
            raise CsvFormatError(f"{path}:{i}: expected 3 cells, got {len(cells)}")
        try:
            x = float(cells[0])
            y = float(cells[1])
            v = float(cells[2]) if cells[2].strip() else np.nan
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{i}: {exc}") from exc
        rows.append((x, y, v))
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    xs = np.array(sorted({r[0] for r in rows}))
    ys = np.array(sorted({r[1] for r in rows}))
    values = np.full((len(ys), len(xs)), np.nan)
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    for x, y, v in rows:
        values[yi[y], xi[x]] = v
    return ParsedCsv(kind, xs, ys, values)


def clip_limit(values: np.ndarray, quantile: float) -> float:
    """Symmetric display limit: the requested quantile of |finite values|.

    Keeps pole neighbourhoods from flattening the structure of the plot."""
    finite = np.abs(values[np.isfinite(values)])
    if finite.size == 0:
        return 1.0
    limit = float(np.quantile(finite, quantile))
    return limit if limit > 0 else float(finite.max() or 1.0)


def render(job: PlotJob) -> Path:
    """Render the job to a PNG; returns the output path.

    One curve per time slice for line data; one heatmap panel per input file
    for grid data.  Deterministic for fixed inputs (fixed geometry, fixed
    metadata, no timestamps).
    """
    parsed = [parse_csv(p) for p in job.inputs]
    kinds = {p.kind for p in parsed}
    if len(kinds) != 1:
        raise CsvFormatError("cannot mix line and grid CSVs in one job")
    kind = kinds.pop()
    if kind == "line" and len(parsed) != 1:
        raise CsvFormatError("line data expects exactly one CSV")

    all_values = np.concatenate([p.values.ravel() for p in parsed])
    limit = clip_limit(all_values, job.clip_quantile)

    if kind == "line":
        data = parsed[0]
        fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=job.dpi)
        for row, tval in enumerate(data.ys):
            ax.plot(data.xs, data.values[row], lw=1.2, label=f"t = {tval:g}")
        ax.set_xlabel(job.xlabel)
        ax.set_ylabel("value")
        ax.set_ylim(-limit, limit)
        ax.legend(loc="upper left", fontsize=8)
        ax.grid(True, alpha=0.3)
    else:
        n = len(parsed)
        fig, axes = plt.subplots(1, n, figsize=(4.0 * n, 3.6), dpi=job.dpi,
                                 squeeze=False)
        for k, (axk, data) in enumerate(zip(axes[0], parsed)):
            masked = np.ma.masked_invalid(data.values)
            mesh = axk.pcolormesh(data.xs, data.ys, masked, cmap="viridis",
                                  vmin=-limit, vmax=limit, shading="nearest")
            axk.set_xlabel(job.xlabel)
            axk.set_ylabel("z")
            if n > 1:
                axk.set_title(f"slice {k}", fontsize=9)
        fig.colorbar(mesh, ax=axes[0].tolist(), shrink=0.85)

    job.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.output, format="png",
                metadata={"Software": "figplot"})
    plt.close(fig)
    return job.output
