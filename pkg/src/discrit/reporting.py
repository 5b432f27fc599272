"""Delimited output, plot files, figures and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from ._util import format_number
from .criteria import CriterionReport
from .rearrange import Matrix2D


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(x) if isinstance(x, (int, float)) and not isinstance(x, bool) else str(x) for x in row])
    return path


def write_dat(path, pairs) -> Path:
    """Two-column whitespace plot file."""
    path = Path(path)
    with open(path, "w") as fh:
        for x, y in pairs:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
    return path


def criterion_report_csv(report: CriterionReport, path) -> Path:
    d = len(report.centers[0])
    header = [f"c{k+1}" for k in range(d)] + ["value", "window", "trend_flag"]
    rows = []
    for center, value, window in zip(report.centers, report.values, report.window_of):
        rows.append([format_number(c) for c in center] + [repr(float(value)), window, int(report.diverging)])
    return write_csv(path, header, rows)


def criterion_report_dat(report: CriterionReport, path) -> Path:
    pairs = []
    for center, value in zip(report.centers, report.values):
        norm = max(abs(float(c)) for c in center)
        pairs.append((norm, value))
    return write_dat(path, pairs)


def render_trend_figure(report: CriterionReport, path, title: str = "") -> Path:
    """Value-vs-center-norm trend with window minima; written as a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    norms = [max(abs(float(c)) for c in center) for center in report.centers]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(norms, report.values, "o-", label=report.criterion_id)
    positive = [v for v in report.values if v > 0]
    if positive and max(report.values) / max(min(positive), 1e-300) > 50:
        ax.set_yscale("log")
    bounds = []
    pos = 0
    for k in range(max(report.window_of) + 1):
        size = report.window_of.count(k)
        mid = norms[pos + size // 2]
        bounds.append((mid, report.window_minima[k]))
        pos += size
    ax.plot([b[0] for b in bounds], [b[1] for b in bounds], "s--", label="window minima")
    ax.set_xlabel("center sup-norm")
    ax.set_ylabel("criterion value")
    flag = "diverging" if report.diverging else "not diverging"
    ax.set_title(title or f"{report.criterion_id} ({flag})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def matrix2d_from_csv(entries_path, row_grid_path, col_grid_path, domain, origin, size) -> Matrix2D:
    """Assemble a two-variable function from a kernel-entry CSV and grid CSVs.

    Row/column measures are the Lebesgue cell weights of the saved grids.
    """
    from .kernels import load_kernel_entries_csv
    from .measure_space import load_space_csv

    entries = load_kernel_entries_csv(entries_path)
    rows, _ = load_space_csv(row_grid_path, domain, origin, size)
    cols, _ = load_space_csv(col_grid_path, domain, origin, size)
    return Matrix2D(entries, rows.weights.tolist(), cols.weights.tolist())


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config: dict, seed, wall_time_s: float, files) -> Path:
    from . import __version__

    manifest = {
        "version": __version__,
        "seed": seed,
        "config": config,
        "wall_time_s": wall_time_s,
        "outputs": [
            {"name": Path(f).name, "sha256": sha256_of(f)} for f in sorted(files, key=lambda p: Path(p).name)
        ],
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
