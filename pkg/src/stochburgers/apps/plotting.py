"""PNG rendering of the plot-ready tables, and a gnuplot script for offline use."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# tables whose first column is a step size; these read best on log-log axes
LOG_PREFIXES = ("constraints_", "fbsde_", "pricing_sweep")


def _is_log(name: str, cols: Mapping[str, np.ndarray]) -> bool:
    if not name.startswith(LOG_PREFIXES):
        return False
    return all(np.all(np.asarray(v, dtype=float) > 0) for k, v in list(cols.items())[1:])


def render_table(name: str, cols: Mapping[str, np.ndarray], path):
    names = list(cols)
    x = np.asarray(cols[names[0]], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=100)
    marker = "o" if x.size <= 10 else None
    for n in names[1:]:
        ax.plot(x, np.asarray(cols[n], dtype=float), marker=marker, label=n)
    if _is_log(name, cols):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(names[0])
    ax.set_title(name)
    ax.grid(True, alpha=0.3)
    if len(names) > 2:
        ax.legend()
    fig.tight_layout()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    # no software/date metadata, so reruns give identical bytes
    fig.savefig(p, format="png", metadata={"Software": None})
    plt.close(fig)


def render_results(results, out_dir):
    for res in results:
        for name, cols in res.series.items():
            render_table(name, cols, Path(out_dir) / "plots" / f"{name}.png")


def gnuplot_script(out_dir) -> str:
    """A gnuplot script plotting every series/*.csv found under out_dir."""
    series = sorted((Path(out_dir) / "series").glob("*.csv"))
    lines = ["set datafile separator ','", "set key autotitle columnhead", "set terminal pngcairo size 600,400", ""]
    for f in series:
        header = f.read_text().splitlines()[0].split(",")
        lines.append(f"set output 'plots/{f.stem}.gnuplot.png'")
        lines.append(f"set title '{f.stem}'")
        log = f.stem.startswith(LOG_PREFIXES)
        lines.append("set logscale xy" if log else "unset logscale")
        parts = [f"'series/{f.name}' using 1:{i + 1} with linespoints" for i in range(1, len(header))]
        lines.append("plot " + ", \\\n     ".join(parts))
        lines.append("")
    return "\n".join(lines)
