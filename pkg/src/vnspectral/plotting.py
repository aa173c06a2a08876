"""Figures for experiment results (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import ExperimentResult  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 7,
    "legend.frameon": False,
}
# keep PNG bytes reproducible
PNG_METADATA = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def plot_counting(result: ExperimentResult, path: Path) -> Path | None:
    """Step curves ``lambda -> N_tau``, one per truncation length."""
    rows = [r for r in result.curves if r[3] == "all"]
    if not rows:
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        lengths = sorted({r[2] for r in rows}, key=lambda v: (v == "", v if v != "" else 0))
        cmap = plt.get_cmap("viridis")
        for i, length in enumerate(lengths):
            pts = np.array([(r[0], r[1]) for r in rows if r[2] == length], dtype=float)
            label = None if length == "" else f"L = {length:g}"
            ax.step(pts[:, 0], pts[:, 1], where="post", color=cmap(i / max(len(lengths) - 1, 1)), label=label)
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel(r"$N_\tau(\lambda)$")
        if any(length != "" for length in lengths):
            ax.legend()
        return _save(fig, path)


def plot_indices(result: ExperimentResult, path: Path) -> Path | None:
    """Index of every sampled operator against the homotopy parameter."""
    rows = [r for r in result.index_rows if r["t"] != ""]
    if len(rows) < 2:
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        t = np.array([r["t"] for r in rows], dtype=float)
        ind = np.array([r["ind_tau"] for r in rows], dtype=float)
        ms = np.array([r["mckean_singer"] for r in rows], dtype=float)
        ax.plot(t, ind, "o", ms=4, alpha=0.6, label=r"ind$_\tau$")
        ax.plot(t, ms, "x", ms=4, alpha=0.6, label="supertrace")
        ax.set_xlabel("t")
        ax.set_ylabel("index")
        ax.legend()
        return _save(fig, path)


def plot_gaps(result: ExperimentResult, path: Path) -> Path | None:
    """Gap above the kernel against truncation length (Fredholm runs)."""
    if "callias" not in result.summary:
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, marker in (("callias", "o-"), ("control", "s--")):
            recs = result.summary[name]
            ax.semilogy([w["L"] for w in recs], [w["gap"] or np.nan for w in recs], marker, label=name)
        ax.set_xlabel("L")
        ax.set_ylabel("gap above kernel")
        ax.legend()
        return _save(fig, path)


def plot_quadrature(result: ExperimentResult, path: Path) -> Path | None:
    """Bloch quadrature error against M (Z-cover runs with an oracle)."""
    if "errors" not in result.summary:
        return None
    ms = [row["M"] for row in result.summary["quadrature"]]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(ms, result.summary["errors"], "o-", label="|error|")
        ax.loglog(ms, [2.0 / m for m in ms], "k:", label="2/M")
        ax.set_xlabel("M")
        ax.legend()
        return _save(fig, path)


def plot_diagnostic(result: ExperimentResult, path: Path) -> Path | None:
    recs = result.summary.get("records")
    if not recs:
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot([r["eigenvalue"] for r in recs], [r["ratio"] for r in recs], "o-")
        ax.set_xlabel("eigenvalue")
        ax.set_ylabel("lhs / rhs")
        return _save(fig, path)


def render(result: ExperimentResult, out_dir: Path) -> list[Path]:
    """Write every figure that applies to ``result``; returns the written paths."""
    out_dir = Path(out_dir)
    jobs = [
        (plot_counting, "counting.png"),
        (plot_indices, "indices.png"),
        (plot_gaps, "gaps.png"),
        (plot_quadrature, "quadrature.png"),
        (plot_diagnostic, "diagnostic.png"),
    ]
    written = []
    for fn, name in jobs:
        path = fn(result, out_dir / name)
        if path is not None:
            written.append(path)
    return written
