"""Per-figure rendering from softimpact bundle directories."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

WALL_CASES = ("no_collapse", "p1", "p2", "p3", "p4")
CASE_LABELS = {
    "no_collapse": "no collapse",
    "p1": "rule 1",
    "p2": "rule 2",
    "p3": "rule 3",
    "p4": "rule 4",
}

# fixed look so identical inputs give identical bytes
RC = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "figrender",
}


class FigureError(RuntimeError):
    """Missing or malformed bundle input."""


def read_csv(path: Path, expected: tuple[str, ...] | None = None) -> dict:
    """Load a documented CSV into named float columns (fail-closed headers)."""
    if not path.exists():
        raise FigureError(f"missing input file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"empty file: {path}")
        rows = list(reader)
    if expected is not None and tuple(header) != expected:
        raise FigureError(
            f"{path.name}: header {header} does not match documented {list(expected)}"
        )
    if not rows:
        raise FigureError(f"{path.name}: no data rows")
    cols = {}
    for j, name in enumerate(header):
        values = [r[j] for r in rows]
        try:
            cols[name] = np.array(values, dtype=float)
        except ValueError:
            cols[name] = np.array(values)
    return cols


def read_summary(bundle: Path) -> dict:
    path = bundle / "summary.json"
    if not path.exists():
        return {"entries": []}
    with open(path) as fh:
        return json.load(fh)


def reference_lookup(summary: dict) -> dict[str, tuple[float, float]]:
    out = {}
    for entry in summary.get("entries", []):
        if "reference" in entry:
            out[entry["name"]] = (entry["computed"], entry["reference"])
    return out


def annotate_references(ax, refs: dict, names: list[str], fmt="{label}: {c:.4g} (ref {r:.4g})"):
    lines = []
    for name in names:
        if name in refs:
            c, r = refs[name]
            lines.append(fmt.format(label=name, c=c, r=r))
    if lines:
        ax.text(
            0.98,
            0.98,
            "\n".join(lines),
            transform=ax.transAxes,
            ha="right",
            va="top",
            fontsize=7,
            bbox=dict(boxstyle="round", facecolor="white", alpha=0.85, edgecolor="0.7"),
        )


def _save(fig, out_dir: Path, name: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for ext in ("png", "svg"):
        path = out_dir / f"{name}.{ext}"
        fig.savefig(path, metadata={"Date": None} if ext == "svg" else None)
        paths.append(path)
    plt.close(fig)
    return paths


# --- individual figures -------------------------------------------------------


def _render_table(bundle: Path, out_dir: Path, which: str):
    if which == "table1":
        cols = read_csv(
            bundle / "table1.csv",
            ("case", "energy", "ci_low", "ci_high", "n_runs", "reference"),
        )
        fig, ax = plt.subplots(figsize=(5.4, 3.4))
        pos = np.arange(len(cols["case"]))
        energy = cols["energy"]
        err = np.vstack([energy - cols["ci_low"], cols["ci_high"] - energy])
        ax.errorbar(pos, energy, yerr=err, fmt="o", capsize=4, label="computed")
        ax.plot(pos, cols["reference"], "x", ms=9, color="crimson", label="reference")
        ax.set_xticks(pos, [CASE_LABELS.get(c, c) for c in cols["case"]])
        ax.set_ylabel("time-averaged energy")
        for x, c, r in zip(pos, energy, cols["reference"]):
            ax.annotate(f"{c:.3f}\n({r:.3f})", (x, c), textcoords="offset points",
                        xytext=(8, -4), fontsize=7)
        ax.legend(loc="lower left")
        ax.set_title("expected energy per scenario (reference in parentheses)")
        return _save(fig, out_dir, "table1")

    cols = read_csv(
        bundle / "table2.csv",
        ("case", "mean", "mean_lo", "mean_hi", "sd", "sd_lo", "sd_hi",
         "reference_mean", "reference_sd"),
    )
    fig, axes = plt.subplots(1, 2, figsize=(7.6, 3.4))
    pos = np.arange(len(cols["case"]))
    labels = [CASE_LABELS.get(c, c) for c in cols["case"]]
    for ax, key, ref_key, title in (
        (axes[0], "mean", "reference_mean", "position mean"),
        (axes[1], "sd", "reference_sd", "position standard deviation"),
    ):
        err = np.vstack([cols[key] - cols[f"{key}_lo"], cols[f"{key}_hi"] - cols[key]])
        ax.errorbar(pos, cols[key], yerr=err, fmt="o", capsize=4, label="computed")
        ax.plot(pos, cols[ref_key], "x", ms=9, color="crimson", label="reference")
        ax.set_xticks(pos, labels, rotation=30)
        ax.set_title(title)
        for x, c, r in zip(pos, cols[key], cols[ref_key]):
            ax.annotate(f"{c:.3f}\n({r:.3f})", (x, c), textcoords="offset points",
                        xytext=(8, -4), fontsize=7)
    axes[0].legend(loc="best")
    fig.suptitle("time-averaged position statistics (reference in parentheses)")
    fig.tight_layout()
    return _save(fig, out_dir, "table2")


def _render_fig3(bundle: Path, out_dir: Path):
    files = sorted(bundle.glob("wigner_t*.csv"))
    if not files:
        raise FigureError(f"no wigner_t*.csv files in {bundle}")
    fig, axes = plt.subplots(1, len(files), figsize=(3.0 * len(files), 3.0))
    axes = np.atleast_1d(axes)
    for ax, path in zip(axes, files):
        cols = read_csv(path, ("x", "p", "w"))
        x = np.unique(cols["x"])
        p = np.unique(cols["p"])
        w = cols["w"].reshape(len(x), len(p))
        vmax = np.abs(w).max()
        im = ax.pcolormesh(x, p, w.T, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
        ax.axvline(5.0, color="k", ls="--", lw=0.8)
        ax.set_xlim(-12, 12)
        ax.set_xlabel("x")
        ax.set_title(path.stem.replace("wigner_", ""), fontsize=8)
    axes[0].set_ylabel("p")
    fig.colorbar(im, ax=axes, shrink=0.85)
    return _save(fig, out_dir, "fig3")


def _render_fig4(bundle: Path, out_dir: Path):
    cols = read_csv(bundle / "overlap.csv", ("t", "overlap"))
    fig, ax = plt.subplots(figsize=(6.4, 2.8))
    ax.plot(cols["t"], cols["overlap"], lw=0.5)
    ax.set_xlabel("t")
    ax.set_ylabel("|overlap with initial state|")
    fig.tight_layout()
    return _save(fig, out_dir, "fig4")


def _render_fig5(bundle: Path, out_dir: Path):
    cols = read_csv(bundle / "spectrum.csv", ("frequency", "amplitude"))
    fig, ax = plt.subplots(figsize=(6.4, 2.8))
    ax.plot(cols["frequency"], cols["amplitude"], lw=0.7)
    ax.set_xlim(0, 1.5)
    ax.set_xlabel("frequency (cycles per unit time)")
    ax.set_ylabel("amplitude")
    fig.tight_layout()
    return _save(fig, out_dir, "fig5")


def _render_fig6(bundle: Path, out_dir: Path):
    soft = read_csv(bundle / "eigenvalues.csv", ("n", "energy"))
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(soft["n"], soft["energy"], ".", ms=3, label="soft-impact well")
    harm_path = bundle / "eigenvalues_harmonic.csv"
    if harm_path.exists():
        harm = read_csv(harm_path, ("n", "energy"))
        ax.plot(harm["n"], harm["energy"], lw=0.8, color="crimson", label="harmonic")
    ax.set_xlabel("n")
    ax.set_ylabel("energy")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, out_dir, "fig6")


def _render_fig8(bundle: Path, out_dir: Path):
    refs = reference_lookup(read_summary(bundle))
    fig, ax = plt.subplots(figsize=(5.8, 3.6))
    for case in WALL_CASES:
        path = bundle / "cases" / case / "energy_probabilities.csv"
        cols = read_csv(path)
        ax.plot(cols["energy"], cols["probability"], lw=0.9, label=CASE_LABELS[case])
    ax.set_xlim(0, 60)
    ax.set_yscale("log")
    ax.set_ylim(1e-8, 1)
    ax.set_xlabel("energy eigenvalue")
    ax.set_ylabel("probability")
    ax.legend(loc="upper right", fontsize=7)
    annotate_references(ax, refs, [f"{c}.energy" for c in WALL_CASES])
    fig.tight_layout()
    return _save(fig, out_dir, "fig8")


def _render_fig9(bundle: Path, out_dir: Path):
    refs = reference_lookup(read_summary(bundle))
    fig, axes = plt.subplots(len(WALL_CASES), 1, figsize=(5.4, 8.6), sharex=True)
    for ax, case in zip(axes, WALL_CASES):
        cols = read_csv(bundle / "cases" / case / "position_pdf.csv")
        ax.plot(cols["x"], cols["pdf"], lw=0.9)
        ax.axvline(5.0, color="k", ls="--", lw=0.8)
        ax.set_ylabel(CASE_LABELS[case], fontsize=8)
        annotate_references(
            ax, refs, [f"{case}.mean", f"{case}.sd"],
            fmt="{label}: {c:.4f} (ref {r:.4f})",
        )
        ax.set_xlim(-12, 12)
    axes[-1].set_xlabel("x")
    fig.suptitle("time-averaged position densities (wall marked)")
    fig.tight_layout()
    return _save(fig, out_dir, "fig9")


def _render_fig11b(bundle: Path, out_dir: Path):
    cols = read_csv(bundle / "curves.csv")
    if "epsilon" not in cols or "a" not in cols:
        raise FigureError("curves.csv must carry epsilon and a columns")
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for eps in np.unique(cols["epsilon"]):
        sel = cols["epsilon"] == eps
        a = cols["a"][sel]
        small = cols["sigma_small"][sel]
        large = cols["sigma_large"][sel]
        loop_a = np.concatenate([a, a[::-1]])
        loop_s = np.concatenate([small, large[::-1]])
        ax.plot(loop_a, loop_s, lw=1.0, label=f"energy {eps:g}")
    ax.set_xlabel("packet center a")
    ax.set_ylabel("packet width sigma")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir, "fig11b")


def _render_fig13(bundle: Path, out_dir: Path):
    cols = read_csv(bundle / "energy_trace.csv", ("t", "e1", "e2", "e_total"))
    fig, ax = plt.subplots(figsize=(7.2, 3.0))
    ax.plot(cols["t"], cols["e1"], lw=0.9, label="particle 1")
    ax.plot(cols["t"], cols["e2"], lw=0.9, label="particle 2")
    ax.plot(cols["t"], cols["e_total"], lw=1.4, color="k", label="total")
    ax.set_xlabel("t")
    ax.set_ylabel("expected energy")
    ax.legend(loc="center right", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "fig13")


def _render_two_particle_pdfs(bundle: Path, out_dir: Path, name: str, cases: tuple):
    fig, axes = plt.subplots(len(cases), 1, figsize=(5.4, 2.2 * len(cases)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, case in zip(axes, cases):
        base = bundle / "cases" / case
        one = read_csv(base / "position_pdf_1.csv")
        two = read_csv(base / "position_pdf_2.csv")
        ax.plot(one["x"], one["pdf"], lw=0.9, label="particle 1")
        ax.plot(two["x"], two["pdf"], lw=0.9, label="particle 2")
        ax.axvline(-2.0, color="C0", ls="--", lw=0.7)
        ax.axvline(2.0, color="C1", ls="--", lw=0.7)
        ax.set_ylabel(case, fontsize=8)
        ax.set_xlim(-10, 10)
    axes[0].legend(fontsize=7)
    axes[-1].set_xlabel("x")
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_fig14(bundle: Path, out_dir: Path):
    return _render_two_particle_pdfs(bundle, out_dir, "fig14", ("none", "individual", "total"))


def _render_fig15(bundle: Path, out_dir: Path):
    return _render_two_particle_pdfs(bundle, out_dir, "fig15", ("individual", "total"))


_RENDERERS = {
    "table1": lambda b, o: _render_table(b, o, "table1"),
    "table2": lambda b, o: _render_table(b, o, "table2"),
    "fig3": _render_fig3,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "fig6": _render_fig6,
    "fig8": _render_fig8,
    "fig9": _render_fig9,
    "fig11b": _render_fig11b,
    "fig13": _render_fig13,
    "fig14": _render_fig14,
    "fig15": _render_fig15,
}

FIGURE_IDS = tuple(_RENDERERS)


def render(figure_id: str, data_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render one figure id from its bundle directory; returns written paths."""
    if figure_id not in _RENDERERS:
        raise FigureError(
            f"unknown figure id {figure_id!r}; known: {', '.join(FIGURE_IDS)}"
        )
    bundle = Path(data_dir)
    if not bundle.is_dir():
        raise FigureError(f"bundle directory not found: {bundle}")
    with plt.rc_context(RC):
        return _RENDERERS[figure_id](bundle, Path(out_dir))
