"""Pinned configurations that regenerate the published tables and figures.

Each bundle id runs a fixed parameter set, writes its data files under the
bundle directory (multi-case bundles use cases/<name>/ subruns), and emits
a summary.json comparing computed values to the bundled reference numbers
where those exist.  `quick=True` shrinks steps and ensembles for smoke
tests; it is marked in the summary and not meant for comparisons.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import resolve_config
from .grids import Harmonic, SoftImpact, build_grid, eigensolve
from .oracle import OscillatorSpec, constant_energy_curve
from .reference import (
    BASELINE,
    REFERENCE_ENERGY,
    REFERENCE_POSITION,
    WALL_CASES,
    two_particle_raw_config,
    wall_case_raw_config,
)
from .runner import output_root, run, write_csv

BUNDLE_IDS = (
    "table1",
    "table2",
    "fig3",
    "fig4",
    "fig5",
    "fig6",
    "fig8",
    "fig9",
    "fig11b",
    "fig13",
    "fig14",
    "fig15",
)


def _write_summary(outdir: Path, bundle_id: str, entries: list[dict], quick: bool):
    summary = {"id": bundle_id, "quick": quick, "entries": entries}
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _entry(name, computed, reference=None, **extra):
    e = {"name": name, "computed": computed}
    if reference is not None:
        e["reference"] = reference
        if reference != 0:
            e["rel_diff"] = (computed - reference) / abs(reference)
    e.update(extra)
    return e


def _wall_suite(outdir: Path, workers: int, quick: bool):
    """Run the five wall scenarios into cases/<name>/ and return the results."""
    ensemble = 4 if quick else 100
    n_steps = 300 if quick else None
    results = {}
    for case in WALL_CASES:
        raw = wall_case_raw_config(case, ensemble_size=ensemble, n_steps=n_steps)
        cfg = resolve_config(raw)
        _, result = run(cfg, outdir / "cases" / case, workers=workers)
        results[case] = result
    return results


def _energy_stats(result):
    energies = result.energies
    if len(energies) == 1:
        return float(energies[0]), float(energies[0]), float(energies[0])
    lo, hi = np.percentile(energies, [2.5, 97.5])
    return float(np.mean(energies)), float(lo), float(hi)


def _bundle_table1(outdir: Path, workers: int, quick: bool):
    results = _wall_suite(outdir, workers, quick)
    rows, entries = [], []
    for case in WALL_CASES:
        mean, lo, hi = _energy_stats(results[case])
        ref = REFERENCE_ENERGY[case]
        rows.append((case, mean, lo, hi, len(results[case].members), ref))
        entries.append(_entry(f"{case}.energy", mean, ref, ci_low=lo, ci_high=hi))
    write_csv(
        outdir / "table1.csv",
        ("case", "energy", "ci_low", "ci_high", "n_runs", "reference"),
        list(zip(*rows)),
    )
    return entries


def _bundle_table2(outdir: Path, workers: int, quick: bool):
    results = _wall_suite(outdir, workers, quick)
    rows, entries = [], []
    for case in WALL_CASES:
        res = results[case]
        means = np.array([m.pdf_mean for m in res.members])
        sds = np.array([m.pdf_sd for m in res.members])
        ref_mean, ref_sd = REFERENCE_POSITION[case]
        if len(means) == 1:
            m_lo = m_hi = float(means[0])
            s_lo = s_hi = float(sds[0])
        else:
            m_lo, m_hi = (float(v) for v in np.percentile(means, [2.5, 97.5]))
            s_lo, s_hi = (float(v) for v in np.percentile(sds, [2.5, 97.5]))
        rows.append(
            (case, float(np.mean(means)), m_lo, m_hi, float(np.mean(sds)), s_lo, s_hi,
             ref_mean, ref_sd)
        )
        entries.append(_entry(f"{case}.mean", float(np.mean(means)), ref_mean,
                              ci_low=m_lo, ci_high=m_hi))
        entries.append(_entry(f"{case}.sd", float(np.mean(sds)), ref_sd,
                              ci_low=s_lo, ci_high=s_hi))
    write_csv(
        outdir / "table2.csv",
        ("case", "mean", "mean_lo", "mean_hi", "sd", "sd_lo", "sd_hi",
         "reference_mean", "reference_sd"),
        list(zip(*rows)),
    )
    return entries


def _unitary_raw(quick: bool, **extra_obs):
    raw = wall_case_raw_config("no_collapse", n_steps=1000 if quick else None)
    if extra_obs:
        raw["observables"] = extra_obs
    return raw


def _bundle_fig3(outdir: Path, workers: int, quick: bool):
    raw = _unitary_raw(quick, wigner_times=[0.0, 2.5, 5.0, 7.5])
    raw["run"]["snapshot_stride"] = 5
    raw["run"]["n_steps"] = 200 if quick else 2000
    _, result = run(resolve_config(raw), outdir, workers=workers)
    return [_entry("snapshots", len(result.single.snapshots))]


def _bundle_fig4(outdir: Path, workers: int, quick: bool):
    _, result = run(resolve_config(_unitary_raw(quick)), outdir, workers=workers)
    return [_entry("overlap_t0", float(result.single.overlap[0]), 1.0)]


def _bundle_fig5(outdir: Path, workers: int, quick: bool):
    _, result = run(resolve_config(_unitary_raw(quick)), outdir, workers=workers)
    return [_entry("samples", len(result.single.overlap))]


def _bundle_fig6(outdir: Path, workers: int, quick: bool):
    n_modes = 60 if quick else 260
    b = BASELINE
    grid = build_grid(**b["grid"])
    soft = eigensolve(
        SoftImpact(b["potential"]["k1"], b["potential"]["k2"], b["potential"]["x_wall"]),
        grid,
        b["potential"]["mass"],
        n_modes,
    )
    harm = eigensolve(Harmonic(b["potential"]["k1"], 0.0), grid, b["potential"]["mass"], n_modes)
    n = np.arange(n_modes)
    write_csv(outdir / "eigenvalues.csv", ("n", "energy"), (n, soft.energies))
    write_csv(outdir / "eigenvalues_harmonic.csv", ("n", "energy"), (n, harm.energies))
    return [
        _entry("ground_energy", float(soft.energies[0]), 0.5),
        _entry("n_modes", n_modes),
    ]


def _bundle_fig8(outdir: Path, workers: int, quick: bool):
    results = _wall_suite(outdir, workers, quick)
    entries = []
    for case in WALL_CASES:
        mean, lo, hi = _energy_stats(results[case])
        entries.append(_entry(f"{case}.energy", mean, REFERENCE_ENERGY[case]))
    return entries


def _bundle_fig9(outdir: Path, workers: int, quick: bool):
    results = _wall_suite(outdir, workers, quick)
    entries = []
    for case in WALL_CASES:
        summary = results[case].summary()
        ref_mean, ref_sd = REFERENCE_POSITION[case]
        entries.append(_entry(f"{case}.mean", summary.mean, ref_mean))
        entries.append(_entry(f"{case}.sd", summary.sd, ref_sd))
    return entries


def _bundle_fig11b(outdir: Path, workers: int, quick: bool):
    osc = OscillatorSpec(mass=1.0, k=1.0, center=-2.0)
    epsilons = (2.0, 5.125, 10.0)
    cols = {"epsilon": [], "a": [], "sigma_small": [], "sigma_large": []}
    for eps in epsilons:
        curve = constant_energy_curve(eps, osc, n_samples=101 if quick else 401)
        cols["epsilon"].extend([eps] * len(curve))
        cols["a"].extend(curve[:, 0])
        cols["sigma_small"].extend(curve[:, 1])
        cols["sigma_large"].extend(curve[:, 2])
    write_csv(
        outdir / "curves.csv",
        ("epsilon", "a", "sigma_small", "sigma_large"),
        (cols["epsilon"], cols["a"], cols["sigma_small"], cols["sigma_large"]),
    )
    return [_entry("epsilon_count", len(epsilons))]


def _bundle_fig13(outdir: Path, workers: int, quick: bool):
    raw = two_particle_raw_config("total", n_steps=200 if quick else 1000)
    _, result = run(resolve_config(raw), outdir, workers=workers)
    drift = float(np.max(np.abs(result.single.e_total - result.single.e_total[0])))
    return [
        _entry("total_energy_drift", drift, 0.0),
        _entry("n_events", len(result.single.events)),
    ]


def _two_particle_cases(outdir: Path, workers: int, quick: bool, dissimilar: bool,
                        protocols) -> list[dict]:
    ensemble = 2 if quick else 10
    n_steps = 300 if quick else 10000
    entries = []
    for protocol in protocols:
        raw = two_particle_raw_config(
            protocol, ensemble_size=ensemble, n_steps=n_steps, dissimilar=dissimilar
        )
        cfg = resolve_config(raw)
        _, result = run(cfg, outdir / "cases" / protocol, workers=workers)
        mean1 = float(np.mean([m.mean1 for m in result.members]))
        mean2 = float(np.mean([m.mean2 for m in result.members]))
        dist = float(np.mean([m.mean_distance for m in result.members]))
        entries.append(_entry(f"{protocol}.mean1", mean1))
        entries.append(_entry(f"{protocol}.mean2", mean2))
        entries.append(_entry(f"{protocol}.mean_distance", dist))
    return entries


def _bundle_fig14(outdir: Path, workers: int, quick: bool):
    return _two_particle_cases(
        outdir, workers, quick, dissimilar=False, protocols=("none", "individual", "total")
    )


def _bundle_fig15(outdir: Path, workers: int, quick: bool):
    return _two_particle_cases(
        outdir, workers, quick, dissimilar=True, protocols=("individual", "total")
    )


_BUNDLES = {
    "table1": _bundle_table1,
    "table2": _bundle_table2,
    "fig3": _bundle_fig3,
    "fig4": _bundle_fig4,
    "fig5": _bundle_fig5,
    "fig6": _bundle_fig6,
    "fig8": _bundle_fig8,
    "fig9": _bundle_fig9,
    "fig11b": _bundle_fig11b,
    "fig13": _bundle_fig13,
    "fig14": _bundle_fig14,
    "fig15": _bundle_fig15,
}


def reproduce(bundle_id: str, outdir: str | Path, workers: int = 1, quick: bool = False):
    """Run the pinned configuration for a bundle id and write its outputs."""
    if bundle_id not in _BUNDLES:
        raise ValueError(
            f"unknown bundle id {bundle_id!r}; known ids: {', '.join(BUNDLE_IDS)}"
        )
    outdir = output_root() / Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = _BUNDLES[bundle_id](outdir, workers, quick)
    return _write_summary(outdir, bundle_id, entries, quick)
