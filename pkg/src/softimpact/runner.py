"""Seeded run orchestration, ensembles, and emission of all tabular outputs.

A run is deterministic given (config, seed): member trajectories use Philox
substreams keyed by (seed, member_index), ensemble aggregation is indexed
by member, and CSV floats are written with 17 significant digits, so
re-running a configuration reproduces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import RunConfig
from .grids import EigenSystem, Harmonic, SoftImpact, build_grid, cached_eigensolve
from .observables import DistributionSummary, TimeSeries, spectrum, wigner
from .oracle import OscillatorSpec
from .states import SpectralState, Wavefunction, gaussian_packet, to_spectral
from .twobody import CollapseProtocol, TwoBodyRunResult, TwoParticleEngine
from .wall import WallPostulate, WallRunResult, run_wall_trajectory

OUTPUT_ROOT_ENV = "SOFTIMPACT_OUTPUT_ROOT"


# --- CSV / manifest helpers -------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def write_csv(path: Path, header: tuple[str, ...], columns) -> None:
    columns = [np.atleast_1d(c) for c in columns]
    n = len(columns[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(
        json.dumps(cfg.data, sort_keys=True).encode()
    ).hexdigest()


def write_manifest(cfg: RunConfig, outdir: Path, extra: dict | None = None) -> dict:
    outputs = {
        p.name: _sha256(p)
        for p in sorted(outdir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "kernel_lane": kernels.LANE,
        "config": cfg.data,
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def pdf_moments(x: np.ndarray, pdf: np.ndarray, dx: float):
    """(mean, sd, skewness, excess kurtosis) of a normalized density."""
    total = float(np.sum(pdf) * dx)
    p = pdf / total
    mean = float(np.sum(x * p) * dx)
    var = float(np.sum((x - mean) ** 2 * p) * dx)
    sd = float(np.sqrt(var))
    if sd == 0:
        return mean, 0.0, 0.0, 0.0
    z = (x - mean) / sd
    skew = float(np.sum(z**3 * p) * dx)
    kurt = float(np.sum(z**4 * p) * dx) - 3.0
    return mean, sd, skew, kurt


# --- scenario contexts -------------------------------------------------------


@dataclass
class WallContext:
    eigensystem: EigenSystem
    initial: SpectralState
    postulate: WallPostulate | None
    dt: float
    n_steps: int


def build_wall_context(cfg: RunConfig, cache_dir: Path | None = None) -> WallContext:
    run = cfg["run"]
    g = cfg["grid"]
    p = cfg["potential"]
    grid = build_grid(g["x_min"], g["x_max"], g["n_points"])
    if p["kind"] == "soft_impact":
        potential = SoftImpact(k1=p["k1"], k2=p["k2"], x_wall=p["x_wall"])
    else:
        potential = Harmonic(k=p["k"], center=p["center"])
    es = cached_eigensolve(potential, grid, p["mass"], run["n_modes"], cache_dir)
    psi0 = gaussian_packet(grid, cfg["initial"]["center"], cfg["initial"]["sigma"])
    initial = to_spectral(psi0, es, run["deficit_threshold"])
    postulate = None
    if cfg.scenario == "wall_collapse":
        w = cfg["wall_collapse"]
        postulate = WallPostulate(
            variant=w["postulate"],
            r=w["r"],
            sigma_post=w["sigma_post"],
            wall_position=w["wall_position"],
            refractory_steps=w["refractory_steps"],
            location_sampling=w["location_sampling"],
            threshold_mode=w["threshold_mode"],
        )
    return WallContext(es, initial, postulate, run["dt"], run["n_steps"])


def build_two_particle_engine(
    cfg: RunConfig, cache_dir: Path | None = None
) -> tuple[TwoParticleEngine, CollapseProtocol | None]:
    run = cfg["run"]
    g = cfg["grid"]
    tp = cfg["two_particle"]
    grid = build_grid(g["x_min"], g["x_max"], g["n_points"])
    osc1 = OscillatorSpec(mass=tp["m1"], k=tp["k1"], center=tp["c1"])
    osc2 = OscillatorSpec(mass=tp["m2"], k=tp["k2"], center=tp["c2"])
    n1 = tp["n_modes_1"] or run["n_modes"]
    n2 = tp["n_modes_2"] or run["n_modes"]
    es1 = cached_eigensolve(Harmonic(tp["k1"], tp["c1"]), grid, tp["m1"], n1, cache_dir)
    es2 = cached_eigensolve(Harmonic(tp["k2"], tp["c2"]), grid, tp["m2"], n2, cache_dir)
    engine = TwoParticleEngine(osc1, es1, osc2, es2)
    protocol = None
    if tp["protocol"] != "none":
        protocol = CollapseProtocol(
            variant=tp["protocol"],
            sigma_choice=tp["sigma_choice"],
            sampling_density=tp["sampling_density"],
            coupling=tp["lambda"],
            energy_match=tp["energy_match"],
            max_retries=tp["max_retries"],
        )
    return engine, protocol


# --- per-member summaries -----------------------------------------------------


@dataclass
class WallMemberStats:
    member: int
    time_avg_energy: float
    pdf_mean: float
    pdf_sd: float
    n_events: int
    pdf: np.ndarray = field(repr=False)
    mode_probabilities: np.ndarray = field(repr=False)


@dataclass
class TwoMemberStats:
    member: int
    mean1: float
    sd1: float
    skew1: float
    kurt1: float
    mean2: float
    sd2: float
    skew2: float
    kurt2: float
    mean_distance: float
    n_events: int
    skipped_events: int
    max_individual_drift: float
    max_total_drift: float
    max_particle_step: float
    pdf1: np.ndarray = field(repr=False)
    pdf2: np.ndarray = field(repr=False)


@dataclass
class WallScenarioResult:
    config: RunConfig
    eigensystem: EigenSystem
    members: list[WallMemberStats]
    pdf: np.ndarray
    pdf_se: np.ndarray
    mode_probabilities: np.ndarray
    mode_se: np.ndarray
    single: WallRunResult | None = None

    @property
    def energies(self) -> np.ndarray:
        return np.array([m.time_avg_energy for m in self.members])

    def summary(self) -> DistributionSummary:
        grid = self.eigensystem.grid
        return DistributionSummary.from_pdf(grid.x, self.pdf, grid.dx)


@dataclass
class TwoParticleScenarioResult:
    config: RunConfig
    engine: TwoParticleEngine
    members: list[TwoMemberStats]
    pdf1: np.ndarray
    pdf1_se: np.ndarray
    pdf2: np.ndarray
    pdf2_se: np.ndarray
    single: TwoBodyRunResult | None = None


def _wall_stats_from(member: int, result: WallRunResult) -> WallMemberStats:
    grid = result.eigensystem.grid
    mean, sd, _, _ = pdf_moments(grid.x, result.pdf, grid.dx)
    return WallMemberStats(
        member=member,
        time_avg_energy=result.time_averaged_energy,
        pdf_mean=mean,
        pdf_sd=sd,
        n_events=len(result.events),
        pdf=result.pdf,
        mode_probabilities=result.mode_probabilities,
    )


def _wall_member_stats(member: int, ctx: WallContext, seed: int) -> WallMemberStats:
    result = run_wall_trajectory(
        ctx.initial, ctx.dt, ctx.n_steps, ctx.postulate, seed, stream=member
    )
    return _wall_stats_from(member, result)


def _two_stats_from(
    member: int,
    result: TwoBodyRunResult,
    grid,
    distance_matrix: np.ndarray | None = None,
) -> TwoMemberStats:
    m1, s1, g1, k1 = pdf_moments(grid.x, result.pdf1, grid.dx)
    m2, s2, g2, k2 = pdf_moments(grid.x, result.pdf2, grid.dx)
    p1 = result.pdf1 / (np.sum(result.pdf1) * grid.dx)
    p2 = result.pdf2 / (np.sum(result.pdf2) * grid.dx)
    if distance_matrix is None:
        distance_matrix = np.abs(grid.x[:, None] - grid.x[None, :])
    mean_distance = float(p1 @ distance_matrix @ p2) * grid.dx * grid.dx

    drift_i = 0.0
    drift_t = 0.0
    step_e = 0.0
    for ev in result.events:
        drift_i = max(drift_i, abs(ev.e1_post - ev.e1_pre), abs(ev.e2_post - ev.e2_pre))
        drift_t = max(
            drift_t, abs((ev.e1_post + ev.e2_post) - (ev.e1_pre + ev.e2_pre))
        )
        step_e = max(step_e, abs(ev.e1_post - ev.e1_pre))
    return TwoMemberStats(
        member=member,
        mean1=m1,
        sd1=s1,
        skew1=g1,
        kurt1=k1,
        mean2=m2,
        sd2=s2,
        skew2=g2,
        kurt2=k2,
        mean_distance=mean_distance,
        n_events=len(result.events),
        skipped_events=result.skipped_events,
        max_individual_drift=drift_i,
        max_total_drift=drift_t,
        max_particle_step=step_e,
        pdf1=result.pdf1,
        pdf2=result.pdf2,
    )


# --- worker processes ----------------------------------------------------------
#
# Ensemble members run in separate processes; each worker builds its context
# once (pool initializer) and then serves member indices.  pool.map returns
# results in member order, so aggregation never depends on scheduling.

_WORKER: dict = {}


def _init_wall_worker(config_data: dict, cache_dir):
    cfg = RunConfig(config_data)
    _WORKER["ctx"] = build_wall_context(cfg, cache_dir)
    _WORKER["seed"] = cfg.seed


def _run_wall_member(member: int) -> WallMemberStats:
    return _wall_member_stats(member, _WORKER["ctx"], _WORKER["seed"])


def _init_two_worker(config_data: dict, cache_dir):
    cfg = RunConfig(config_data)
    engine, protocol = build_two_particle_engine(cfg, cache_dir)
    tp = cfg["two_particle"]
    grid = engine.grid
    _WORKER.update(
        {
            "engine": engine,
            "protocol": protocol,
            "initial": engine.initial_state(tp["a0_1"], tp["a0_2"], tp["sigma0"]),
            "dt": cfg["run"]["dt"],
            "n_steps": cfg["run"]["n_steps"],
            "seed": cfg.seed,
            "distance": np.abs(grid.x[:, None] - grid.x[None, :]),
        }
    )


def _run_two_member(member: int) -> TwoMemberStats:
    engine = _WORKER["engine"]
    result = engine.run(
        _WORKER["initial"],
        _WORKER["dt"],
        _WORKER["n_steps"],
        _WORKER["protocol"],
        _WORKER["seed"],
        stream=member,
    )
    return _two_stats_from(member, result, engine.grid, _WORKER["distance"])


def _aggregate(arrays: list[np.ndarray]):
    stack = np.stack(arrays)
    mean = stack.mean(axis=0)
    if len(arrays) > 1:
        se = stack.std(axis=0, ddof=1) / np.sqrt(len(arrays))
    else:
        se = np.zeros_like(mean)
    return mean, se


# --- scenario execution ----------------------------------------------------------


def simulate_wall(
    cfg: RunConfig, workers: int = 1, cache_dir: Path | None = None
) -> WallScenarioResult:
    n_members = cfg.ensemble_size
    ctx = build_wall_context(cfg, cache_dir)

    single = None
    if n_members == 1:
        run_cfg = cfg["run"]
        stride = 0
        if run_cfg["store_snapshots"] or cfg["observables"]["wigner_times"]:
            stride = run_cfg["snapshot_stride"]
        single = run_wall_trajectory(
            ctx.initial, ctx.dt, ctx.n_steps, ctx.postulate, cfg.seed, 0, stride
        )
        stats = [_wall_stats_from(0, single)]
    elif workers <= 1:
        stats = [_wall_member_stats(m, ctx, cfg.seed) for m in range(n_members)]
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_wall_worker,
            initargs=(cfg.data, cache_dir),
        ) as pool:
            stats = list(pool.map(_run_wall_member, range(n_members)))

    pdf, pdf_se = _aggregate([m.pdf for m in stats])
    prob, prob_se = _aggregate([m.mode_probabilities for m in stats])
    return WallScenarioResult(
        config=cfg,
        eigensystem=ctx.eigensystem,
        members=stats,
        pdf=pdf,
        pdf_se=pdf_se,
        mode_probabilities=prob,
        mode_se=prob_se,
        single=single,
    )


def simulate_two_particle(
    cfg: RunConfig, workers: int = 1, cache_dir: Path | None = None
) -> TwoParticleScenarioResult:
    n_members = cfg.ensemble_size
    engine, protocol = build_two_particle_engine(cfg, cache_dir)
    tp = cfg["two_particle"]
    run_cfg = cfg["run"]

    single = None
    if n_members == 1:
        initial = engine.initial_state(tp["a0_1"], tp["a0_2"], tp["sigma0"])
        single = engine.run(
            initial, run_cfg["dt"], run_cfg["n_steps"], protocol, cfg.seed, 0
        )
        stats = [_two_stats_from(0, single, engine.grid)]
    elif workers <= 1:
        initial = engine.initial_state(tp["a0_1"], tp["a0_2"], tp["sigma0"])
        grid = engine.grid
        distance = np.abs(grid.x[:, None] - grid.x[None, :])
        stats = [
            _two_stats_from(
                m,
                engine.run(initial, run_cfg["dt"], run_cfg["n_steps"], protocol, cfg.seed, m),
                grid,
                distance,
            )
            for m in range(n_members)
        ]
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_two_worker,
            initargs=(cfg.data, cache_dir),
        ) as pool:
            stats = list(pool.map(_run_two_member, range(n_members)))

    pdf1, pdf1_se = _aggregate([m.pdf1 for m in stats])
    pdf2, pdf2_se = _aggregate([m.pdf2 for m in stats])
    return TwoParticleScenarioResult(
        config=cfg,
        engine=engine,
        members=stats,
        pdf1=pdf1,
        pdf1_se=pdf1_se,
        pdf2=pdf2,
        pdf2_se=pdf2_se,
        single=single,
    )


# --- output writing -----------------------------------------------------------------


def _write_wall_outputs(result: WallScenarioResult, outdir: Path) -> None:
    cfg = result.config
    es = result.eigensystem
    grid = es.grid
    x = grid.x
    n_modes = es.n_kept

    write_csv(
        outdir / "eigenvalues.csv",
        ("n", "energy"),
        (np.arange(n_modes), es.energies),
    )
    if cfg.ensemble_size == 1:
        write_csv(
            outdir / "position_pdf.csv", ("x", "pdf"), (x, result.pdf)
        )
        write_csv(
            outdir / "energy_probabilities.csv",
            ("n", "energy", "probability"),
            (np.arange(n_modes), es.energies, result.mode_probabilities),
        )
    else:
        write_csv(
            outdir / "position_pdf.csv",
            ("x", "pdf", "pdf_se"),
            (x, result.pdf, result.pdf_se),
        )
        write_csv(
            outdir / "energy_probabilities.csv",
            ("n", "energy", "probability", "probability_se"),
            (np.arange(n_modes), es.energies, result.mode_probabilities, result.mode_se),
        )
        write_csv(
            outdir / "members.csv",
            ("member", "time_avg_energy", "pdf_mean", "pdf_sd", "n_events"),
            (
                [m.member for m in result.members],
                [m.time_avg_energy for m in result.members],
                [m.pdf_mean for m in result.members],
                [m.pdf_sd for m in result.members],
                [m.n_events for m in result.members],
            ),
        )

    single = result.single
    if single is None:
        return
    write_csv(outdir / "overlap.csv", ("t", "overlap"), (single.t, single.overlap))
    write_csv(outdir / "energy_trace.csv", ("t", "energy"), (single.t, single.energy))
    freqs, amps = spectrum(TimeSeries(single.t, single.overlap))
    write_csv(outdir / "spectrum.csv", ("frequency", "amplitude"), (freqs, amps))
    if cfg.scenario == "wall_collapse":
        write_csv(
            outdir / "events.csv",
            ("step", "t", "location", "pre_E", "post_E", "threshold"),
            (
                [e.step_index for e in single.events],
                [e.time for e in single.events],
                [e.location for e in single.events],
                [e.pre_energy for e in single.events],
                [e.post_energy for e in single.events],
                [e.threshold_used for e in single.events],
            ),
        )

    obs = cfg["observables"]
    if single.snapshots is not None:
        if cfg["run"]["store_snapshots"]:
            np.savez_compressed(
                outdir / "snapshots.npz",
                coefficients=single.snapshots,
                stride=single.snapshot_stride,
                dt=cfg["run"]["dt"],
            )
        dt = cfg["run"]["dt"]
        stride = single.snapshot_stride
        x_stride = obs["wigner_x_stride"]
        for t_req in obs["wigner_times"]:
            snap = int(round(t_req / (dt * stride)))
            snap = min(max(snap, 0), single.snapshots.shape[0] - 1)
            state = single.snapshot_state(snap)
            psi = kernels.reconstruct(es.states, state.coefficients)
            norm = np.sqrt(np.sum(psi.real**2 + psi.imag**2) * grid.dx)
            wf = Wavefunction(psi / norm, grid)
            field = wigner(wf, obs["wigner_p_count"], obs["wigner_p_max"])
            xs = field.values[::x_stride]
            xx = np.repeat(x[::x_stride], len(field.p))
            pp = np.tile(field.p, len(x[::x_stride]))
            t_actual = snap * stride * dt
            write_csv(
                outdir / f"wigner_t{t_actual:g}.csv",
                ("x", "p", "w"),
                (xx, pp, xs.ravel()),
            )


def _write_two_outputs(result: TwoParticleScenarioResult, outdir: Path) -> None:
    cfg = result.config
    grid = result.engine.grid
    x = grid.x
    if cfg.ensemble_size == 1:
        write_csv(outdir / "position_pdf_1.csv", ("x", "pdf"), (x, result.pdf1))
        write_csv(outdir / "position_pdf_2.csv", ("x", "pdf"), (x, result.pdf2))
    else:
        write_csv(
            outdir / "position_pdf_1.csv",
            ("x", "pdf", "pdf_se"),
            (x, result.pdf1, result.pdf1_se),
        )
        write_csv(
            outdir / "position_pdf_2.csv",
            ("x", "pdf", "pdf_se"),
            (x, result.pdf2, result.pdf2_se),
        )
        m = result.members
        write_csv(
            outdir / "members.csv",
            (
                "member",
                "mean1",
                "sd1",
                "skew1",
                "kurt1",
                "mean2",
                "sd2",
                "skew2",
                "kurt2",
                "mean_distance",
                "n_events",
            ),
            (
                [s.member for s in m],
                [s.mean1 for s in m],
                [s.sd1 for s in m],
                [s.skew1 for s in m],
                [s.kurt1 for s in m],
                [s.mean2 for s in m],
                [s.sd2 for s in m],
                [s.skew2 for s in m],
                [s.kurt2 for s in m],
                [s.mean_distance for s in m],
                [s.n_events for s in m],
            ),
        )

    single = result.single
    if single is None:
        return
    write_csv(
        outdir / "energy_trace.csv",
        ("t", "e1", "e2", "e_total"),
        (single.t, single.e1, single.e2, single.e_total),
    )
    protocol = cfg["two_particle"]["protocol"]
    if protocol != "none":
        write_csv(
            outdir / "events.csv",
            ("step", "t", "a", "e1_pre", "e1_post", "e2_pre", "e2_post", "protocol"),
            (
                [e.step_index for e in single.events],
                [e.time for e in single.events],
                [e.location for e in single.events],
                [e.e1_pre for e in single.events],
                [e.e1_post for e in single.events],
                [e.e2_pre for e in single.events],
                [e.e2_post for e in single.events],
                [protocol] * len(single.events),
            ),
        )


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def run(
    cfg: RunConfig,
    outdir: str | Path,
    workers: int = 1,
    cache_dir: Path | None = None,
):
    """Execute a configured scenario and write its output bundle.

    Returns (manifest, scenario result).
    """
    outdir = output_root() / Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    if cfg.scenario in ("wall_unitary", "wall_collapse"):
        result = simulate_wall(cfg, workers, cache_dir)
        _write_wall_outputs(result, outdir)
        extra = {
            "n_members": cfg.ensemble_size,
            "events_per_member": [m.n_events for m in result.members],
        }
    else:
        result = simulate_two_particle(cfg, workers, cache_dir)
        _write_two_outputs(result, outdir)
        extra = {
            "n_members": cfg.ensemble_size,
            "events_per_member": [m.n_events for m in result.members],
            "skipped_events": [m.skipped_events for m in result.members],
        }
    manifest = write_manifest(cfg, outdir, extra)
    return manifest, result
