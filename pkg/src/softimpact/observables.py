"""Diagnostics computed from trajectories: phase-space, spectral and
position-space summaries.

All functions are pure; they never mutate their inputs and are safe to run
concurrently over shared read-only trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import HBAR, SpatialGrid
from .states import SpectralState, Wavefunction, expected_energy, to_spectral

__all__ = [
    "TimeSeries",
    "WignerField",
    "DistributionSummary",
    "wigner",
    "overlap_series",
    "spectrum",
    "zero_one_chaos_test",
    "energy_probabilities",
    "position_statistics",
    "expected_energy",
]


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.t) != len(self.values):
            raise ValueError("t and values must have equal length")
        if len(self.t) >= 2:
            dt = np.diff(self.t)
            if dt[0] <= 0 or not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
                raise ValueError("time axis must be uniform and increasing")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass(frozen=True)
class WignerField:
    values: np.ndarray  # (n_x, n_p), real
    x_grid: SpatialGrid
    p: np.ndarray

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dp

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.x_grid.dx

    def total(self) -> float:
        return float(self.values.sum() * self.x_grid.dx * self.dp)


@dataclass(frozen=True)
class DistributionSummary:
    pdf: np.ndarray
    x: np.ndarray
    mean: float
    sd: float

    @classmethod
    def from_pdf(cls, x: np.ndarray, pdf: np.ndarray, dx: float) -> "DistributionSummary":
        total = float(np.sum(pdf) * dx)
        pdf = pdf / total
        mean = float(np.sum(x * pdf) * dx)
        var = float(np.sum((x - mean) ** 2 * pdf) * dx)
        return cls(pdf=pdf, x=x, mean=mean, sd=float(np.sqrt(var)))


def wigner(psi: Wavefunction, p_count: int = 400, p_max: float = 10.0) -> WignerField:
    """Phase-space quasiprobability of psi.

    W(x, p) = (1 / pi hbar) Int dy psi*(x+y) psi(x-y) exp(2 i p y / hbar)

    evaluated with y on the grid (spacing dx) and psi taken as zero outside
    the grid, so the y range shrinks symmetrically toward the edges.  The
    y-symmetry of the integrand makes W real; the imaginary part is exactly
    dropped after asserting it is numerically negligible.
    """
    if p_count < 2:
        raise ValueError(f"p_count must be >= 2, got {p_count}")
    a = psi.amplitudes
    n = len(a)
    dx = psi.grid.dx
    p = np.linspace(-p_max, p_max, p_count)
    n_lag = (n - 1) // 2 + 1  # largest usable lag is min(i, n-1-i); j=0 is the density term

    y = dx * np.arange(n_lag)
    cos_m = np.cos(2.0 * np.outer(y, p) / HBAR)
    sin_m = np.sin(2.0 * np.outer(y, p) / HBAR)
    cos_m[1:] *= 2.0  # fold the j<0 half of the sum into j>0
    sin_m[1:] *= 2.0

    values = np.empty((n, p_count))
    chunk = 256
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        c_re = np.zeros((len(idx), n_lag))
        c_im = np.zeros((len(idx), n_lag))
        for row, i in enumerate(idx):
            j_max = min(i, n - 1 - i)
            plus = a[i : i + j_max + 1]
            minus = a[i : i - j_max - 1 if i > j_max else None : -1]
            corr = np.conj(plus) * minus
            c_re[row, : j_max + 1] = corr.real
            c_im[row, : j_max + 1] = corr.imag
        values[idx] = c_re @ cos_m - c_im @ sin_m

    values *= dx / (np.pi * HBAR)
    return WignerField(values=values, x_grid=psi.grid, p=p)


def overlap_series(
    trajectory: list[SpectralState], psi0: Wavefunction, dt: float
) -> TimeSeries:
    """|<psi0 | psi(t_k)>| along a trajectory, computed in coefficients."""
    if not trajectory:
        raise ValueError("empty trajectory")
    c0 = to_spectral(psi0, trajectory[0].eigensystem).coefficients
    vals = np.array([abs(np.vdot(c0, s.coefficients)) for s in trajectory])
    t = dt * np.arange(len(vals))
    return TimeSeries(t=t, values=vals)


def spectrum(ts: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude spectrum of a uniformly sampled series, mean removed.

    Returns (frequencies in cycles per unit time, amplitudes); only the
    non-negative frequencies of the real transform are reported.
    """
    if len(ts.values) < 2:
        raise ValueError("need at least 2 samples")
    vals = ts.values - np.mean(ts.values)
    amps = np.abs(np.fft.rfft(vals))
    freqs = np.fft.rfftfreq(len(vals), d=ts.dt)
    return freqs, amps


def _msd_profile(z: np.ndarray, n_cut: int) -> np.ndarray:
    """Mean-square displacement of a complex walk for lags 1..n_cut, via FFT."""
    n = len(z)
    w = z.real**2 + z.imag**2
    cum_w = np.concatenate(([0.0], np.cumsum(w)))
    total = cum_w[-1]
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.fft(z, size)
    acf = np.fft.ifft(f * np.conj(f))[:n].real  # acf[n] = sum_k Re z*_k z_{k+n}
    lags = np.arange(1, n_cut + 1)
    counts = n - lags
    a = cum_w[n - lags] + (total - cum_w[lags])
    return (a - 2.0 * acf[lags]) / counts


def zero_one_chaos_test(ts: TimeSeries, n_c: int = 100, seed: int = 1234) -> float:
    """Binary chaos indicator K for a scalar series: ~0 regular, ~1 chaotic.

    For each random frequency c in (pi/5, 4pi/5) the series drives a 2-D
    walk p_k + i q_k = sum_j phi_j exp(i j c); K_c is the correlation of the
    walk's (oscillation-corrected) mean-square displacement with lag time,
    cut off at one tenth of the series length.  K is the median over n_c
    frequencies, clamped to [0, 1].
    """
    phi = np.asarray(ts.values, dtype=float)
    n = len(phi)
    if n < 1000:
        raise ValueError(f"series too short for the 0-1 test: {n} < 1000")
    if n_c < 50:
        raise ValueError(f"n_c must be >= 50, got {n_c}")
    n_cut = n // 10
    mean_sq = np.mean(phi) ** 2
    lags = np.arange(1.0, n_cut + 1)
    rng = np.random.Generator(np.random.Philox(seed))
    ks = np.empty(n_c)
    j = np.arange(n)
    for m in range(n_c):
        c = np.pi / 5 + rng.random() * 3 * np.pi / 5
        z = np.cumsum(phi * np.exp(1j * j * c))
        msd = _msd_profile(z, n_cut)
        d = msd - mean_sq * (1.0 - np.cos(lags * c)) / (1.0 - np.cos(c))
        sd = np.std(d)
        if sd == 0.0:
            ks[m] = 0.0
        else:
            ks[m] = np.corrcoef(lags, d)[0, 1]
    return float(np.clip(np.median(ks), 0.0, 1.0))


def energy_probabilities(samples: list[SpectralState]) -> np.ndarray:
    """P(E_n): average |c_n|^2 over the samples (sums to 1 minus deficit)."""
    if not samples:
        raise ValueError("empty sample set")
    acc = np.zeros(samples[0].eigensystem.n_kept)
    for s in samples:
        c = s.coefficients
        acc += c.real**2 + c.imag**2
    return acc / len(samples)


def position_statistics(trajectory: list[Wavefunction]) -> DistributionSummary:
    """Time-averaged position density with its mean and standard deviation."""
    if not trajectory:
        raise ValueError("empty trajectory")
    grid = trajectory[0].grid
    acc = np.zeros(grid.n_points)
    for psi in trajectory:
        rho = psi.density()
        acc += rho / (np.sum(rho) * grid.dx)
    return DistributionSummary.from_pdf(grid.x, acc / len(trajectory), grid.dx)
