"""Stochastic integration of the Langevin models and spectral estimation.

The integrator is the semi-implicit midpoint scheme (two midpoint iterations
by default), which converges to the Stratonovich solution of the models'
multiplicative-noise equations. Trajectories are driven by per-trajectory
counter-based streams (numpy Philox keyed by ``SeedSequence((seed, index))``),
so ensembles are reproducible and their averages do not depend on how the
work is batched across workers.

Gaussian increments follow the uniform-pair recipe
``r(z, z') = sqrt(-ln z) cos(2 pi z')`` (a Box-Muller cosine branch, variance
1/2), scaled so each real increment has variance ``dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class EnsembleFailure(RuntimeError):
    """Raised when the failed-trajectory fraction reaches the abort limit."""


class ResolutionError(ValueError):
    """Requested lag or frequency resolution exceeds what the record allows."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepping and ensemble parameters (all times dimensionless).

    ``save_every`` subsamples the save grid in units of steps; ``batch_size``
    and ``noise_chunk`` only control memory/work chunking and do not affect
    the statistics.
    """

    dt: float
    t_end: float
    trajectories: int = 1
    seed: int = 0
    midpoint_iterations: int = 2
    burn_in: float = 0.0
    save_every: int = 1
    batch_size: int = 8192
    noise_chunk: int = 256
    max_failure_rate: float = 0.01

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= self.burn_in or self.burn_in < 0:
            raise ValueError("need dt > 0 and t_end > burn_in >= 0")
        if self.midpoint_iterations < 1 or self.trajectories < 1 or self.save_every < 1:
            raise ValueError("midpoint_iterations, trajectories, save_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """The documented per-trajectory stream: Philox keyed by (seed, index)."""
    key = np.random.SeedSequence((seed, index)).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_increment(rng: np.random.Generator, dt: float, shape=()):
    """Gaussian increments of variance ``dt`` per real component.

    Each deviate consumes a uniform pair (z, z'); z = 0 draws are remapped
    into (0, 1] by using 1 - U with U uniform on [0, 1). Compose two real
    increments for a complex one.
    """
    if isinstance(shape, int):
        shape = (shape,)
    z = 1.0 - rng.random(shape)
    zp = rng.random(shape)
    return np.sqrt(-2.0 * dt * np.log(z)) * np.cos(2.0 * math.pi * zp)


def _noise_block(rngs, n_steps, n_noises, dt):
    """Increments for a batch of trajectories: (n_steps, n_noises, n_traj)."""
    out = np.empty((len(rngs), n_steps, n_noises))
    for i, rng in enumerate(rngs):
        out[i] = gaussian_increment(rng, dt, (n_steps, n_noises))
    return np.ascontiguousarray(np.moveaxis(out, 0, 2))


def _apply_noise(model, state, dW):
    noise_dot = getattr(model, "noise_dot", None)
    if noise_dot is not None:
        return noise_dot(state, dW)
    B = model.noise_matrix(state)
    if B.ndim == 2:
        return B @ dW
    return np.einsum("imb,mb->ib", B, dW)


def semi_implicit_step(model, state, dt, p, dW):
    """One semi-implicit midpoint step: state -> state + dt A(mid) + B(mid) dW.

    The midpoint estimate is refined by ``p`` fixed-point iterations starting
    from the current state; ``dW`` holds this step's real increments, shaped
    (n_noises,) or (n_noises, batch).
    """
    mid = state
    for _ in range(p):
        mid = state + 0.5 * (dt * model.drift(mid) + _apply_noise(model, mid, dW))
    return state + dt * model.drift(mid) + _apply_noise(model, mid, dW)


def integrate_classical(model, z0, dt, n_steps, record_every=1):
    """RK4 integration of the classical (noise-free) equations.

    Returns (taus, record); used for transients and limit-cycle exploration.
    """
    z = np.asarray(z0, dtype=complex)
    taus = [0.0]
    rec = [z.copy()]
    for n in range(1, n_steps + 1):
        k1 = model.classical_rhs(z)
        k2 = model.classical_rhs(z + 0.5 * dt * k1)
        k3 = model.classical_rhs(z + 0.5 * dt * k2)
        k4 = model.classical_rhs(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if n % record_every == 0:
            taus.append(n * dt)
            rec.append(z.copy())
    return np.array(taus), np.array(rec)


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Moment:
    mean: complex
    stderr: float
    n: int


@dataclass(frozen=True)
class CorrelationEstimate:
    """Two-time correlation <x(tau) x(tau + tau')> (plain product, no conjugate)."""

    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    stationary: bool
    n: int


@dataclass(frozen=True)
class TwoTimeCorrelation:
    """Nonstationary correlation matrix <x(tau_j) x(tau_k)> on a saved grid."""

    taus: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n: int


@dataclass(frozen=True)
class SpectrumEstimate:
    omegas: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    method: str
    truncation_lag: float | None = None


@dataclass
class EnsembleResult:
    taus: np.ndarray
    moments: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    correlations: dict = field(default_factory=dict)
    two_time: dict = field(default_factory=dict)
    spectra: dict = field(default_factory=dict)
    trajectories: int = 0
    failures: int = 0
    branch_flags: int = 0
    seed: int = 0


def _batch_ranges(total, batch):
    start = 0
    while start < total:
        yield start, min(start + batch, total)
        start += batch


def _plain_autocorr(records, max_lag):
    """Per-trajectory time-averaged lag products via FFT (no conjugation).

    records: (n_times, n_traj) complex. Returns (max_lag + 1, n_traj) with
    row k holding mean_s x[s] x[s+k].
    """
    n_t = records.shape[0]
    nfft = 1
    while nfft < 2 * n_t:
        nfft *= 2
    fwd = np.fft.fft(records, n=nfft, axis=0)
    spec = np.conj(np.fft.fft(np.conj(records), n=nfft, axis=0)) * fwd
    corr = np.fft.ifft(spec, axis=0)[: max_lag + 1]
    counts = np.arange(n_t, n_t - max_lag - 1, -1).reshape(-1, 1)
    return corr / counts


def run_ensemble(
    model,
    cfg: IntegratorConfig,
    observables: dict,
    *,
    series=(),
    stationary=(),
    correlations=None,
    two_time=None,
    spectra=None,
    demean_correlations=True,
):
    """Integrate an ensemble and accumulate the requested statistics.

    Parameters
    ----------
    observables : dict of name -> callable(state) -> one value per trajectory.
    series : names whose ensemble mean/stderr is kept on the full save grid.
    stationary : names averaged over the post-burn-in record per trajectory,
        reported as a Moment over trajectories.
    correlations : dict name -> max lag (dimensionless time) for stationary
        two-time correlations, time-origin averaged beyond the burn-in.
    two_time : dict name -> grid size, keeping the full (tau1, tau2)
        dependence on a subsampled grid (nonstationary processes).
    spectra : dict name -> dict(omegas=..., max_lag=..., g=...) accumulating
        the stationary squeezing spectrum V = 1 + S per trajectory, with the
        standard error taken over trajectories.

    Correlation/spectrum records are demeaned with the per-batch scalar mean
    (time and trajectories pooled), which estimates the stationary mean with
    negligible bias; pass ``demean_correlations=False`` for observables
    already centered. Failed (non-finite) trajectories are frozen, counted,
    and excluded from stationary and correlation statistics (series points
    use the per-point alive count); a failure fraction >=
    ``cfg.max_failure_rate`` aborts. Trajectories whose pump amplitude
    crosses the negative real axis (a principal-branch jump of the noise
    square root) are counted in ``branch_flags``.
    """
    n_steps = cfg.n_steps
    save_idx = np.arange(0, n_steps + 1, cfg.save_every)
    taus = save_idx * cfg.dt
    n_save = len(taus)
    rec_mask = taus >= cfg.burn_in
    n_rec = int(rec_mask.sum())
    corr_specs = dict(correlations or {})
    tt_specs = dict(two_time or {})
    spec_specs = dict(spectra or {})
    record_names = set(corr_specs) | set(tt_specs) | set(spec_specs)

    sums = {name: np.zeros(n_save, dtype=complex) for name in series}
    sq = {name: np.zeros(n_save) for name in series}
    counts = np.zeros(n_save, dtype=np.int64)

    stat_chunks = {name: [] for name in stationary}
    corr_sum, corr_sq, corr_n = {}, {}, {}
    spec_sum, spec_sq, spec_n, spec_mats = {}, {}, {}, {}
    lag_dt = cfg.dt * cfg.save_every
    for name, req in spec_specs.items():
        omegas = np.atleast_1d(np.asarray(req["omegas"], dtype=float))
        n_lag = int(round(req["max_lag"] / lag_dt))
        if n_lag >= n_rec:
            raise ResolutionError("spectrum max_lag exceeds the post-burn-in record")
        lags = np.arange(n_lag + 1) * lag_dt
        weights = np.full(n_lag + 1, lag_dt)
        weights[0] = weights[-1] = lag_dt / 2.0
        spec_mats[name] = (
            omegas,
            n_lag,
            (4.0 / req["g"] ** 2) * np.cos(np.outer(omegas, lags)) * weights,
        )
        spec_sum[name] = np.zeros(len(omegas))
        spec_sq[name] = np.zeros(len(omegas))
        spec_n[name] = 0
    tt_sum, tt_sq, tt_n, tt_grid = {}, {}, {}, {}
    for name, n_grid in tt_specs.items():
        stride = max(1, n_save // int(n_grid))
        tt_grid[name] = np.arange(0, n_save, stride)

    pump_rows = model.pump_indices()
    total_failed = 0
    total_flagged = 0

    for lo, hi in _batch_ranges(cfg.trajectories, cfg.batch_size):
        nb = hi - lo
        rngs = [trajectory_rng(cfg.seed, idx) for idx in range(lo, hi)]
        state = np.repeat(np.asarray(model.initial_state(), complex)[:, None], nb, axis=1)
        alive = np.ones(nb, dtype=bool)
        flagged = np.zeros(nb, dtype=bool)
        prev_pump = state[pump_rows[0]].copy() if pump_rows else None
        records = {name: np.zeros((n_save, nb), dtype=complex) for name in record_names}
        stat_acc = {name: np.zeros(nb, dtype=complex) for name in stationary}

        def take_sample(k):
            for name, fn in observables.items():
                vals = np.asarray(fn(state))
                if name in series:
                    v = np.where(alive, vals, 0.0)
                    sums[name][k] += v.sum()
                    sq[name][k] += float((np.abs(v) ** 2).sum())
                if name in record_names:
                    records[name][k] = vals
                if name in stationary and rec_mask[k]:
                    stat_acc[name] += np.where(alive, vals, 0.0)
            counts[k] += int(alive.sum())

        take_sample(0)
        ptr = 1
        for chunk_start in range(0, n_steps, cfg.noise_chunk):
            chunk = min(cfg.noise_chunk, n_steps - chunk_start)
            dW = _noise_block(rngs, chunk, model.n_noises, cfg.dt)
            for j in range(chunk):
                # diverging trajectories are caught at save points; silence
                # the intermediate overflow chatter they produce
                with np.errstate(over="ignore", invalid="ignore"):
                    state = semi_implicit_step(model, state, cfg.dt, cfg.midpoint_iterations, dW[j])
                step = chunk_start + j + 1
                if ptr < n_save and step == save_idx[ptr]:
                    finite = np.isfinite(state).all(axis=0)
                    np.logical_and(finite, (np.abs(state) < 1e100).all(axis=0), out=finite)
                    bad = ~finite
                    if bad.any():
                        alive &= ~bad
                        state[:, bad] = 0.0
                    if pump_rows is not None and len(pump_rows):
                        pump = state[pump_rows[0]]
                        crossed = (
                            (pump.real < 0)
                            & (prev_pump.real < 0)
                            & (np.sign(pump.imag) != np.sign(prev_pump.imag))
                        )
                        flagged |= crossed & alive
                        prev_pump = pump.copy()
                    take_sample(ptr)
                    ptr += 1

        total_failed += int((~alive).sum())
        total_flagged += int(flagged.sum())

        for name in stationary:
            stat_chunks[name].append((stat_acc[name] / max(n_rec, 1))[alive])

        demeaned = {}
        for name in set(corr_specs) | set(spec_specs):
            rec = records[name][rec_mask][:, alive]
            if demean_correlations:
                rec = rec - rec.mean()
            demeaned[name] = rec

        for name, max_lag in corr_specs.items():
            rec = demeaned[name]
            n_lag = int(round(max_lag / lag_dt))
            if n_lag >= rec.shape[0]:
                raise ResolutionError(
                    f"lag {max_lag} exceeds the post-burn-in record "
                    f"length {(rec.shape[0] - 1) * lag_dt}"
                )
            c = _plain_autocorr(rec, n_lag)
            if name not in corr_sum:
                corr_sum[name] = np.zeros(n_lag + 1, dtype=complex)
                corr_sq[name] = np.zeros(n_lag + 1)
                corr_n[name] = 0
            corr_sum[name] += c.sum(axis=1)
            corr_sq[name] += (np.abs(c) ** 2).sum(axis=1)
            corr_n[name] += c.shape[1]

        for name, (omegas, n_lag, transform) in spec_mats.items():
            c = _plain_autocorr(demeaned[name], n_lag)
            s_traj = transform @ c.real
            spec_sum[name] += s_traj.sum(axis=1)
            spec_sq[name] += (s_traj**2).sum(axis=1)
            spec_n[name] += s_traj.shape[1]

        for name in tt_specs:
            rec = records[name][tt_grid[name]][:, alive]
            if name not in tt_sum:
                m = rec.shape[0]
                tt_sum[name] = np.zeros((m, m), dtype=complex)
                tt_sq[name] = np.zeros((m, m))
                tt_n[name] = 0
            tt_sum[name] += rec @ rec.T
            absrec = np.abs(rec) ** 2
            tt_sq[name] += absrec @ absrec.T
            tt_n[name] += rec.shape[1]

    if total_failed / cfg.trajectories >= cfg.max_failure_rate:
        raise EnsembleFailure(
            f"{total_failed}/{cfg.trajectories} trajectories failed "
            f"(limit {cfg.max_failure_rate:.2%})"
        )

    result = EnsembleResult(
        taus=taus,
        trajectories=cfg.trajectories,
        failures=total_failed,
        branch_flags=total_flagged,
        seed=cfg.seed,
    )
    for name in series:
        n = np.maximum(counts, 1)
        mean = sums[name] / n
        var = np.maximum(sq[name] / n - np.abs(mean) ** 2, 0.0)
        result.series[name] = (mean, np.sqrt(var / n))
    for name in stationary:
        v = np.concatenate(stat_chunks[name])
        mean = complex(v.mean())
        var = np.var(v.real) + np.var(v.imag)
        result.moments[name] = Moment(mean=mean, stderr=float(np.sqrt(var / len(v))), n=len(v))
    for name in corr_specs:
        n = corr_n[name]
        mean = corr_sum[name] / n
        var = np.maximum(corr_sq[name] / n - np.abs(mean) ** 2, 0.0)
        result.correlations[name] = CorrelationEstimate(
            lags=np.arange(len(mean)) * lag_dt,
            values=mean,
            stderr=np.sqrt(var / n),
            stationary=True,
            n=n,
        )
    for name, (omegas, n_lag, _) in spec_mats.items():
        n = spec_n[name]
        mean = spec_sum[name] / n
        var = np.maximum(spec_sq[name] / n - mean**2, 0.0)
        result.spectra[name] = SpectrumEstimate(
            omegas=omegas,
            values=1.0 + mean,
            stderr=np.sqrt(var / n),
            method="stationary-mc",
            truncation_lag=n_lag * lag_dt,
        )
    for name in tt_specs:
        n = tt_n[name]
        mean = tt_sum[name] / n
        var = np.maximum(tt_sq[name] / n - np.abs(mean) ** 2, 0.0)
        result.two_time[name] = TwoTimeCorrelation(
            taus=taus[tt_grid[name]], values=mean, stderr=np.sqrt(var / n), n=n
        )
    return result


def two_time_correlation(model, cfg, observable, max_lag, *, name="x", stationary=True, grid=128):
    """Two-time correlation of one observable.

    ``stationary=True`` averages over time origins beyond the burn-in;
    ``stationary=False`` keeps the (tau1, tau2) dependence on a subsampled
    grid (needed for nonstationary statistics like a diffusing phase).
    """
    if stationary:
        res = run_ensemble(model, cfg, {name: observable}, correlations={name: max_lag})
        return res.correlations[name]
    res = run_ensemble(model, cfg, {name: observable}, two_time={name: grid})
    return res.two_time[name]


def spectrum_estimate(correlation, omegas, g, *, mode="stationary", window=None, truncate=True):
    """Squeezing-spectrum estimate V = 1 + S from measured correlations.

    stationary: S(w) = (2/g^2) Int dtau' e^{-i w tau'} C(tau'), evaluated by
    a trapezoid cosine transform over the symmetric lag axis; the lag tail is
    truncated where |C| first stays below 3x its standard error (recorded in
    ``truncation_lag``). windowed: takes a TwoTimeCorrelation and integrates
    S = 2/(T g^2) IntInt cos[w (tau - tau')] C(tau, tau') over the window T.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if mode == "stationary":
        if not isinstance(correlation, CorrelationEstimate):
            raise TypeError("stationary mode expects a CorrelationEstimate")
        lags, vals, err = correlation.lags, correlation.values, correlation.stderr
        if len(lags) < 2:
            raise ResolutionError("need at least two lags for a spectrum")
        span = lags[-1]
        nonzero = np.abs(omegas[np.abs(omegas) > 0])
        if nonzero.size and np.min(nonzero) < 2.0 * math.pi / (span * 20):
            raise ResolutionError(
                f"frequency {np.min(nonzero):.3g} finer than 2 pi / record ({2 * math.pi / span:.3g})"
            )
        cut = len(vals)
        if truncate:
            below = np.abs(vals) < 3.0 * err
            run = 0
            for k in range(len(vals)):
                run = run + 1 if below[k] else 0
                if run >= 5:
                    cut = max(2, k - run + 2)
                    break
        lags, vals, err = lags[:cut], vals[:cut], err[:cut]
        d = lags[1] - lags[0]
        weights = np.full(len(lags), d)
        weights[0] = weights[-1] = d / 2.0
        cos_mat = np.cos(np.outer(omegas, lags))
        s_vals = (2.0 / g**2) * 2.0 * (cos_mat @ (weights * vals.real))
        s_err = (2.0 / g**2) * 2.0 * np.sqrt((cos_mat**2) @ (weights**2 * err**2))
        return SpectrumEstimate(
            omegas=omegas,
            values=1.0 + s_vals,
            stderr=s_err,
            method="stationary",
            truncation_lag=float(lags[-1]),
        )
    if mode == "windowed":
        if not isinstance(correlation, TwoTimeCorrelation):
            raise TypeError("windowed mode expects a TwoTimeCorrelation")
        taus, c = correlation.taus, correlation.values
        t_window = window if window is not None else taus[-1] - taus[0]
        keep = taus - taus[0] <= t_window + 1e-12
        taus = taus[keep]
        c = c[np.ix_(keep, keep)]
        d = taus[1] - taus[0]
        w = np.full(len(taus), d)
        w[0] = w[-1] = d / 2.0
        span = taus[-1] - taus[0]
        vals = np.empty(len(omegas))
        for i, om in enumerate(omegas):
            cos_block = np.cos(om * (taus[:, None] - taus[None, :]))
            vals[i] = (2.0 / (span * g**2)) * float(
                np.real(np.einsum("j,k,jk,jk->", w, w, cos_block, c))
            )
        return SpectrumEstimate(
            omegas=omegas, values=1.0 + vals, stderr=np.zeros_like(vals), method="windowed"
        )
    raise ValueError(f"unknown spectrum mode {mode!r}")


class OrnsteinUhlenbeck:
    """Benchmark model dc = -lam c dtau + gam dW (real, additive noise)."""

    labels = ("c",)
    dim = 1
    n_noises = 1

    def __init__(self, lam=1.0, gam=1.0):
        self.lam = lam
        self.gam = gam

    def drift(self, state):
        return -self.lam * state

    def noise_matrix(self, state):
        B = np.zeros((1, 1) + state.shape[1:], dtype=complex)
        B[0, 0] = self.gam
        return B

    def noise_dot(self, state, dW):
        return self.gam * dW

    def pump_indices(self):
        return ()

    def initial_state(self):
        return np.zeros(1, dtype=complex)


class WienerPhase:
    """Pure diffusion d theta = sqrt(D) dW, for phase-statistics benchmarks."""

    labels = ("theta",)
    dim = 1
    n_noises = 1

    def __init__(self, diffusion=1.0):
        self.diffusion = diffusion

    def drift(self, state):
        return np.zeros_like(state)

    def noise_matrix(self, state):
        B = np.zeros((1, 1) + state.shape[1:], dtype=complex)
        B[0, 0] = math.sqrt(self.diffusion)
        return B

    def noise_dot(self, state, dW):
        return math.sqrt(self.diffusion) * dW

    def pump_indices(self):
        return ()

    def initial_state(self):
        return np.zeros(1, dtype=complex)
