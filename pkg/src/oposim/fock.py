"""Truncated Fock-space Lindblad oracle for one or two modes.

Independent ground truth for the positive-P trajectory moments at small
photon number: the master equation is integrated by fixed-step RK4 with the
terms applied as dense matrix products (the dimensions in play stay small),
the state re-Hermitized every step, and trace/positivity monitored.

Hamiltonian-term convention (generator form): a ``detuning`` delta adds
-i delta [a^dag a, rho]; ``squeeze`` kappa adds [kappa a^dag^2 - kappa* a^2,
rho]; ``drive`` E adds [E a^dag - E* a, rho]; the two-mode ``three_wave``
chi adds [chi/2 a_p a_s^dag^2 - h.c., rho]. Each jump operator a_j with rate
gamma_j adds gamma_j (2 a rho a^dag - a^dag a rho - rho a^dag a).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TruncationError(RuntimeError):
    """Top-level Fock populations exceeded the allowed leakage."""


class StepSizeError(RuntimeError):
    """Trace drift along the evolution exceeded the bound."""


LEAKAGE_TOL = 1e-8
TRACE_TOL = 1e-6


def destroy(n_levels: int) -> np.ndarray:
    """Annihilation operator on a Fock space truncated at n_levels - 1."""
    return np.diag(np.sqrt(np.arange(1, n_levels)), 1).astype(complex)


def fock_state(n_levels: int, n: int) -> np.ndarray:
    rho = np.zeros((n_levels, n_levels), dtype=complex)
    rho[n, n] = 1.0
    return rho


def coherent_state(n_levels: int, alpha: complex) -> np.ndarray:
    n = np.arange(n_levels)
    log_amp = n * np.log(complex(alpha)) - 0.5 * (
        np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, n_levels))]))
    ) - 0.5 * abs(alpha) ** 2
    vec = np.exp(log_amp) if alpha != 0 else np.eye(n_levels, 1).ravel().astype(complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


@dataclass
class LindbladSystem:
    """Hamiltonian generator + jump operators on a (tensor) Fock space."""

    hamiltonian: np.ndarray  # Hermitian H with drho/dt += -i [H, rho]
    jumps: list  # list of (rate, operator)
    dims: tuple  # truncation per mode
    mode_ops: list = field(default_factory=list)  # annihilation op per mode

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def liouvillian(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.hamiltonian @ rho - rho @ self.hamiltonian)
        for rate, op in self.jumps:
            od = op.conj().T
            out += rate * (2.0 * op @ rho @ od - od @ op @ rho - rho @ od @ op)
        return out

    def max_rate(self) -> float:
        scales = [abs(r) for r, _ in self.jumps]
        scales.append(float(np.abs(self.hamiltonian).max()))
        return max(scales) if scales else 1.0

    # -- construction helpers -------------------------------------------------

    @classmethod
    def single_mode(cls, n_levels, *, detuning=0.0, squeeze=0.0, drive=0.0, gamma=0.0):
        a = destroy(n_levels)
        ad = a.conj().T
        h = detuning * (ad @ a)
        h = h + 1j * (squeeze * (ad @ ad) - np.conj(squeeze) * (a @ a))
        h = h + 1j * (drive * ad - np.conj(drive) * a)
        jumps = [(gamma, a)] if gamma > 0 else []
        return cls(hamiltonian=h, jumps=jumps, dims=(n_levels,), mode_ops=[a])

    @classmethod
    def dopo(cls, n_pump, n_signal, *, chi, drive, gamma_p, gamma_s, detuning_s=0.0):
        """Pump + signal with three-wave mixing chi/2 a_p a_s^dag^2 (resonant pump)."""
        ap = np.kron(destroy(n_pump), np.eye(n_signal))
        asig = np.kron(np.eye(n_pump), destroy(n_signal))
        apd, asd = ap.conj().T, asig.conj().T
        gen = (chi / 2.0) * (ap @ asd @ asd)
        h = 1j * (gen - gen.conj().T)
        h = h + 1j * drive * (apd - ap)
        h = h + detuning_s * (asd @ asig)
        jumps = [(gamma_p, ap), (gamma_s, asig)]
        return cls(hamiltonian=h, jumps=jumps, dims=(n_pump, n_signal), mode_ops=[ap, asig])


def check_leakage(system: LindbladSystem, rho: np.ndarray, tol=LEAKAGE_TOL):
    """Top Fock-level population per mode must stay below the tolerance."""
    full = rho.reshape(system.dims + system.dims)
    for k, d in enumerate(system.dims):
        idx_bra = [slice(None)] * len(system.dims)
        idx_bra[k] = d - 1
        sub = full[tuple(idx_bra) + tuple(idx_bra)]
        population = float(np.real(np.trace(sub.reshape(-1, 1)))) if sub.ndim == 0 else float(
            np.real(sub if np.isscalar(sub) else np.trace(np.atleast_2d(sub)))
        )
        if population > tol:
            raise TruncationError(
                f"mode {k}: top-level population {population:.3e} above {tol}"
            )


def evolve(system: LindbladSystem, rho0: np.ndarray, t_end: float, dt: float,
           *, record_times=None, check_tol=TRACE_TOL):
    """Fixed-step RK4 evolution of the density matrix.

    The state is re-Hermitized each step; trace preservation is monitored
    (drift above ``check_tol`` raises). Returns rho(t_end), or the list of
    states at ``record_times`` when given.
    """
    if dt * system.max_rate() > 0.5:
        raise StepSizeError("dt too large for the fastest system rate")
    n_steps = int(round(t_end / dt))
    rho = np.array(rho0, dtype=complex)
    trace0 = float(np.real(np.trace(rho)))
    records = []
    targets = list(record_times) if record_times is not None else []
    next_target = 0
    for step in range(1, n_steps + 1):
        k1 = system.liouvillian(rho)
        k2 = system.liouvillian(rho + 0.5 * dt * k1)
        k3 = system.liouvillian(rho + 0.5 * dt * k2)
        k4 = system.liouvillian(rho + dt * k3)
        rho = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        t = step * dt
        while next_target < len(targets) and targets[next_target] <= t + 1e-12:
            records.append((t, rho.copy()))
            next_target += 1
    drift = abs(float(np.real(np.trace(rho))) - trace0)
    if drift > check_tol:
        raise StepSizeError(f"trace drift {drift:.3e} exceeds {check_tol}")
    if record_times is not None:
        return records
    return rho


def steady_state(system: LindbladSystem, rho0=None, *, horizon=10.0, dt=None):
    """Long-time integration to the stationary state.

    Integrates for ``horizon`` / (slowest jump rate); reuses the verified
    RK4 integrator rather than a null-space solve.
    """
    rates = [r for r, _ in system.jumps if r > 0]
    slowest = min(rates) if rates else 1.0
    t_end = horizon / slowest
    if dt is None:
        dt = 0.25 / max(system.max_rate(), 1e-12)
    if rho0 is None:
        rho0 = fock_state(system.dim, 0).reshape(system.dim, system.dim)
    rho = evolve(system, rho0, t_end, dt)
    check_leakage(system, rho)
    return rho


def normal_ordered_moment(system: LindbladSystem, rho, mode, m, n):
    """<a_mode^dag^m a_mode^n> = tr(rho adag^m a^n)."""
    a = system.mode_ops[mode]
    op = np.linalg.matrix_power(a.conj().T, m) @ np.linalg.matrix_power(a, n)
    return complex(np.trace(rho @ op))


def min_eigenvalue(rho) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
