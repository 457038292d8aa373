"""Positive-P Langevin models for the OPO configurations.

Each model lives in a doubled phase space where beta_j and beta_j^+ are
independent complex variables; classical states satisfy beta^+ = beta*. The
drift and noise matrix are written in the dimensionless variables
(tau = gamma_s t), so one parameter set (sigma, kappa, g, ...) fully
specifies a system.

Noise convention: ``noise_matrix`` returns B such that the Langevin equation
reads d beta = A dtau + B dW with the dW independent *real* Wiener
increments of variance dtau. Channels driven by a complex white noise zeta
with <zeta zeta*> = delta are expanded over two real noises,
zeta = (eta_1 + i eta_2)/sqrt(2), which reproduces <zeta zeta> = 0 and the
conjugate-pair coupling (zeta, zeta^+, zeta*, zeta^+*) of the nondegenerate
channels.

Square roots of complex pump variables use the principal branch; a trajectory
whose pump crosses the negative real axis between steps is flagged by the
integrator rather than silently continued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class DimensionError(ValueError):
    """State dimension does not match the model."""


def _check_state(model, state):
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != model.dim:
        raise DimensionError(
            f"{type(model).__name__} expects dimension {model.dim}, got {state.shape[0]}"
        )
    return state


def _alloc(model, state, n_cols):
    """Zero array shaped like (dim-or-n_cols, ...batch) matching the state."""
    return np.zeros((n_cols,) + state.shape[1:], dtype=complex)


class Model:
    """Common behaviour: classical embedding/reduction and defaults."""

    #: names of the doubled-phase-space components, "x" paired with "x+"
    labels: tuple

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def classical_dim(self) -> int:
        return self.dim // 2

    def classical_to_phase_space(self, classical):
        classical = np.asarray(classical, dtype=complex)
        state = np.empty((self.dim,) + classical.shape[1:], dtype=complex)
        state[0::2] = classical
        state[1::2] = np.conj(classical)
        return state

    def phase_space_to_classical(self, state):
        return np.asarray(state, dtype=complex)[0::2]

    def classical_rhs(self, classical):
        """Drift restricted to the classical submanifold beta^+ = beta*."""
        return self.drift(self.classical_to_phase_space(classical))[0::2]

    def initial_state(self):
        return np.zeros(self.dim, dtype=complex)

    def pump_indices(self) -> tuple:
        """Indices whose square root feeds a noise amplitude (branch watch)."""
        return ()


def langevin_rhs(model: Model, state):
    """Drift vector and noise matrix of a model at a phase-space state."""
    state = _check_state(model, state)
    return model.drift(state), model.noise_matrix(state)


def _complex_pair_rows(B, rows, amplitudes, first_noise):
    """Fill B rows for (zeta, zeta^+, zeta*, zeta^+*) conjugate structure.

    ``rows`` lists the four state indices coupled to zeta, zeta^+, zeta*,
    (zeta^+)* respectively; ``amplitudes`` the four multiplicative factors.
    Four real noises are consumed starting at ``first_noise``.
    """
    j = first_noise
    B[rows[0], j] = amplitudes[0] * _INV_SQRT2
    B[rows[0], j + 1] = 1j * amplitudes[0] * _INV_SQRT2
    B[rows[1], j + 2] = amplitudes[1] * _INV_SQRT2
    B[rows[1], j + 3] = 1j * amplitudes[1] * _INV_SQRT2
    B[rows[2], j] = amplitudes[2] * _INV_SQRT2
    B[rows[2], j + 1] = -1j * amplitudes[2] * _INV_SQRT2
    B[rows[3], j + 2] = amplitudes[3] * _INV_SQRT2
    B[rows[3], j + 3] = -1j * amplitudes[3] * _INV_SQRT2


@dataclass(frozen=True)
class DopoResonant(Model):
    """Degenerate OPO on resonance: pump + signal, two real noises."""

    sigma: float
    kappa: float = 1.0
    g: float = 1e-3
    labels = ("p", "p+", "s", "s+")
    n_noises = 2

    def drift(self, state):
        bp, bpp, bs, bsp = state
        out = _alloc(self, state, 4)
        out[0] = self.kappa * (self.sigma - bp - bs**2 / 2.0)
        out[1] = self.kappa * (self.sigma - bpp - bsp**2 / 2.0)
        out[2] = -bs + bp * bsp
        out[3] = -bsp + bpp * bs
        return out

    def noise_matrix(self, state):
        bp, bpp = state[0], state[1]
        B = _alloc(self, state, 4 * self.n_noises).reshape((4, self.n_noises) + state.shape[1:])
        B[2, 0] = self.g * np.sqrt(bp)
        B[3, 1] = self.g * np.sqrt(bpp)
        return B

    def noise_dot(self, state, dW):
        out = _alloc(self, state, 4)
        out[2] = self.g * np.sqrt(state[0]) * dW[0]
        out[3] = self.g * np.sqrt(state[1]) * dW[1]
        return out

    def pump_indices(self):
        return (0, 1)

    def initial_state(self):
        return self.classical_to_phase_space([complex(self.sigma), 0j])


@dataclass(frozen=True)
class DopoDetuned(Model):
    """Degenerate OPO with the detuning on the signal mode only."""

    sigma: float
    delta: float
    kappa: float = 1.0
    g: float = 1e-3
    labels = ("p", "p+", "s", "s+")
    n_noises = 2

    def drift(self, state):
        bp, bpp, bs, bsp = state
        out = _alloc(self, state, 4)
        out[0] = self.kappa * (self.sigma - bp - bs**2 / 2.0)
        out[1] = self.kappa * (self.sigma - bpp - bsp**2 / 2.0)
        out[2] = -(1 + 1j * self.delta) * bs + bp * bsp
        out[3] = -(1 - 1j * self.delta) * bsp + bpp * bs
        return out

    noise_matrix = DopoResonant.noise_matrix
    noise_dot = DopoResonant.noise_dot
    pump_indices = DopoResonant.pump_indices

    def initial_state(self):
        return self.classical_to_phase_space([complex(self.sigma), 0j])


@dataclass(frozen=True)
class DopoAdiabatic(Model):
    """Signal-only DOPO after adiabatic elimination of the pump.

    The drift carries the Stratonovich shift -g^2/4 per component so the
    equations can be fed to the (Stratonovich-converging) semi-implicit
    integrator; the naive elimination is only correct in the Ito sense.
    """

    sigma: float
    g: float = 1e-3
    labels = ("s", "s+")
    n_noises = 2

    def drift(self, state):
        bs, bsp = state
        out = _alloc(self, state, 2)
        shift = 1.0 - self.g**2 / 4.0
        out[0] = -shift * bs + (self.sigma - bs**2 / 2.0) * bsp
        out[1] = -shift * bsp + (self.sigma - bsp**2 / 2.0) * bs
        return out

    def noise_matrix(self, state):
        bs, bsp = state
        B = _alloc(self, state, 2 * self.n_noises).reshape((2, self.n_noises) + state.shape[1:])
        B[0, 0] = self.g * np.sqrt(self.sigma - bs**2 / 2.0)
        B[1, 1] = self.g * np.sqrt(self.sigma - bsp**2 / 2.0)
        return B

    def noise_dot(self, state, dW):
        out = _alloc(self, state, 2)
        out[0] = self.g * np.sqrt(self.sigma - state[0] ** 2 / 2.0) * dW[0]
        out[1] = self.g * np.sqrt(self.sigma - state[1] ** 2 / 2.0) * dW[1]
        return out


@dataclass(frozen=True)
class Opo(Model):
    """Nondegenerate OPO: pump, signal, idler; complex conjugate-pair noise."""

    sigma: float
    kappa: float = 1.0
    g: float = 1e-3
    labels = ("p", "p+", "s", "s+", "i", "i+")
    n_noises = 4

    def drift(self, state):
        bp, bpp, bs, bsp, bi, bip = state
        out = _alloc(self, state, 6)
        out[0] = self.kappa * (self.sigma - bp - bs * bi)
        out[1] = self.kappa * (self.sigma - bpp - bsp * bip)
        out[2] = -bs + bp * bip
        out[3] = -bsp + bpp * bi
        out[4] = -bi + bp * bsp
        out[5] = -bip + bpp * bs
        return out

    def noise_matrix(self, state):
        bp, bpp = state[0], state[1]
        B = _alloc(self, state, 6 * self.n_noises).reshape((6, self.n_noises) + state.shape[1:])
        amp, ampp = self.g * np.sqrt(bp), self.g * np.sqrt(bpp)
        _complex_pair_rows(B, (2, 3, 4, 5), (amp, ampp, amp, ampp), 0)
        return B

    def noise_dot(self, state, dW):
        out = _alloc(self, state, 6)
        zeta = (dW[0] + 1j * dW[1]) * _INV_SQRT2
        zetap = (dW[2] + 1j * dW[3]) * _INV_SQRT2
        amp = self.g * np.sqrt(state[0])
        ampp = self.g * np.sqrt(state[1])
        out[2] = amp * zeta
        out[3] = ampp * zetap
        out[4] = amp * np.conj(zeta)
        out[5] = ampp * np.conj(zetap)
        return out

    def pump_indices(self):
        return (0, 1)

    def initial_state(self):
        return self.classical_to_phase_space([complex(self.sigma), 0j, 0j])


@dataclass(frozen=True)
class TwoChannel(Model):
    """Pump with two degenerate decay channels of coupling ratio r < 1."""

    sigma: float
    r: float
    kappa: float = 1.0
    g: float = 1e-3
    labels = ("p", "p+", "1", "1+", "2", "2+")
    n_noises = 4

    def __post_init__(self):
        if not 0 < self.r <= 1:
            raise ValueError("coupling ratio r must lie in (0, 1]")

    def drift(self, state):
        bp, bpp, b1, b1p, b2, b2p = state
        out = _alloc(self, state, 6)
        out[0] = self.kappa * (self.sigma - bp - b1**2 / 2.0 - self.r * b2**2 / 2.0)
        out[1] = self.kappa * (self.sigma - bpp - b1p**2 / 2.0 - self.r * b2p**2 / 2.0)
        out[2] = -b1 + bp * b1p
        out[3] = -b1p + bpp * b1
        out[4] = -b2 + self.r * bp * b2p
        out[5] = -b2p + self.r * bpp * b2
        return out

    def noise_matrix(self, state):
        bp, bpp = state[0], state[1]
        B = _alloc(self, state, 6 * self.n_noises).reshape((6, self.n_noises) + state.shape[1:])
        B[2, 0] = self.g * np.sqrt(bp)
        B[3, 1] = self.g * np.sqrt(bpp)
        B[4, 2] = self.g * np.sqrt(self.r * bp)
        B[5, 3] = self.g * np.sqrt(self.r * bpp)
        return B

    def noise_dot(self, state, dW):
        out = _alloc(self, state, 6)
        sp, spp = np.sqrt(state[0]), np.sqrt(state[1])
        sr = math.sqrt(self.r)
        out[2] = self.g * sp * dW[0]
        out[3] = self.g * spp * dW[1]
        out[4] = self.g * sr * sp * dW[2]
        out[5] = self.g * sr * spp * dW[3]
        return out

    def pump_indices(self):
        return (0, 1)

    def initial_state(self):
        if self.sigma > 1:
            return self.classical_to_phase_space(
                [1.0 + 0j, math.sqrt(2 * (self.sigma - 1)) + 0j, 0j]
            )
        return self.classical_to_phase_space([complex(self.sigma), 0j, 0j])


@dataclass(frozen=True)
class TtmDopo(Model):
    """Two-transverse-mode DOPO: opposite orbital angular momentum signals."""

    sigma: float
    kappa: float = 1.0
    g: float = 1e-3
    labels = ("p", "p+", "+1", "+1+", "-1", "-1+")
    n_noises = 4

    def drift(self, state):
        bp, bpp, ba, bap, bb, bbp = state
        out = _alloc(self, state, 6)
        out[0] = self.kappa * (self.sigma - bp - ba * bb)
        out[1] = self.kappa * (self.sigma - bpp - bap * bbp)
        out[2] = -ba + bp * bbp
        out[3] = -bap + bpp * bb
        out[4] = -bb + bp * bap
        out[5] = -bbp + bpp * ba
        return out

    noise_matrix = Opo.noise_matrix
    noise_dot = Opo.noise_dot
    pump_indices = Opo.pump_indices

    def initial_state(self, theta: float = 0.0):
        if self.sigma > 1:
            rho = math.sqrt(self.sigma - 1)
            return self.classical_to_phase_space(
                [1.0 + 0j, rho * np.exp(-1j * theta), rho * np.exp(1j * theta)]
            )
        return self.classical_to_phase_space([complex(self.sigma), 0j, 0j])


@dataclass(frozen=True)
class InjectedTtmDopo(Model):
    """2tmDOPO written in the Hermite-Gauss basis with a TEM10 signal seed.

    eps_i = sqrt(i_i) exp(i phi_i) drives the x mode; the y mode stays
    undriven. Noises are four independent real ones in this basis.
    """

    sigma: float
    i_i: float
    phi_i: float = 0.0
    kappa: float = 1.0
    g: float = 1e-3
    labels = ("p", "p+", "x", "x+", "y", "y+")
    n_noises = 4

    @property
    def eps_i(self) -> complex:
        return math.sqrt(self.i_i) * np.exp(1j * self.phi_i)

    def drift(self, state):
        bp, bpp, bx, bxp, by, byp = state
        out = _alloc(self, state, 6)
        eps = self.eps_i
        out[0] = self.kappa * (self.sigma - bp - (bx**2 + by**2) / 2.0)
        out[1] = self.kappa * (self.sigma - bpp - (bxp**2 + byp**2) / 2.0)
        out[2] = eps - bx + bp * bxp
        out[3] = np.conj(eps) - bxp + bpp * bx
        out[4] = -by + bp * byp
        out[5] = -byp + bpp * by
        return out

    def noise_matrix(self, state):
        bp, bpp = state[0], state[1]
        B = _alloc(self, state, 6 * self.n_noises).reshape((6, self.n_noises) + state.shape[1:])
        B[2, 0] = self.g * np.sqrt(bp)
        B[3, 1] = self.g * np.sqrt(bpp)
        B[4, 2] = self.g * np.sqrt(bp)
        B[5, 3] = self.g * np.sqrt(bpp)
        return B

    def noise_dot(self, state, dW):
        out = _alloc(self, state, 6)
        amp, ampp = self.g * np.sqrt(state[0]), self.g * np.sqrt(state[1])
        out[2] = amp * dW[0]
        out[3] = ampp * dW[1]
        out[4] = amp * dW[2]
        out[5] = ampp * dW[3]
        return out

    def pump_indices(self):
        return (0, 1)


@dataclass(frozen=True)
class ActiveLockClassical(Model):
    """Classical actively-phase-locked type II OPO (pump eliminated).

    Symmetric configuration: equal detunings +-delta on signal/idler, equal
    injections sqrt(i_inject) in phase with the pump. Only the classical
    equations are exposed; the model's quantum noise is out of scope.
    """

    sigma: float
    delta: float
    i_inject: float
    labels = ("s", "s+", "i", "i+")

    def drift(self, state):
        bs, bsp, bi, bip = state
        out = _alloc(self, state, 4)
        amp = math.sqrt(self.i_inject)
        out[0] = amp - (1 + 1j * self.delta) * bs + (self.sigma - bs * bi) * bip
        out[1] = amp - (1 - 1j * self.delta) * bsp + (self.sigma - bsp * bip) * bi
        out[2] = amp - (1 - 1j * self.delta) * bi + (self.sigma - bs * bi) * bsp
        out[3] = amp - (1 + 1j * self.delta) * bip + (self.sigma - bsp * bip) * bs
        return out

    def noise_matrix(self, state):
        raise NotImplementedError(
            "ActiveLockClassical carries no noise model; only classical dynamics"
        )


@dataclass(frozen=True)
class FamilyDopo(Model):
    """DOPO tuned to transverse family f at the signal frequency.

    The signal modes are the OAM pairs l in {f, f-2, ..., l0}; couplings are
    normalized to the strongest channel, r_{l0} = 1. The l = 0 channel (even
    families) is degenerate and driven by real noises; l != 0 pairs share a
    complex conjugate-pair noise.
    """

    sigma: float
    f: int
    r_l: tuple
    kappa: float = 1.0
    g: float = 1e-3

    def __post_init__(self):
        ells = self.angular_momenta
        if len(self.r_l) != len(ells):
            raise ValueError(f"need {len(ells)} couplings for family {self.f}")
        if abs(self.r_l[-1] - 1.0) > 1e-12:
            raise ValueError("the lowest-OAM coupling r_{l0} must be 1")
        if not all(0 < r <= 1 for r in self.r_l):
            raise ValueError("couplings must lie in (0, 1]")
        labels = ["p", "p+"]
        for l in ells:
            if l == 0:
                labels += ["0", "0+"]
            else:
                labels += [f"+{l}", f"+{l}+", f"-{l}", f"-{l}+"]
        object.__setattr__(self, "_labels", tuple(labels))

    @property
    def angular_momenta(self) -> list:
        l0 = self.f % 2
        return list(range(self.f, l0 - 1, -2))

    @property
    def labels(self):
        return self._labels

    @property
    def n_noises(self) -> int:
        return sum(2 if l == 0 else 4 for l in self.angular_momenta)

    def drift(self, state):
        out = _alloc(self, state, self.dim)
        bp, bpp = state[0], state[1]
        pump_sum = np.zeros_like(bp)
        pump_sum_p = np.zeros_like(bpp)
        idx = 2
        for l, r in zip(self.angular_momenta, self.r_l):
            if l == 0:
                b0, b0p = state[idx], state[idx + 1]
                pump_sum = pump_sum + r * b0**2 / 2.0
                pump_sum_p = pump_sum_p + r * b0p**2 / 2.0
                out[idx] = -b0 + r * bp * b0p
                out[idx + 1] = -b0p + r * bpp * b0
                idx += 2
            else:
                ba, bap, bb, bbp = state[idx], state[idx + 1], state[idx + 2], state[idx + 3]
                pump_sum = pump_sum + r * ba * bb
                pump_sum_p = pump_sum_p + r * bap * bbp
                out[idx] = -ba + r * bp * bbp
                out[idx + 1] = -bap + r * bpp * bb
                out[idx + 2] = -bb + r * bp * bap
                out[idx + 3] = -bbp + r * bpp * ba
                idx += 4
        out[0] = self.kappa * (self.sigma - bp - pump_sum)
        out[1] = self.kappa * (self.sigma - bpp - pump_sum_p)
        return out

    def noise_matrix(self, state):
        bp, bpp = state[0], state[1]
        B = _alloc(self, state, self.dim * self.n_noises).reshape(
            (self.dim, self.n_noises) + state.shape[1:]
        )
        idx, j = 2, 0
        for l, r in zip(self.angular_momenta, self.r_l):
            amp, ampp = self.g * np.sqrt(r * bp), self.g * np.sqrt(r * bpp)
            if l == 0:
                B[idx, j] = amp
                B[idx + 1, j + 1] = ampp
                idx, j = idx + 2, j + 2
            else:
                _complex_pair_rows(B, (idx, idx + 1, idx + 2, idx + 3), (amp, ampp, amp, ampp), j)
                idx, j = idx + 4, j + 4
        return B

    def noise_dot(self, state, dW):
        out = _alloc(self, state, self.dim)
        sp, spp = np.sqrt(state[0]), np.sqrt(state[1])
        idx, j = 2, 0
        for l, r in zip(self.angular_momenta, self.r_l):
            amp = self.g * math.sqrt(r)
            if l == 0:
                out[idx] = amp * sp * dW[j]
                out[idx + 1] = amp * spp * dW[j + 1]
                idx, j = idx + 2, j + 2
            else:
                zeta = (dW[j] + 1j * dW[j + 1]) * _INV_SQRT2
                zetap = (dW[j + 2] + 1j * dW[j + 3]) * _INV_SQRT2
                out[idx] = amp * sp * zeta
                out[idx + 1] = amp * spp * zetap
                out[idx + 2] = amp * sp * np.conj(zeta)
                out[idx + 3] = amp * spp * np.conj(zetap)
                idx, j = idx + 4, j + 4
        return out

    def pump_indices(self):
        return (0, 1)


MODEL_KINDS = {
    "dopo": DopoResonant,
    "dopo-detuned": DopoDetuned,
    "dopo-adiabatic": DopoAdiabatic,
    "opo": Opo,
    "two-channel": TwoChannel,
    "ttm-dopo": TtmDopo,
    "injected-ttm-dopo": InjectedTtmDopo,
    "active-lock": ActiveLockClassical,
    "family-dopo": FamilyDopo,
}


def make_model(kind: str, **params) -> Model:
    """Instantiate a model by its registry name (used by the CLI layer)."""
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; options: {sorted(MODEL_KINDS)}")
    if cls is FamilyDopo and "r_l" in params and not isinstance(params["r_l"], tuple):
        params["r_l"] = tuple(params["r_l"])
    return cls(**params)
