"""Linearized output noise spectra.

A generic matrix engine evaluates V_out for any stable fixed point of any
model: with L the stability matrix, N = B Cov(zeta) B^T the folded noise
matrix of the linearized Langevin system (the models' noise matrices are
written over real unit-variance noises, so N = B B^T directly encodes the
conjugate-pair covariance of complex channels), and u the quadrature row
with delta x = u . b,

    V_out(omega) = 1 + (2 / g^2) Re[ u^T (i w - L)^-1 N (-i w - L^T)^-1 u ].

Alongside the engine, every closed-form spectrum of the studied
configurations is available, plus the fixed-local-oscillator detection
spectrum of the rotationally symmetric system and the orientation-diffusion
statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import models, steady


class DivergentSpectrum(ArithmeticError):
    """A marginal (Goldstone) mode makes V_out diverge at this frequency."""


@dataclass(frozen=True)
class LinearizedSystem:
    """Linearized fluctuation system at a stable classical branch."""

    matrix: np.ndarray  # L, stability matrix
    noise: np.ndarray  # N = B Cov B^T at the fixed point
    g: float
    labels: tuple

    @classmethod
    def from_model(cls, model, branch):
        report = steady.stability_matrix(model, branch)
        state = branch.phase_space_state(model)
        B = model.noise_matrix(state)
        return cls(
            matrix=report.matrix,
            noise=B @ B.T,
            g=model.g,
            labels=tuple(model.labels),
        )

    def quadrature_row(self, mode_label, phi=0.0):
        """Row u with u . b = delta x^phi of the labeled mode."""
        u = np.zeros(len(self.labels), dtype=complex)
        j = self.labels.index(mode_label)
        u[j] = np.exp(-1j * phi)
        u[self.labels.index(mode_label + "+")] = np.exp(1j * phi)
        return u


def dopo_adiabatic_system(sigma, g):
    """Linearized above-threshold DOPO after pump elimination (order-g form).

    Basis (b_s, b_s^+); the O(g^2) pieces of the drift and fixed point are
    dropped, exactly as in the closed-form derivation.
    """
    L = np.array([[1 - 2 * sigma, 1], [1, 1 - 2 * sigma]], dtype=complex)
    N = g**2 * np.eye(2, dtype=complex)
    return LinearizedSystem(matrix=L, noise=N, g=g, labels=("s", "s+"))


def ttm_corotating_system(sigma, g):
    """Linearized 2tmDOPO in the frame co-rotating with the bright pattern.

    Pump adiabatically eliminated; basis (b_+1, b_+1^+, b_-1, b_-1^+). The
    zero eigenvalue direction is the retained orientation freedom; the noise
    matrix is the conjugate-pair swap g^2 X.
    """
    s = sigma
    L = -np.array(
        [
            [s, 0, s - 1, -1],
            [0, s, -1, s - 1],
            [s - 1, -1, s, 0],
            [-1, s - 1, 0, s],
        ],
        dtype=complex,
    )
    N = g**2 * np.array(
        [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=complex
    )
    return LinearizedSystem(matrix=L, noise=N, g=g, labels=("+1", "+1+", "-1", "-1+"))


def linear_spectrum(sys: LinearizedSystem, u, omegas, *, singular_tol=1e-10):
    """V_out over a noise-frequency grid from the matrix engine.

    V = 1 + (2/g^2) Re[y1^T N y2] with (i w - L)^T y1 = u and
    (-i w - L^T) y2 = u. At frequencies where the resolvent is singular (a
    marginal/Goldstone mode), a quadrature that does not couple to the zero
    mode still has a finite limit, obtained from the minimum-norm solution;
    a coupled quadrature genuinely diverges and is reported as +inf.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    u = np.asarray(u, dtype=complex)
    L = sys.matrix
    N = sys.noise
    eye = np.eye(L.shape[0])
    out = np.empty(len(omegas))
    unorm = np.linalg.norm(u)
    for k, w in enumerate(omegas):
        a1 = (1j * w * eye - L).T
        a2 = -1j * w * eye - L.T
        smallest = np.linalg.svd(a1, compute_uv=False)[-1]
        if smallest < singular_tol * max(1.0, np.abs(L).max()):
            y1 = np.linalg.lstsq(a1, u, rcond=1e-8)[0]
            y2 = np.linalg.lstsq(a2, u, rcond=1e-8)[0]
            res = max(np.linalg.norm(a1 @ y1 - u), np.linalg.norm(a2 @ y2 - u))
            if res > 1e-8 * max(unorm, 1.0):
                out[k] = math.inf
                continue
        else:
            y1 = np.linalg.solve(a1, u)
            y2 = np.linalg.solve(a2, u)
        out[k] = 1.0 + (2.0 / sys.g**2) * float(np.real(y1 @ N @ y2))
    return out


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _check_domain(ok, msg):
    if not ok:
        raise ValueError(msg)


def dopo_below(sigma, quadrature, omega):
    """Single-mode DOPO below threshold; X antisqueezed, Y squeezed."""
    _check_domain(0 <= sigma <= 1, f"below-threshold form needs sigma in [0, 1], got {sigma}")
    omega = np.asarray(omega, dtype=float)
    ratio = ((1 + sigma) ** 2 + omega**2) / ((1 - sigma) ** 2 + omega**2)
    if quadrature == "x":
        return ratio
    if quadrature == "y":
        return 1.0 / ratio
    raise ValueError(f"unknown quadrature {quadrature!r}")


def dopo_above(sigma, quadrature, omega):
    """Single-mode DOPO above threshold in the pump-adiabatic limit."""
    _check_domain(sigma >= 1, f"above-threshold form needs sigma >= 1, got {sigma}")
    omega = np.asarray(omega, dtype=float)
    if quadrature == "x":
        return 1.0 + 1.0 / ((sigma - 1) ** 2 + omega**2 / 4)
    if quadrature == "y":
        return 1.0 - 1.0 / (sigma**2 + omega**2 / 4)
    raise ValueError(f"unknown quadrature {quadrature!r}")


def opo_below_joint(sigma, quadrature, omega):
    """Signal-idler joint quadratures below threshold.

    'x_minus' and 'y_plus' are the squeezed (EPR) combinations
    (X_s - X_i)/sqrt(2) and (Y_s + Y_i)/sqrt(2); 'x_plus'/'y_minus' their
    antisqueezed partners.
    """
    _check_domain(0 <= sigma <= 1, f"below-threshold form needs sigma in [0, 1], got {sigma}")
    omega = np.asarray(omega, dtype=float)
    squeezed = ((1 - sigma) ** 2 + omega**2) / ((1 + sigma) ** 2 + omega**2)
    if quadrature in ("x_minus", "y_plus"):
        return squeezed
    if quadrature in ("x_plus", "y_minus"):
        return 1.0 / squeezed
    raise ValueError(f"unknown quadrature {quadrature!r}")


def twin_beams(omega):
    """Amplitude-difference quadrature of the above-threshold OPO."""
    omega = np.asarray(omega, dtype=float)
    return omega**2 / (4.0 + omega**2)


def two_channel(sigma, r, quadrature, omega):
    """Non-amplified channel of the two-channel DOPO; pump clamps at sigma=1."""
    _check_domain(0 < r <= 1, "coupling ratio r must lie in (0, 1]")
    pump = min(sigma, 1.0)
    omega = np.asarray(omega, dtype=float)
    ratio = ((1 + r * pump) ** 2 + omega**2) / ((1 - r * pump) ** 2 + omega**2)
    if quadrature == "x":
        return ratio
    if quadrature == "y":
        return 1.0 / ratio
    raise ValueError(f"unknown quadrature {quadrature!r}")


def ttm(sigma, quadrature, omega):
    """Bright/dark-mode spectra of the two-transverse-mode DOPO above threshold.

    The dark-mode X quadrature is flat at the vacuum level (its conjugate
    variable is the pattern orientation, not a field quadrature).
    """
    _check_domain(sigma >= 1, f"needs sigma >= 1, got {sigma}")
    omega = np.asarray(omega, dtype=float)
    if quadrature == "x_bright":
        return 1.0 + 1.0 / ((sigma - 1) ** 2 + omega**2 / 4)
    if quadrature == "y_bright":
        return 1.0 - 1.0 / (sigma**2 + omega**2 / 4)
    if quadrature == "x_dark":
        return np.ones_like(omega)
    if quadrature == "y_dark":
        return 1.0 - 1.0 / (1.0 + omega**2 / 4)
    raise ValueError(f"unknown quadrature {quadrature!r}")


def injected_dark(i_0, quadrature, omega):
    """Undriven mode of the injected 2tmDOPO, given the pump intensity I_0."""
    _check_domain(i_0 >= 0, "pump intensity must be >= 0")
    omega = np.asarray(omega, dtype=float)
    root = math.sqrt(i_0)
    if quadrature == "x":
        return 1.0 + 4 * root / ((1 - root) ** 2 + omega**2)
    if quadrature == "y":
        return 1.0 - 4 * root / ((1 + root) ** 2 + omega**2)
    raise ValueError(f"unknown quadrature {quadrature!r}")


def family(sigma, r_l, quadrature, omega):
    """Non-amplified hybrid mode of coupling ratio r_l in an f-family DOPO."""
    return two_channel(sigma, r_l, quadrature, omega)


CLOSED_FORMS = {
    "dopo-below": dopo_below,
    "dopo-above": dopo_above,
    "opo-below": opo_below_joint,
    "twin-beams": lambda omega: twin_beams(omega),
    "two-channel": two_channel,
    "ttm": ttm,
    "injected-dark": injected_dark,
    "family": family,
}


def closed_form_spectrum(case, params, quadrature, omega):
    """Dispatch into the closed-form table by case name."""
    fn = CLOSED_FORMS[case]
    if case == "twin-beams":
        return fn(omega)
    return fn(*params, quadrature, omega)


# ---------------------------------------------------------------------------
# Fixed local oscillator
# ---------------------------------------------------------------------------


def _s01_zero(sigma, d, omega, t_window):
    """Rotation-noise part of the fixed-LO spectrum.

    The small-d compact form carries a 1/omega^2 in its diffusion correction
    that is an artifact of the expansion; at omega = 0 the finite limit
    4 T^2 / 3 of the leading term is returned instead (deviations are
    O(d T^3), beyond the expansion's validity there).
    """
    omega = np.asarray(omega, dtype=float)
    x = omega * t_window
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = 8.0 / safe**2 * (1.0 - np.sin(x) / np.where(small, 1.0, x))
        diff = (
            (4.0 * d * t_window / (safe**2 * (sigma - 1)))
            * (6.0 * (sigma - 1) ** 2 + omega**2)
            / (4.0 * (sigma - 1) ** 2 + omega**2)
        )
    return np.where(small, 4.0 * t_window**2 / 3.0, lead - diff)


def fixed_lo_spectrum(sigma, d, phi, omega, t_window):
    """Noise spectrum with the local oscillator frozen at the initial dark mode.

    Compact small-d expressions: V = 1 + S0 cos^2 phi + S90 sin^2 phi. Valid
    for sigma > 1, d << 1, finite detection window T (dimensionless).
    """
    if sigma <= 1:
        raise ValueError("fixed-LO spectrum requires sigma > 1")
    if t_window <= 0 or d < 0:
        raise ValueError("need T > 0 and d >= 0")
    omega = np.asarray(omega, dtype=float)
    s0 = _s01_zero(sigma, d, omega, t_window)
    s90 = (
        (8.0 - 2.0 * omega**2) / (t_window * (4.0 + omega**2) ** 2)
        - 4.0 / (4.0 + omega**2)
        + (8.0 * d * t_window * (2.0 * (sigma**2 + 1) + omega**2))
        / ((sigma - 1) * (4.0 + omega**2) * (4.0 * sigma**2 + omega**2))
    )
    return 1.0 + s0 * math.cos(phi) ** 2 + s90 * math.sin(phi) ** 2


def optimal_detection_time(sigma, d):
    """Detection window minimizing the fixed-LO noise at phi = pi/2, w = 0.

    T_opt = sqrt(sigma^2 (sigma - 1) / (d (sigma^2 + 1))), with associated
    optimum V_opt = 1 / T_opt.
    """
    if sigma <= 1 or d <= 0:
        raise ValueError("need sigma > 1 and d > 0")
    t_opt = math.sqrt(sigma**2 * (sigma - 1) / (d * (sigma**2 + 1)))
    return {"t_opt": t_opt, "v_opt": 1.0 / t_opt}


# ---------------------------------------------------------------------------
# Orientation diffusion
# ---------------------------------------------------------------------------


def orientation_statistics(g, sigma, tau=None, tau1=None, tau2=None):
    """Pattern-orientation diffusion of the rotationally symmetric system.

    d = g^2/4 is the bare diffusion, D = d/(sigma - 1) the orientation
    diffusion rate; V_theta(tau) = D tau with theta(0) = 0. The sine/cosine
    correlations of the Gaussian orientation are
    S = exp(-D (tau1+tau2)/2) sinh(D min), C = exp(-D (tau1+tau2)/2) cosh(D min).
    """
    if sigma <= 1:
        raise ValueError("orientation diffusion requires sigma > 1")
    d = g**2 / 4.0
    diffusion = d / (sigma - 1.0)
    out = {"d": d, "D": diffusion}
    if tau is not None:
        out["v_theta"] = diffusion * np.asarray(tau, dtype=float)
    if tau1 is not None and tau2 is not None:
        t1 = np.asarray(tau1, dtype=float)
        t2 = np.asarray(tau2, dtype=float)
        damp = np.exp(-0.5 * diffusion * (t1 + t2))
        mn = np.minimum(t1, t2)
        out["sin_corr"] = damp * np.sinh(diffusion * mn)
        out["cos_corr"] = damp * np.cosh(diffusion * mn)
    return out


def wiener_sin_cos(diffusion, tau1, tau2):
    """Sine/cosine correlations of a pure Wiener phase with theta(0) = 0."""
    t1 = np.asarray(tau1, dtype=float)
    t2 = np.asarray(tau2, dtype=float)
    damp = np.exp(-0.5 * diffusion * (t1 + t2))
    mn = np.minimum(t1, t2)
    return damp * np.sinh(diffusion * mn), damp * np.cosh(diffusion * mn)
