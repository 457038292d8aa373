"""Classical steady states, stability matrices and bifurcation scans.

Branches are computed from the closed-form solutions of each configuration
(with polynomial root finding where the solution is implicit); every branch
returned has been resubstituted into the classical equations with residual
below 1e-10. Stability is judged from the eigenvalues of the stability
matrix, i.e. the Jacobian of the drift in the doubled phase space evaluated
on the classical manifold, with known symmetry (Goldstone) zero modes
recognized by their eigenvector and excluded from the verdict.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import models

RESIDUAL_TOL = 1e-10
REAL_ROOT_TOL = 1e-9
ZERO_MODE_TOL = 1e-8
GOLDSTONE_OVERLAP = 0.99


class BranchResidualError(RuntimeError):
    """A candidate steady state failed the classical-equation residual check."""


@dataclass(frozen=True)
class SteadyBranch:
    """A classical fixed point (or continuum of them when a phase is free)."""

    label: str
    state: np.ndarray  # classical amplitudes, one per mode
    domain: str = ""
    free_phase: bool = False
    info: dict = field(default_factory=dict)

    def phase_space_state(self, model):
        return model.classical_to_phase_space(self.state)


@dataclass(frozen=True)
class StabilityReport:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    stable: bool
    zero_modes: list
    bifurcation: str | None = None


@dataclass(frozen=True)
class ScanEvent:
    parameter: float
    kind: str  # TurningPoint | Pitchfork | Hopf
    branch: str
    info: dict = field(default_factory=dict)


def _verify_branch(model, branch, tol=RESIDUAL_TOL):
    res = np.abs(model.classical_rhs(branch.state)).max()
    if res > tol:
        raise BranchResidualError(
            f"{branch.label} residual {res:.3e} exceeds {tol} for {type(model).__name__}"
        )
    return branch


def numeric_jacobian(model, classical_state, step=1e-6):
    """Central-difference Jacobian of the drift in the doubled phase space.

    The drift is analytic in the doubled variables (beta, beta^+ independent),
    so d f_j / d beta_l is well defined; differentiation is along the real
    direction of each complex coordinate.
    """
    state = model.classical_to_phase_space(classical_state)
    n = model.dim
    jac = np.zeros((n, n), dtype=complex)
    for j in range(n):
        dplus = state.copy()
        dminus = state.copy()
        dplus[j] += step
        dminus[j] -= step
        jac[:, j] = (model.drift(dplus) - model.drift(dminus)) / (2 * step)
    return jac


# ---------------------------------------------------------------------------
# Analytic stability matrices where the thesis provides them
# ---------------------------------------------------------------------------


def _dopo_matrix(model, z):
    bp, bs = z[0], z[1]
    k = model.kappa
    delta = getattr(model, "delta", 0.0)
    return np.array(
        [
            [-k, 0, -k * bs, 0],
            [0, -k, 0, -k * np.conj(bs)],
            [np.conj(bs), 0, -(1 + 1j * delta), bp],
            [0, bs, np.conj(bp), -(1 - 1j * delta)],
        ],
        dtype=complex,
    )


def _two_channel_matrix(model, z):
    bp, b1, b2 = z
    k, r = model.kappa, model.r
    return np.array(
        [
            [-k, 0, -k * b1, 0, -k * r * b2, 0],
            [0, -k, 0, -k * np.conj(b1), 0, -k * r * np.conj(b2)],
            [np.conj(b1), 0, -1, bp, 0, 0],
            [0, b1, np.conj(bp), -1, 0, 0],
            [r * np.conj(b2), 0, 0, 0, -1, r * bp],
            [0, r * b2, 0, 0, r * np.conj(bp), -1],
        ],
        dtype=complex,
    )


def _ttm_matrix(model, z):
    bp, ba, bb = z
    k = model.kappa
    return np.array(
        [
            [-k, 0, -k * bb, 0, -k * ba, 0],
            [0, -k, 0, -k * np.conj(bb), 0, -k * np.conj(ba)],
            [np.conj(bb), 0, -1, 0, 0, bp],
            [0, bb, 0, -1, bp.conjugate(), 0],
            [np.conj(ba), 0, 0, bp, -1, 0],
            [0, ba, np.conj(bp), 0, 0, -1],
        ],
        dtype=complex,
    )


_ANALYTIC_MATRICES = {
    models.DopoResonant: _dopo_matrix,
    models.DopoDetuned: _dopo_matrix,
    models.TwoChannel: _two_channel_matrix,
    models.TtmDopo: _ttm_matrix,
    models.Opo: _ttm_matrix,  # same structure: signal/idler <-> +-1
}


def _goldstone_direction(model, z):
    """Left null direction of the signal-phase-difference symmetry, if any."""
    if isinstance(model, (models.Opo, models.TtmDopo)):
        bs, bi = z[1], z[2]
        if abs(bs) < 1e-12 or abs(bi) < 1e-12:
            return None
        v = np.zeros(model.dim, dtype=complex)
        # generator of beta_s -> e^{-i theta} beta_s, beta_i -> e^{i theta} beta_i
        v[2], v[3], v[4], v[5] = -1j * bs, 1j * np.conj(bs), 1j * bi, -1j * np.conj(bi)
        return v / np.linalg.norm(v)
    if isinstance(model, models.FamilyDopo) and model.f % 2 == 1:
        idx = 2 + 4 * (len(model.angular_momenta) - 1)  # lowest-OAM pair block
        ba, bb = z[1 + 2 * (len(model.angular_momenta) - 1)], z[2 + 2 * (len(model.angular_momenta) - 1)]
        if abs(ba) < 1e-12:
            return None
        v = np.zeros(model.dim, dtype=complex)
        v[idx], v[idx + 1], v[idx + 2], v[idx + 3] = (
            -1j * ba,
            1j * np.conj(ba),
            1j * bb,
            -1j * np.conj(bb),
        )
        return v / np.linalg.norm(v)
    return None


def stability_matrix(model, branch, *, tol=RESIDUAL_TOL) -> StabilityReport:
    """Stability matrix, eigenvalues and verdict for a fixed point.

    When the configuration has a closed-form matrix it is used and asserted
    against the numeric Jacobian to 1e-8. A zero eigenvalue whose eigenvector
    overlaps the analytic symmetry direction by more than 0.99 is recorded as
    a Goldstone zero mode and excluded from the stability verdict; any other
    marginal eigenvalue marks the branch as a bifurcation point.
    """
    res = np.abs(model.classical_rhs(branch.state)).max()
    if res > max(tol, 1e-8):
        raise BranchResidualError(f"not a fixed point: residual {res:.3e}")
    jac = numeric_jacobian(model, branch.state)
    builder = _ANALYTIC_MATRICES.get(type(model))
    if builder is not None:
        analytic = builder(model, branch.state)
        if np.abs(analytic - jac).max() > 1e-8:
            raise AssertionError("analytic stability matrix disagrees with numeric Jacobian")
        jac = analytic
    eigvals, eigvecs = np.linalg.eig(jac)
    zero_modes = []
    goldstone = _goldstone_direction(model, branch.state)
    genuine = np.ones(len(eigvals), dtype=bool)
    for j, lam in enumerate(eigvals):
        if abs(lam.real) < ZERO_MODE_TOL:
            vec = eigvecs[:, j]
            if goldstone is not None and abs(np.vdot(goldstone, vec)) > GOLDSTONE_OVERLAP:
                zero_modes.append(j)
                genuine[j] = False
    stable = bool(np.all(eigvals[genuine].real < 0))
    bifurcation = None
    if genuine.any():
        margin = eigvals[genuine]
        crossing = margin[np.abs(margin.real) < ZERO_MODE_TOL]
        if crossing.size:
            bifurcation = "Hopf" if np.abs(crossing.imag).max() > 1e-6 else "Pitchfork"
    return StabilityReport(
        matrix=jac,
        eigenvalues=eigvals,
        stable=stable,
        zero_modes=zero_modes,
        bifurcation=bifurcation,
    )


# ---------------------------------------------------------------------------
# Closed-form branches
# ---------------------------------------------------------------------------


def analytic_steady(model) -> list:
    """All closed-form steady branches of a configuration, residual-checked."""
    sigma = model.sigma
    branches = []
    if isinstance(model, (models.DopoResonant,)):
        branches.append(SteadyBranch("off", np.array([sigma, 0j]), "all sigma"))
        if sigma >= 1:
            amp = math.sqrt(2 * (sigma - 1))
            for s, tag in ((amp, "on+"), (-amp, "on-")):
                branches.append(SteadyBranch(tag, np.array([1.0 + 0j, s + 0j]), "sigma >= 1"))
    elif isinstance(model, models.DopoDetuned):
        branches.append(SteadyBranch("off", np.array([sigma, 0j]), "all sigma"))
        thr = math.sqrt(1 + model.delta**2)
        if sigma >= thr:
            # |beta_p| = sqrt(1 + delta^2), |beta_s|^2 = 2 (sqrt(sigma^2 -
            # delta^2) - 1); the pump phase follows from resubstituting into
            # the pump equation (the quoted small-detuning sine is not exact)
            s = math.sqrt(sigma**2 - model.delta**2)
            rho_p = thr
            rho_s = math.sqrt(2 * (s - 1))
            phi_p = math.atan2(model.delta * (s - 1), s + model.delta**2)
            phi_s = (phi_p - math.atan(model.delta)) / 2
            bp = rho_p * cmath.exp(1j * phi_p)
            for sgn, tag in ((1, "on+"), (-1, "on-")):
                bs = sgn * rho_s * cmath.exp(1j * phi_s)
                branches.append(
                    SteadyBranch(tag, np.array([bp, bs]), f"sigma >= sqrt(1+delta^2) = {thr:.4g}")
                )
    elif isinstance(model, models.DopoAdiabatic):
        branches.append(SteadyBranch("off", np.array([0j]), "all sigma"))
        # the Stratonovich-shifted drift displaces the bright point by O(g^2)
        amp_sq = 2 * (sigma - 1) + model.g**2 / 2
        if amp_sq >= 0:
            amp = math.sqrt(amp_sq)
            branches.append(SteadyBranch("on+", np.array([amp + 0j]), "sigma >= 1"))
            branches.append(SteadyBranch("on-", np.array([-amp + 0j]), "sigma >= 1"))
    elif isinstance(model, (models.Opo, models.TtmDopo)):
        branches.append(SteadyBranch("off", np.array([sigma, 0j, 0j]), "all sigma"))
        if sigma >= 1:
            rho = math.sqrt(sigma - 1)
            branches.append(
                SteadyBranch(
                    "on",
                    np.array([1.0 + 0j, rho + 0j, rho + 0j]),
                    "sigma >= 1",
                    free_phase=True,
                    info={"rho": rho, "theta": 0.0},
                )
            )
    elif isinstance(model, models.TwoChannel):
        branches.append(SteadyBranch("off", np.array([sigma, 0j, 0j]), "all sigma"))
        if sigma >= 1:
            amp = math.sqrt(2 * (sigma - 1))
            branches.append(
                SteadyBranch("mode1", np.array([1.0 + 0j, amp + 0j, 0j]), "sigma >= 1")
            )
        if sigma >= 1 / model.r:
            # pump balance gives r amp^2 / 2 = sigma - 1/r
            amp = math.sqrt(2 * (sigma - 1 / model.r) / model.r)
            branches.append(
                SteadyBranch(
                    "mode2",
                    np.array([1 / model.r + 0j, 0j, amp + 0j]),
                    f"sigma >= 1/r = {1 / model.r:.4g}",
                )
            )
    elif isinstance(model, models.FamilyDopo):
        n_modes = model.classical_dim - 1
        off = np.zeros(n_modes + 1, dtype=complex)
        off[0] = sigma
        branches.append(SteadyBranch("off", off, "all sigma"))
        if sigma >= 1:
            on = np.zeros(n_modes + 1, dtype=complex)
            on[0] = 1.0
            if model.f % 2 == 0:
                on[-1] = math.sqrt(2 * (sigma - 1))
                branches.append(SteadyBranch("on", on, "sigma >= 1"))
            else:
                rho = math.sqrt(sigma - 1)
                on[-2] = rho
                on[-1] = rho
                branches.append(
                    SteadyBranch("on", on, "sigma >= 1", free_phase=True, info={"rho": rho})
                )
    else:
        raise ValueError(f"no closed-form branches for {type(model).__name__}; scan numerically")
    return [_verify_branch(model, b) for b in branches]


# ---------------------------------------------------------------------------
# Injected-signal 2tmDOPO branches (quintic)
# ---------------------------------------------------------------------------


def _polish_real_root(poly, x0, iterations=8):
    dp = np.polyder(poly)
    x = x0
    for _ in range(iterations):
        denom = np.polyval(dp, x)
        if denom == 0:
            break
        x -= np.polyval(poly, x) / denom
    return x


def _injected_quintic(sigma, phi_i, i_i):
    """Quintic in X = 1 + I_x/2 from the one-mode implicit relation."""
    c = math.cos(2 * phi_i)
    # 2 (sigma^2 - X^2)^2 (X - 1) - i_i (sigma^2 + X^2 + 2 sigma X c) = 0
    a = np.polynomial.polynomial.polypow([sigma**2, 0, -1], 2)  # (s^2 - X^2)^2
    lhs = 2.0 * np.polynomial.polynomial.polymul(a, [-1.0, 1.0])
    rhs = np.array([sigma**2, 2 * sigma * c, 1.0]) * i_i
    poly = np.polynomial.polynomial.polysub(lhs, rhs)
    return poly[::-1]  # highest power first, np.roots convention


def _one_mode_point(sigma, phi_i, i_i, x_big):
    """Assemble the classical (beta_0, beta_x) for a root X of the quintic."""
    denom = sigma**2 + x_big**2 + 2 * sigma * x_big * math.cos(2 * phi_i)
    if denom <= 0:
        return None
    i_x = 2 * (x_big - 1)
    phase = (sigma * cmath.exp(-1j * phi_i) + x_big * cmath.exp(1j * phi_i)) / math.sqrt(denom)
    sign = 1.0 if x_big > sigma else -1.0
    eps = math.sqrt(i_i) * cmath.exp(1j * phi_i)
    for s in (sign, -sign):
        beta_x = s * phase * math.sqrt(max(i_x, 0.0))
        beta_0 = sigma - beta_x**2 / 2.0
        residual = abs(eps - beta_x + beta_0 * np.conj(beta_x))
        if residual < 1e-9 * (1 + abs(eps)):
            return beta_0, beta_x
    return None


def injected_one_mode(sigma, phi_i, i_i, kappa=1.0, g=1e-3):
    """One-mode branches (y off) of the driven 2tmDOPO plus its thresholds.

    Returns (branches, thresholds) with thresholds holding I_x at the
    analytic turning point TP1, the numerically located TP2 (when sigma > 1),
    the pitchfork intensity I_x^PB, and the injection i_PB at the pitchfork.
    Root-finding: companion-matrix roots of the quintic in X = 1 + I_x/2 with
    a Newton polish; roots with |Im| < 1e-9 (1 + |Re|) and X >= 1 accepted.
    """
    if sigma < 0 or i_i < 0:
        raise ValueError("need sigma >= 0 and i_i >= 0")
    model = models.InjectedTtmDopo(sigma=sigma, i_i=i_i, phi_i=phi_i, kappa=kappa, g=g)
    i_pb = pitchfork_intensity(sigma, phi_i)
    inj_pb = pitchfork_injection(sigma, phi_i)
    thresholds = {
        "i_x_tp1": 2 * (sigma - 1) if sigma > 1 else None,
        "i_x_pb": i_pb,
        "i_i_pb": inj_pb,
        "i_x_tp2": turning_point_2(sigma, phi_i) if sigma > 1 else None,
    }
    branches = []
    if i_i == 0:
        branches.append(
            _verify_branch(model, SteadyBranch("one-mode", np.array([sigma, 0j, 0j]), "i_i = 0"))
        )
        return branches, thresholds
    poly = _injected_quintic(sigma, phi_i, i_i)
    roots = np.roots(poly)
    found = []
    for r in roots:
        if abs(r.imag) > REAL_ROOT_TOL * (1 + abs(r.real)):
            continue
        x = _polish_real_root(poly, r.real)
        if x < 1.0 - 1e-12:
            continue
        if any(abs(x - other) < 1e-9 * (1 + abs(x)) for other in found):
            continue
        found.append(max(x, 1.0))
    if not found:
        raise AssertionError("quintic produced no admissible root for i_i >= 0")
    for x in sorted(found):
        point = _one_mode_point(sigma, phi_i, i_i, x)
        if point is None:
            continue
        beta_0, beta_x = point
        i_x = 2 * (x - 1)
        stable = _one_mode_stable(sigma, i_x, thresholds)
        branch = SteadyBranch(
            "one-mode",
            np.array([beta_0, beta_x, 0j]),
            info={"i_x": i_x, "i_0": abs(beta_0) ** 2, "stable_flag": stable},
        )
        branches.append(_verify_branch(model, branch))
    return branches, thresholds


def _one_mode_stable(sigma, i_x, thresholds):
    hi = thresholds["i_x_pb"]
    if sigma > 1:
        return thresholds["i_x_tp1"] < i_x < hi
    return 0 <= i_x < hi


def pitchfork_intensity(sigma, phi_i):
    """I_x at which the undriven mode switches on (two-mode branch is born)."""
    return 2.0 * math.sqrt(1 + sigma**2 + 2 * sigma * math.cos(2 * phi_i))


def pitchfork_injection(sigma, phi_i):
    """Injection intensity at the pitchfork bifurcation."""
    c = math.cos(2 * phi_i)
    return 4.0 * (1 + sigma * c + math.sqrt(1 + 2 * sigma * c + sigma**2))


def turning_point_2(sigma, phi_i, bracket_tol=1e-12):
    """I_x at the lower turning point of the S-shaped one-mode curve.

    Located by golden-section minimization of the injection i_i(I_x) on the
    bracket (0, I_x^TP1), then a Newton polish on the derivative quartic
    (the factor of d i_i / dX with the double roots at X = +-sigma removed).
    """
    if sigma <= 1:
        return None
    c = math.cos(2 * phi_i)

    def inj_of_ix(i_x):
        x = 1 + i_x / 2
        denom = sigma**2 + x**2 + 2 * sigma * x * c
        return 2 * (sigma**2 - x**2) ** 2 * (x - 1) / denom

    lo, hi = 1e-9, 2 * (sigma - 1) - 1e-9
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = inj_of_ix(x1), inj_of_ix(x2)
    for _ in range(200):
        if b - a < bracket_tol * (1 + b):
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = inj_of_ix(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = inj_of_ix(x2)
    x_guess = 1 + (a + b) / 4
    # derivative quartic: (N' D - N D') / (sigma^2 - X^2) with
    # N = 2 (sigma^2 - X^2)^2 (X - 1), D = X^2 + 2 sigma c X + sigma^2
    P = np.polynomial.polynomial
    n_poly = 2.0 * P.polymul(P.polypow([sigma**2, 0, -1], 2), [-1.0, 1.0])
    d_poly = np.array([sigma**2, 2 * sigma * c, 1.0])
    num = P.polysub(P.polymul(P.polyder(n_poly), d_poly), P.polymul(n_poly, P.polyder(d_poly)))
    quart, rem = P.polydiv(num, [sigma**2, 0, -1])
    if np.abs(rem).max() > 1e-6 * max(1.0, np.abs(num).max()):
        raise AssertionError("derivative polynomial did not factor as expected")
    x = _polish_real_root(quart[::-1], x_guess, iterations=20)
    return 2 * (x - 1)


def injected_two_mode(sigma, phi_i, i_i, kappa=1.0, g=1e-3, sign=+1):
    """Two-mode branch of the driven 2tmDOPO (both signal modes on).

    Exists for i_i > i_i^PB; the y-mode phase is phi_i +- pi/2 (choose with
    ``sign``), the pump is clamped to |beta_0| = 1, and the branch is stable
    in its whole existence domain (asserted via the 6-dim Jacobian).
    """
    if i_i <= 0:
        raise ValueError("two-mode branch needs i_i > 0")
    s2 = math.sin(2 * phi_i)
    i_x = i_i / 4.0 + 4.0 * sigma**2 * s2**2 / i_i
    i_y = i_i / 4.0 - 4.0 * sigma**2 * s2**2 / i_i - 2.0 * (1 + sigma * math.cos(2 * phi_i))
    if i_y < 0:
        raise ValueError(
            f"two-mode solution does not exist: i_i = {i_i:.4g} <= "
            f"i_i^PB = {pitchfork_injection(sigma, phi_i):.4g}"
        )
    beta_0 = -cmath.exp(2j * phi_i)
    phi_x = phi_i + math.atan2(-4 * sigma * s2, i_i)
    phi_y = phi_i + sign * math.pi / 2
    model = models.InjectedTtmDopo(sigma=sigma, i_i=i_i, phi_i=phi_i, kappa=kappa, g=g)
    state = np.array(
        [beta_0, math.sqrt(i_x) * cmath.exp(1j * phi_x), math.sqrt(i_y) * cmath.exp(1j * phi_y)]
    )
    branch = SteadyBranch(
        "two-mode",
        state,
        domain=f"i_i > {pitchfork_injection(sigma, phi_i):.6g}",
        info={"i_x": i_x, "i_y": i_y, "phi_x": phi_x, "phi_y": phi_y},
    )
    _verify_branch(model, branch)
    report = stability_matrix(model, branch)
    if i_y > 1e-10 and not report.stable:
        raise AssertionError("two-mode branch expected stable in its existence domain")
    return branch


# ---------------------------------------------------------------------------
# Actively-phase-locked OPO (cubic)
# ---------------------------------------------------------------------------


def active_lock(sigma, delta, i_inject):
    """Symmetric branches of the actively-locked OPO and its organizing points.

    Returns (branches, points). Points: the fold intensities I_- and I_+
    (present for sigma > 1 + sqrt(3) delta), the pitchfork I_PB, and the
    Hopf I_HB with frequency omega_HB (present for 1 < sigma < 1 + 2 delta).
    Branch stability: stable iff I_HB < I < I_PB and the root is not on the
    middle fold branch, from the analytic eigenvalues of the 4x4 matrix in
    the bright/dark basis (cross-checked with the numeric Jacobian).
    """
    if sigma < 0 or i_inject < 0 or delta < 0:
        raise ValueError("need sigma, delta, i_inject >= 0")
    disc = (sigma - 1) ** 2 - 3 * delta**2
    points = {
        "i_minus": (2 * (sigma - 1) - math.sqrt(disc)) / 3 if sigma > 1 and disc > 0 else None,
        "i_plus": (2 * (sigma - 1) + math.sqrt(disc)) / 3 if sigma > 1 and disc > 0 else None,
        "i_pb": math.sqrt((1 + sigma) ** 2 + delta**2),
        "i_hb": (sigma - 1) / 2 if 1 < sigma < 1 + 2 * delta else None,
        "omega_hb": math.sqrt(max(delta**2 - (sigma - 1) ** 2 / 4, 0.0))
        if 1 < sigma < 1 + 2 * delta
        else None,
    }
    model = models.ActiveLockClassical(sigma=sigma, delta=delta, i_inject=i_inject)
    coeffs = [1.0, 2 * (1 - sigma), (1 - sigma) ** 2 + delta**2, -i_inject]
    branches = []
    seen = []
    for root in np.roots(coeffs):
        if abs(root.imag) > REAL_ROOT_TOL * (1 + abs(root.real)):
            continue
        big_i = _polish_real_root(np.array(coeffs), root.real)
        if big_i < 0 or any(abs(big_i - s) < 1e-9 * (1 + big_i) for s in seen):
            continue
        seen.append(big_i)
        phi = cmath.phase(big_i + 1 - sigma - 1j * delta)
        beta_s = math.sqrt(big_i) * cmath.exp(1j * phi)
        branch = SteadyBranch(
            "symmetric",
            np.array([beta_s, np.conj(beta_s)]),
            info={
                "intensity": big_i,
                "phase": phi,
                "eigenvalues": _active_lock_eigenvalues(sigma, delta, big_i),
                "stable_flag": _active_lock_stable(sigma, delta, big_i, points),
            },
        )
        if i_inject > 0:
            _verify_branch(model, branch)
        branches.append(branch)
    branches.sort(key=lambda b: b.info["intensity"])
    return branches, points


def _active_lock_eigenvalues(sigma, delta, big_i):
    root = cmath.sqrt(complex(big_i**2 - delta**2))
    return np.array(
        [
            -(1 + sigma) + root,
            -(1 + sigma) - root,
            sigma - 1 - 2 * big_i + root,
            sigma - 1 - 2 * big_i - root,
        ]
    )


def _active_lock_stable(sigma, delta, big_i, points):
    eigs = _active_lock_eigenvalues(sigma, delta, big_i)
    if np.max(eigs.real) >= 0:
        return False
    if points["i_minus"] is not None and points["i_minus"] < big_i < points["i_plus"]:
        return False
    return True


# ---------------------------------------------------------------------------
# Bifurcation scans
# ---------------------------------------------------------------------------


def _set_param(model, name, value):
    kwargs = {f.name: getattr(model, f.name) for f in model.__dataclass_fields__.values()}
    kwargs[name] = value
    return type(model)(**kwargs)


def bifurcation_scan(model, parameter, values):
    """Branches + stability over a parameter grid, with labeled events.

    Returns (rows, events). Each row is a dict with the parameter value and a
    list of (branch, StabilityReport). Events are sign changes of the leading
    non-Goldstone eigenvalue, labeled Hopf when the crossing pair is complex,
    TurningPoint when a branch appears/disappears at the crossing, Pitchfork
    otherwise. Specialized thresholds are used for the injected and
    actively-locked configurations.
    """
    values = np.asarray(values, dtype=float)
    if np.any(np.diff(values) <= 0):
        raise ValueError("parameter grid must be strictly increasing")
    rows = []
    events = []
    if isinstance(model, models.ActiveLockClassical):
        for v in values:
            m = _set_param(model, parameter, v)
            branches, points = active_lock(m.sigma, m.delta, m.i_inject)
            rows.append({"parameter": v, "branches": branches, "points": points})
        if parameter == "i_inject":
            events = _active_lock_events(rows)
        else:
            events = _generic_flag_events(rows, lambda b: b.info["stable_flag"])
        return rows, events
    if isinstance(model, models.InjectedTtmDopo):
        for v in values:
            m = _set_param(model, parameter, v)
            branches, thr = injected_one_mode(m.sigma, m.phi_i, m.i_i, m.kappa, m.g)
            try:
                branches = branches + [injected_two_mode(m.sigma, m.phi_i, m.i_i, m.kappa, m.g)]
            except ValueError:
                pass
            rows.append({"parameter": v, "branches": branches, "points": thr})
        events = _injected_events(model, parameter, rows, values)
        return rows, events
    # generic closed-form models
    reports_prev = None
    for v in values:
        m = _set_param(model, parameter, v)
        branches = analytic_steady(m)
        reports = [(b, stability_matrix(m, b)) for b in branches]
        rows.append({"parameter": v, "branches": reports})
        reports_prev = reports
    events = _generic_events(rows, values)
    return rows, events


def _leading_real(report, exclude_zero_modes=True):
    eig = report.eigenvalues
    mask = np.ones(len(eig), dtype=bool)
    for j in report.zero_modes:
        mask[j] = False
    vals = eig[mask]
    j = int(np.argmax(vals.real))
    return vals[j]

def _generic_events(rows, values):
    step = values[1] - values[0] if len(values) > 1 else 0.0
    events = []
    boundaries = []
    by_label_prev = {}
    for row in rows:
        by_label = {}
        for branch, report in row["branches"]:
            by_label[branch.label] = (branch, report)
        for label, (branch, report) in by_label.items():
            if label in by_label_prev:
                lam_prev = _leading_real(by_label_prev[label][1])
                lam = _leading_real(report)
                if lam_prev.real < 0 <= lam.real or lam.real < 0 <= lam_prev.real:
                    kind = "Hopf" if max(abs(lam.imag), abs(lam_prev.imag)) > 1e-6 else "Pitchfork"
                    events.append(ScanEvent(parameter=row["parameter"], kind=kind, branch=label))
        new = set(by_label) - set(by_label_prev)
        gone = set(by_label_prev) - set(by_label)
        if by_label_prev and (new or gone):
            for label in sorted(new | gone):
                if label != "off":
                    boundaries.append(
                        ScanEvent(parameter=row["parameter"], kind="BranchBoundary", branch=label)
                    )
        by_label_prev = by_label
    # drop existence boundaries that coincide with a detected bifurcation:
    # they are the same event seen from the newborn branches
    for b in boundaries:
        if not any(abs(b.parameter - e.parameter) <= 2 * step for e in events):
            events.append(b)
    events.sort(key=lambda e: e.parameter)
    return events


def _generic_flag_events(rows, flag):
    events = []
    prev = None
    for row in rows:
        stable = any(flag(b) for b in row["branches"])
        if prev is not None and stable != prev:
            events.append(ScanEvent(parameter=row["parameter"], kind="StabilityChange",
                                    branch="symmetric"))
        prev = stable
    return events


def _active_lock_track(branch, points):
    i_minus, i_plus = points["i_minus"], points["i_plus"]
    if i_minus is None:
        return "main"
    big_i = branch.info["intensity"]
    if big_i < i_minus - 1e-12:
        return "lower"
    if big_i > i_plus + 1e-12:
        return "upper"
    return "middle"


def _active_lock_events(rows):
    """TP/PB/HB events on the injection axis from per-track eigenvalues.

    Folds show up as root-count changes; on every continuously tracked
    branch, a sign change of max Re(lambda) is a Hopf when the crossing
    eigenvalue carries a finite imaginary part, a pitchfork otherwise.
    """
    events = []
    prev_tracks = None
    prev_count = None
    for row in rows:
        points = row["points"]
        tracks = {}
        for b in row["branches"]:
            tracks[_active_lock_track(b, points)] = b
        count = len(row["branches"])
        if prev_count is not None and count != prev_count:
            events.append(
                ScanEvent(parameter=row["parameter"], kind="TurningPoint", branch="symmetric",
                          info={"from": prev_count, "to": count})
            )
        if prev_tracks:
            for name, b in tracks.items():
                if name not in prev_tracks:
                    continue
                lam_prev = prev_tracks[name].info["eigenvalues"]
                lam = b.info["eigenvalues"]
                m_prev = lam_prev[np.argmax(lam_prev.real)]
                m_now = lam[np.argmax(lam.real)]
                if (m_prev.real < 0) != (m_now.real < 0):
                    kind = (
                        "Hopf"
                        if max(abs(m_prev.imag), abs(m_now.imag)) > 1e-6
                        else "Pitchfork"
                    )
                    events.append(
                        ScanEvent(parameter=row["parameter"], kind=kind, branch=name)
                    )
        prev_tracks, prev_count = tracks, count
    events.sort(key=lambda e: e.parameter)
    return events


def _injected_events(model, parameter, rows, values):
    """TP/PB events of the injected configuration on the scanned axis."""
    events = []
    if parameter != "i_i":
        return _generic_flag_events(rows, lambda b: b.info.get("stable_flag", False))
    sigma, phi_i = model.sigma, model.phi_i
    inj_pb = pitchfork_injection(sigma, phi_i)
    if values[0] <= inj_pb <= values[-1]:
        events.append(ScanEvent(parameter=inj_pb, kind="Pitchfork", branch="two-mode"))
    if sigma > 1:
        events.append(ScanEvent(parameter=0.0, kind="TurningPoint", branch="one-mode",
                                info={"which": "TP1"}))
        i_x_tp2 = turning_point_2(sigma, phi_i)
        x = 1 + i_x_tp2 / 2
        c = math.cos(2 * phi_i)
        inj_tp2 = 2 * (sigma**2 - x**2) ** 2 * (x - 1) / (sigma**2 + x**2 + 2 * sigma * x * c)
        if values[0] <= inj_tp2 <= values[-1]:
            events.append(ScanEvent(parameter=inj_tp2, kind="TurningPoint", branch="one-mode",
                                    info={"which": "TP2"}))
    events.sort(key=lambda e: e.parameter)
    return events
