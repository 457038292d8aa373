"""Paraxial resonator analysis and physical-parameter conversion.

Covers the linear two-mirror cavity with an optional intracavity dielectric
slab: roundtrip ABCD matrix, stability, Gouy phase and resonance comb,
Gaussian mode geometry, transverse-mode evaluation (Hermite-Gauss,
Laguerre-Gauss and hybrid bases), radial overlap integrals between pump and
signal modes, loss/injection rate conversion, and polarization-ellipse
parameters.

Conventions: all frequencies are angular (rad/s); lengths are in meters;
mirror curvature radii are positive for concave mirrors facing the cavity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.constants import c as C_LIGHT, epsilon_0 as EPS0, hbar as HBAR


class GeometryError(ValueError):
    """Raised when a cavity geometry violates its invariants."""


class UnstableCavityError(ValueError):
    """Raised when an operation requires a geometrically stable cavity."""


@dataclass(frozen=True)
class CavityGeometry:
    """Linear cavity: two spherical mirrors plus an optional plane slab.

    Parameters
    ----------
    r1, r2 : float
        Mirror curvature radii (m). Use ``math.inf`` for plane mirrors.
    length : float
        Geometric mirror separation L (m).
    crystal_length : float
        Length of the intracavity dielectric slab (m).
    crystal_index : float
        Refractive index of the slab (>= 1).
    t_s, t_p : float
        Output-mirror intensity transmittivities at the signal and pump
        wavelengths, each in [0, 1].
    """

    r1: float
    r2: float
    length: float
    crystal_length: float = 0.0
    crystal_index: float = 1.0
    t_s: float = 0.0
    t_p: float = 0.0

    def __post_init__(self):
        if self.length <= 0:
            raise GeometryError(f"cavity length must be positive, got {self.length}")
        if not 0 <= self.crystal_length <= self.length:
            raise GeometryError("crystal length must lie in [0, L]")
        if self.crystal_index < 1:
            raise GeometryError("crystal index must be >= 1")
        for name in ("t_s", "t_p"):
            t = getattr(self, name)
            if not 0 <= t <= 1:
                raise GeometryError(f"{name} must lie in [0, 1], got {t}")
        if self.effective_length <= 0 or self.optical_length <= 0:
            raise GeometryError("effective/optical cavity length must be positive")

    @property
    def effective_length(self) -> float:
        """L_eff = L - (1 - 1/n_c) l_c, the slab-corrected propagation length."""
        return self.length - (1.0 - 1.0 / self.crystal_index) * self.crystal_length

    @property
    def optical_length(self) -> float:
        """L_opt = L + (n_c - 1) l_c, sum of n_j l_j over the roundtrip half."""
        return self.length + (self.crystal_index - 1.0) * self.crystal_length

    @property
    def g1(self) -> float:
        return 1.0 - self.effective_length / self.r1

    @property
    def g2(self) -> float:
        return 1.0 - self.effective_length / self.r2


@dataclass(frozen=True)
class GeometryAnalysis:
    abcd: np.ndarray
    g1: float
    g2: float
    stable: bool
    gouy: float
    fsr: float


def analyze_geometry(geom: CavityGeometry) -> GeometryAnalysis:
    """Roundtrip ABCD matrix, g-parameters, stability flag, Gouy phase, FSR.

    The roundtrip is referenced to mirror 1 with rays propagating away from
    it. Stability holds iff 0 < g1 g2 < 1 (strict); the roundtrip Gouy phase
    is 2 arccos(+-sqrt(g1 g2)) with the '+' sign for g2 > 0, and the free
    spectral range is pi c / L_opt in rad/s.
    """
    g1, g2 = geom.g1, geom.g2
    leff = geom.effective_length
    abcd = np.array(
        [
            [2 * g2 - 1, 2 * g2 * leff],
            [2 * (2 * g1 * g2 - g2 - g1) / leff, 4 * g1 * g2 - 2 * g2 - 1],
        ]
    )
    prod = g1 * g2
    stable = 0.0 < prod < 1.0
    if 0.0 <= prod <= 1.0:
        root = math.sqrt(prod)
        gouy = 2.0 * math.acos(root if g2 > 0 else -root)
    else:
        gouy = math.nan
    fsr = math.pi * C_LIGHT / geom.optical_length
    return GeometryAnalysis(abcd=abcd, g1=g1, g2=g2, stable=stable, gouy=gouy, fsr=fsr)


def resonance_frequency(geom: CavityGeometry, q: int, f: int) -> float:
    """Resonance of longitudinal index q and transverse family f, in rad/s.

    omega_qf = Omega_FSR [q + (1 + f) zeta / 2 pi]. Requires 0 <= g1 g2 <= 1
    so the roundtrip Gouy phase is defined (the open endpoints correspond to
    the marginal near-planar and concentric cavities).
    """
    if q < 1 or f < 0:
        raise ValueError("need q >= 1 and f >= 0")
    ana = analyze_geometry(geom)
    if math.isnan(ana.gouy):
        raise UnstableCavityError(f"g1 g2 = {ana.g1 * ana.g2:.6g} outside [0, 1]")
    return ana.fsr * (q + (1 + f) * ana.gouy / (2 * math.pi))


@dataclass(frozen=True)
class GaussianBeam:
    """Gaussian mode geometry of a stable cavity at wavelength lambda.

    ``z`` is measured from the waist plane (effective longitudinal
    coordinate when a slab is present).
    """

    w0: float
    z1_eff: float
    z_r: float
    wavelength: float

    def spot_size(self, z):
        return self.w0 * np.sqrt(1.0 + (z / self.z_r) ** 2)

    def curvature_radius(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return z * (1.0 + (self.z_r / z) ** 2)

    def gouy_phase(self, z):
        return -np.arctan(np.asarray(z, dtype=float) / self.z_r)

    def q_parameter(self, z):
        return np.asarray(z, dtype=float) - 1j * self.z_r


def gaussian_mode_geometry(geom: CavityGeometry, wavelength: float) -> GaussianBeam:
    """Waist size/position and propagation laws of the cavity mode.

    The symmetric case g1 = g2 = g is evaluated through the reduced form
    (1+g)/(4(1-g)), which stays finite at g = 0 where the general expression
    is 0/0 (confocal cavity).
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    g1, g2 = geom.g1, geom.g2
    prod = g1 * g2
    if not 0 < prod < 1:
        if not (g1 == g2 and 0 <= prod < 1):
            raise UnstableCavityError(f"g1 g2 = {prod:.6g} outside (0, 1)")
    leff = geom.effective_length
    if g1 == g2:
        ratio = (1.0 + g1) / (4.0 * (1.0 - g1))
        z1 = leff / 2.0
    else:
        ratio = prod * (1.0 - prod) / (g1 + g2 - 2.0 * prod) ** 2
        z1 = leff * (1.0 - g1) * abs(g2) / abs(g1 + g2 - 2.0 * prod)
    w0 = math.sqrt(wavelength * leff / math.pi) * ratio**0.25
    k = 2.0 * math.pi / wavelength
    return GaussianBeam(w0=w0, z1_eff=z1, z_r=k * w0**2 / 2.0, wavelength=wavelength)


# ---------------------------------------------------------------------------
# Transverse modes
# ---------------------------------------------------------------------------

_MAX_POLY_ORDER = 30


@dataclass(frozen=True)
class ModeSpec:
    """A transverse-mode identity.

    basis 'hg' uses indices (m, n); 'lg' uses (p, l) with l any integer;
    'hlg' uses (j, p, l) with j in {'c', 's'} and p, l >= 0. ``k`` is the
    wavevector (1/m) and ``w0`` the waist size (m).
    """

    basis: str
    indices: tuple
    k: float
    w0: float
    waist_position: float = 0.0

    def __post_init__(self):
        if self.basis not in ("hg", "lg", "hlg"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.basis == "hg":
            m, n = self.indices
            if m < 0 or n < 0 or max(m, n) > _MAX_POLY_ORDER:
                raise ValueError("HG indices must be in [0, 30]")
        elif self.basis == "lg":
            p, l = self.indices
            if p < 0 or p > _MAX_POLY_ORDER:
                raise ValueError("LG radial index must be in [0, 30]")
        else:
            j, p, l = self.indices
            if j not in ("c", "s") or p < 0 or l < 0 or p > _MAX_POLY_ORDER:
                raise ValueError("HLG indices must be (j in {c,s}, p >= 0, l >= 0)")

    @property
    def family(self) -> int:
        if self.basis == "hg":
            m, n = self.indices
            return m + n
        p, l = self.indices[-2:]
        return 2 * p + abs(l)


def _beam_of(mode: ModeSpec) -> GaussianBeam:
    return GaussianBeam(
        w0=mode.w0,
        z1_eff=0.0,
        z_r=mode.k * mode.w0**2 / 2.0,
        wavelength=2.0 * math.pi / mode.k,
    )


def _hg_amplitude(m, n, k, beam, x, y, z):
    w = beam.spot_size(z)
    q = beam.q_parameter(z)
    psi = beam.gouy_phase(z)
    norm = 1.0 / (math.sqrt(2.0 ** (m + n - 1) * math.pi * math.factorial(m) * math.factorial(n)) * w)
    hx = special.eval_hermite(m, np.sqrt(2.0) * x / w)
    hy = special.eval_hermite(n, np.sqrt(2.0) * y / w)
    phase = np.exp(1j * k * (x**2 + y**2) / (2.0 * q) + 1j * (1 + m + n) * psi)
    return norm * hx * hy * phase


def _lg_amplitude(p, l, k, beam, x, y, z):
    w = beam.spot_size(z)
    q = beam.q_parameter(z)
    psi = beam.gouy_phase(z)
    r2 = x**2 + y**2
    r = np.sqrt(r2)
    phi = np.arctan2(y, x)
    al = abs(l)
    norm = math.sqrt(2.0 * math.factorial(p) / (math.pi * math.factorial(p + al))) / w
    radial = (np.sqrt(2.0) * r / w) ** al * special.eval_genlaguerre(p, al, 2.0 * r2 / w**2)
    phase = np.exp(1j * k * r2 / (2.0 * q) + 1j * (1 + 2 * p + al) * psi + 1j * l * phi)
    return norm * radial * phase


def mode_amplitude(mode: ModeSpec, r_perp, z):
    """Complex transverse-mode amplitude at points r_perp = (x, y), plane z.

    ``r_perp`` is a pair of broadcastable arrays (or scalars); ``z`` is
    measured from the waist plane. The returned field is orthonormal under
    the transverse integral at any z. Hermite and generalized Laguerre
    polynomials are evaluated by scipy's three-term recurrences, stable for
    indices up to 30. The hybrid sine mode with l = 0 is identically zero
    and the hybrid cosine mode with l = 0 equals the LG (p, 0) mode.
    """
    x = np.asarray(r_perp[0], dtype=float)
    y = np.asarray(r_perp[1], dtype=float)
    zz = np.asarray(z, dtype=float) - mode.waist_position
    beam = _beam_of(mode)
    if mode.basis == "hg":
        m, n = mode.indices
        return _hg_amplitude(m, n, mode.k, beam, x, y, zz)
    if mode.basis == "lg":
        p, l = mode.indices
        return _lg_amplitude(p, l, mode.k, beam, x, y, zz)
    j, p, l = mode.indices
    if l == 0:
        if j == "s":
            return np.zeros(np.broadcast(x, y, zz).shape, dtype=complex)
        return _lg_amplitude(p, 0, mode.k, beam, x, y, zz)
    plus = _lg_amplitude(p, l, mode.k, beam, x, y, zz)
    minus = _lg_amplitude(p, -l, mode.k, beam, x, y, zz)
    if j == "c":
        return (plus + minus) / math.sqrt(2.0)
    return (plus - minus) / (1j * math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Pump-signal overlap couplings for a transverse family
# ---------------------------------------------------------------------------

_RADIAL_CUTOFF = 12.0  # integrand ~ exp(-2 u^2); tail mass beyond is < 1e-120


def _family_angular_momenta(f: int) -> list:
    l0 = f % 2
    return list(range(f, l0 - 1, -2))


def _radial_overlap(f: int, l: int, rho: float) -> float:
    """I_l(rho): radial three-mode overlap of the pump with an OAM-l pair.

    Computed on u = r / w_s with an adaptive quadrature on [0, 12]; the
    Gaussian envelope exp(-u^2 (1 + 1/2 rho^2)) bounds the discarded tail far
    below the 1e-9 relative tolerance.
    """
    p = (f - l) // 2
    alpha = 1.0 + 1.0 / (2.0 * rho**2)
    prefac = math.exp(special.gammaln(p + 1) - special.gammaln(p + l + 1)) / rho

    def integrand(u):
        u2 = u * u
        lag = special.eval_genlaguerre(p, l, u2)
        return math.exp(-alpha * u2) * u ** (2 * l + 1) * lag * lag

    val, err = integrate.quad(integrand, 0.0, _RADIAL_CUTOFF, epsabs=0.0, epsrel=1e-9, limit=200)
    if not math.isfinite(val) or (val != 0 and err / abs(val) > 1e-8):
        raise ArithmeticError(f"radial overlap quadrature failed for f={f}, l={l}: err={err}")
    return prefac * val


def family_couplings(f: int, rho: float) -> dict:
    """Nonlinear couplings of the f-family OAM pairs to a Gaussian pump.

    Parameters
    ----------
    f : int
        Transverse family index at the signal frequency (f >= 0).
    rho : float
        Pump-to-signal spot-size ratio w_p / w_s. The common-cavity case is
        rho = 1/sqrt(2).

    Returns
    -------
    dict with keys ``l`` (list of angular momenta f, f-2, ..., l0), ``i_l``
    (overlap integrals), ``r_l`` (couplings normalized to the l0 channel,
    each in (0, 1]) and ``r_th`` (oscillation-threshold power relative to the
    common-cavity geometry).
    """
    if f < 0 or rho <= 0:
        raise ValueError("need f >= 0 and rho > 0")
    ells = _family_angular_momenta(f)
    i_l = np.array([_radial_overlap(f, l, rho) for l in ells])
    i_l0 = i_l[-1]
    r_l = i_l / i_l0
    i_ref = _radial_overlap(f, ells[-1], 1.0 / math.sqrt(2.0))
    return {"l": ells, "i_l": i_l, "r_l": r_l, "r_th": (i_ref / i_l0) ** 2}


# ---------------------------------------------------------------------------
# Physical-to-dimensionless parameter conversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalParams:
    """Physical inputs for the rate conversion.

    chi2 is the effective second-order susceptibility (m/V), pump_power the
    injected power (W), wavelength the signal wavelength (m).
    """

    chi2: float
    pump_power: float
    wavelength: float
    geometry: CavityGeometry = field(default_factory=lambda: CavityGeometry(math.inf, math.inf, 1.0))

    def __post_init__(self):
        if self.chi2 <= 0 or self.wavelength <= 0 or self.pump_power < 0:
            raise ValueError("chi2 and wavelength must be positive, pump power >= 0")


def loss_rate(transmittivity: float, optical_length: float) -> float:
    """Cavity amplitude damping rate gamma = c T / 4 L_opt, valid for T << 1."""
    if not 0 <= transmittivity < 1:
        raise ValueError("transmittivity must lie in [0, 1)")
    return C_LIGHT * transmittivity / (4.0 * optical_length)


def injection_amplitude(power: float, gamma: float, omega: float) -> float:
    """|E| = sqrt(2 gamma P / hbar omega), the driving rate of the pumped mode."""
    if power < 0:
        raise ValueError("power must be >= 0")
    return math.sqrt(2.0 * gamma * power / (HBAR * omega))


def physical_rates(params: PhysicalParams, omega_c: float) -> dict:
    """Dimensionless model parameters from physical cavity/crystal numbers.

    Returns gamma_s, gamma_p (1/s), the pump injection amplitude, the
    dimensionless nonlinearity g and the pump parameter sigma. The cavity is
    taken symmetric and confocal at the signal wavelength for the waist
    entering g; the slab-corrected L_eff and L_opt of the geometry are used
    directly. Note the refractive index enters as n_c^3 (it comes with the
    cube in the three-wave coupling); the linearized loss rate requires
    T << 1.
    """
    geom = params.geometry
    if geom.t_p >= 1 or geom.t_s >= 1:
        raise ValueError("transmittivities must be < 1 for the linearized loss rate")
    leff, lopt = geom.effective_length, geom.optical_length
    gamma_s = loss_rate(geom.t_s, lopt)
    gamma_p = loss_rate(geom.t_p, lopt)
    amp = injection_amplitude(params.pump_power, gamma_p, omega_c)
    g = (
        12.0
        * params.chi2
        * geom.crystal_length
        / params.wavelength**2
        * math.sqrt(
            2.0
            * math.pi
            * HBAR
            * C_LIGHT
            / (leff * lopt * geom.t_p * geom.t_s * EPS0 * geom.crystal_index**3)
        )
    )
    chi = g * math.sqrt(gamma_p * gamma_s)
    sigma = chi * amp / (gamma_p * gamma_s)
    return {
        "gamma_s": gamma_s,
        "gamma_p": gamma_p,
        "amplitude": amp,
        "g": g,
        "chi": chi,
        "sigma": sigma,
    }


# ---------------------------------------------------------------------------
# Polarization ellipse
# ---------------------------------------------------------------------------


def ellipse_params(theta: float, phi: float) -> dict:
    """Polarization-ellipse parameters of e_x e^{-i theta} cos phi + e_y e^{i theta} sin phi.

    theta in [0, pi], phi in [0, pi/2]. Returns the orientation beta in
    [-pi/2, pi/2] from tan 2beta = tan 2phi cos 2theta, the auxiliary angle
    chi in [-pi/4, pi/4] from sin 2chi = sin 2phi sin 2theta, the semi-axes
    a, b (a^2 + b^2 = 1) and the eccentricity e = sqrt(1 - tan^2 chi).
    """
    if not 0 <= theta <= math.pi or not 0 <= phi <= math.pi / 2:
        raise ValueError("need theta in [0, pi] and phi in [0, pi/2]")
    beta = 0.5 * math.atan2(math.sin(2 * phi) * math.cos(2 * theta), math.cos(2 * phi))
    chi = 0.5 * math.asin(min(1.0, max(-1.0, math.sin(2 * phi) * math.sin(2 * theta))))
    a = abs(math.cos(chi))
    b = abs(math.sin(chi))
    ecc = math.sqrt(max(0.0, 1.0 - math.tan(chi) ** 2))
    return {"beta": beta, "chi": chi, "e": ecc, "a": a, "b": b}
