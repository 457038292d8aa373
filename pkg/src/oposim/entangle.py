"""Squeezed/entangled-state metrics.

Single- and two-mode squeezing variance transforms, the Duan-Simon
separability witness for Gaussian states, and the Schmidt distribution /
entanglement entropy of a two-mode squeezed vacuum after k photon additions
on one arm (equivalently k subtractions on the other). Entropies are in
natural-log units (nats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

TAIL_MASS = 1e-12


@dataclass(frozen=True)
class QuadratureVariances:
    """Variances labeled by quadrature, plus the squeezing parameters."""

    r: float
    theta: float
    two_mode: bool
    variances: dict


def squeezing_variances(r, theta=0.0, two_mode=False) -> QuadratureVariances:
    """Quadrature variances of a squeezed vacuum.

    Single mode: the theta/2 quadrature contracts to e^{-2r} in variance and
    its orthogonal dilates to e^{2r} (minimum uncertainty state). Two-mode:
    the joint combinations (X_A + X_B)/sqrt(2) and (Y_A - Y_B)/sqrt(2)
    squeeze to e^{-2r} while their partners dilate (for theta = 0), and the
    Duan-Simon witness of the pair is W = 2 e^{-2r}.
    """
    if r < 0:
        raise ValueError("squeezing parameter r must be >= 0")
    if not two_mode:
        variances = {
            "x": math.exp(-2 * r),
            "y": math.exp(2 * r),
        }
    else:
        variances = {
            "x_plus": math.exp(-2 * r),
            "y_minus": math.exp(-2 * r),
            "x_minus": math.exp(2 * r),
            "y_plus": math.exp(2 * r),
            "witness": 2 * math.exp(-2 * r),
        }
    return QuadratureVariances(r=r, theta=theta, two_mode=two_mode, variances=variances)


def duan_simon(v_sum, v_diff):
    """Separability witness W = V_diff + V_sum; entangled iff W < 2."""
    if v_sum < 0 or v_diff < 0:
        raise ValueError("variances must be >= 0")
    w = v_diff + v_sum
    return w, bool(w < 2.0)


@dataclass(frozen=True)
class SchmidtDistribution:
    probabilities: np.ndarray
    lam: float
    k: int

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1


def _log_pn(lam, k, n):
    """log p_n^(k) = (k+1) log(1-lam^2) + 2n log lam + log C(n+k, n)."""
    log_binom = gammaln(n + k + 1) - gammaln(n + 1) - gammaln(k + 1)
    with np.errstate(divide="ignore"):
        return (k + 1) * math.log1p(-lam**2) + 2 * n * math.log(lam) + log_binom


def schmidt_distribution(lam, k, n_max=None) -> SchmidtDistribution:
    """Schmidt coefficients p_n^(k) of the k-photon-added TMSV.

    The truncation n_max is chosen automatically so the discarded tail mass
    stays below 1e-12; binomials are evaluated through log-gamma so large
    n + k do not overflow.
    """
    if not 0 <= lam < 1:
        raise ValueError("need lambda in [0, 1)")
    if k < 0:
        raise ValueError("need k >= 0")
    if lam == 0:
        probs = np.zeros((n_max or 0) + 1)
        probs[0] = 1.0
        return SchmidtDistribution(probabilities=probs, lam=lam, k=k)
    if n_max is None:
        # geometric tail bound: beyond the mode of the distribution, terms
        # shrink at least by lam^2 (1 + k/n); grow until the bound bites
        n_max = 64
        while True:
            n = np.arange(n_max + 1)
            probs = np.exp(_log_pn(lam, k, n))
            tail = probs[-1] * lam**2 / max(1e-300, 1 - lam**2 * (1 + k / n_max))
            if 1 - lam**2 * (1 + k / n_max) > 0 and tail < TAIL_MASS:
                break
            n_max *= 2
            if n_max > 2**22:
                raise RuntimeError("truncation did not converge")
    else:
        n = np.arange(n_max + 1)
        probs = np.exp(_log_pn(lam, k, n))
        ratio = lam**2 * (1 + k / n_max)
        if ratio >= 1 or probs[-1] * ratio / (1 - ratio) > TAIL_MASS:
            raise ValueError(f"n_max = {n_max} leaves tail mass above {TAIL_MASS}")
    return SchmidtDistribution(probabilities=probs, lam=lam, k=k)


def entanglement_entropy(dist: SchmidtDistribution) -> float:
    """E = -sum p_n log p_n in nats."""
    p = dist.probabilities
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def tmsv_entropy(lam) -> float:
    """Closed-form entropy of the plain two-mode squeezed vacuum (k = 0).

    E = -log(1 - lam^2) - (2 lam^2 / (1 - lam^2)) log(lam); the geometric
    Schmidt distribution p_n = (1 - lam^2) lam^{2n} gives this directly via
    <n> = lam^2 / (1 - lam^2).
    """
    if lam == 0:
        return 0.0
    return -math.log1p(-lam**2) - (2 * lam**2 / (1 - lam**2)) * math.log(lam)


def added_subtracted(lam, k, n_max=None) -> dict:
    """Distribution and entanglement entropy after k additions/subtractions."""
    dist = schmidt_distribution(lam, k, n_max)
    return {"dist": dist, "entropy": entanglement_entropy(dist)}


def pascal_residual(lam, k, n_max=256):
    """Max violation of p_n^(k+1) = lam^2 p_{n-1}^(k+1) + (1-lam^2) p_n^(k)."""
    n = np.arange(n_max + 1)
    pk = np.exp(_log_pn(lam, k, n))
    pk1 = np.exp(_log_pn(lam, k + 1, n))
    lhs = pk1[1:]
    rhs = lam**2 * pk1[:-1] + (1 - lam**2) * pk[1:]
    return float(np.max(np.abs(lhs - rhs)))
