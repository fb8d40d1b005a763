"""Closed-form characteristics of SR-r and SRP in the E(1, 2) model.

For θ = 2 and thresholds below 2 the pre-change kernel is 1/(2(1+r)) on
the whole square [0, A)^2, which collapses every integral equation to a
one-line formula. Writing

    D(A) = A/(1+A) + 2(1 − ½ log(1+A)),    λ_A = ½ log(1+A),

the SR-r procedure with threshold A and head start r has

    φ(r)   = 1 + A/(2(1+r)) / (1 − λ_A)
    δ_0(r) = 1 + A²/(2(1+r)²) / D(A)
    ρ_ν(r) = A/(2(1+r)) λ_A^{ν−1},   ν ≥ 1
    δ_ν(r) = δ̄_0(A) ρ_ν(r),          δ̄_0(A) = 1 + A²/(2(1+A)) / D(A)

so CADD_ν = δ̄_0(A) for every ν ≥ 1 and every head start. The SRP
procedure's quasi-stationary density is uniform on [0, B) with λ_B as
above; its stopping time is geometric under P_∞.

Thresholds live in the open interval (0, 2); A = 2 is rejected.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from srdetect.core.errors import CalibrationError

THETA = 2.0
MAX_THRESHOLD = 2.0
GAMMA0 = 1.0 / (1.0 - 0.5 * math.log(3.0))


@dataclass(frozen=True)
class ExactRegime:
    theta: float = THETA
    max_threshold: float = MAX_THRESHOLD
    gamma0: float = GAMMA0

    def admits_threshold(self, A: float) -> bool:
        return 0 < A < self.max_threshold

    def admits_gamma(self, gamma: float) -> bool:
        return 1 < gamma < self.gamma0


REGIME = ExactRegime()

# Reference values at γ = 2, with the tolerance each is published to.
REFERENCE_AT_GAMMA_2 = {
    "B": (1.71828, 1e-5),
    "E0Tsrp": (1.33275, 1e-5),
    "A": (1.66485, 1e-4),
    "rA": (0.63244, 1e-4),
    "JPsrr": (1.31622, 1e-5),
}


def _check_threshold(A: float, name: str = "A") -> None:
    if not REGIME.admits_threshold(A):
        raise ValueError(f"{name} must lie in (0, 2) for the E(1,2) closed forms, got {A!r}")


def _check_pair(r: float, A: float) -> None:
    _check_threshold(A)
    if not 0 <= r < A:
        raise ValueError(f"head start r must satisfy 0 <= r < A, got r={r!r}, A={A!r}")


def _check_gamma(gamma: float) -> None:
    if not REGIME.admits_gamma(gamma):
        raise ValueError(
            f"gamma must lie in (1, {GAMMA0:.6f}) for the E(1,2) closed forms, got {gamma!r}"
        )


def _lam(A: float) -> float:
    return 0.5 * math.log1p(A)


def _denominator(A: float) -> float:
    return A / (1.0 + A) + 2.0 - math.log1p(A)


def delta0_exact(r: float, A: float) -> float:
    """E_0 T of SR-r(A) started at r."""
    _check_pair(r, A)
    return 1.0 + A * A / (2.0 * (1.0 + r) ** 2) / _denominator(A)


def delta_bar_exact(A: float) -> float:
    """δ̄_0(A): the common CADD_ν, ν ≥ 1, of SR-r(A) for any head start."""
    _check_threshold(A)
    return 1.0 + A * A / (2.0 * (1.0 + A)) / _denominator(A)


def phi_exact(r: float, A: float) -> float:
    """E_∞ T of SR-r(A) started at r."""
    _check_pair(r, A)
    return 1.0 + A / (2.0 * (1.0 + r)) / (1.0 - _lam(A))


def rho_exact(nu: int, r: float, A: float) -> float:
    """P_∞(T > ν) of SR-r(A) started at r."""
    _check_pair(r, A)
    if nu < 0:
        raise ValueError(f"nu must be nonnegative, got {nu}")
    if nu == 0:
        return 1.0
    return A / (2.0 * (1.0 + r)) * _lam(A) ** (nu - 1)


def cadd_exact(nu: int, r: float, A: float) -> float:
    """E_ν(T − ν | T > ν) of SR-r(A) started at r."""
    if nu == 0:
        return delta0_exact(r, A)
    _check_pair(r, A)
    return delta_bar_exact(A)


def psi_exact(r: float, A: float) -> float:
    """Σ_ν E_ν(T − ν)^+ = δ_0(r) + δ̄_0(A)(φ(r) − 1)."""
    return delta0_exact(r, A) + delta_bar_exact(A) * (phi_exact(r, A) - 1.0)


def qsd_lambda_exact(B: float) -> float:
    _check_threshold(B, "B")
    return _lam(B)


def srp_arl_exact(B: float) -> float:
    _check_threshold(B, "B")
    return 1.0 / (1.0 - _lam(B))


def srp_add_exact(B: float) -> float:
    """E_0 T_srp(B) = δ̄_0(B); the SRP procedure is an equalizer."""
    _check_threshold(B, "B")
    return delta_bar_exact(B)


def srp_threshold(gamma: float) -> float:
    _check_gamma(gamma)
    return math.expm1(2.0 * (gamma - 1.0) / gamma)


def equalizer_headstart(A: float) -> float:
    """r_A = √(1+A) − 1, the head start making SR-r(A) an equalizer."""
    if not 0 <= A < MAX_THRESHOLD:
        raise ValueError(f"A must lie in [0, 2), got {A!r}")
    return A / (math.sqrt(1.0 + A) + 1.0)


def _srr_equation(A: float, gamma: float) -> float:
    s = math.sqrt(1.0 + A)
    return A + (gamma - 1.0) * s * math.log1p(A) - 2.0 * (gamma - 1.0) * s


def srr_threshold(gamma: float) -> float:
    """Threshold A at which SR-r(A) started at r_A has ARL γ.

    Raises:
        CalibrationError: no sign change of the calibration equation on (0, 2).
    """
    _check_gamma(gamma)
    lo, hi = 0.0, MAX_THRESHOLD
    f_lo, f_hi = _srr_equation(lo, gamma), _srr_equation(hi, gamma)
    if not f_lo < 0 < f_hi:
        raise CalibrationError(f"no sign change of the SR-r threshold equation at γ={gamma}")
    return brentq(_srr_equation, lo, hi, args=(gamma,), xtol=1e-15, rtol=4 * np.finfo(float).eps)


def sup_add_exact(r: float, A: float) -> float:
    """J_P of SR-r(A) started at r: max(δ̄_0(A), δ_0(r))."""
    return max(delta_bar_exact(A), delta0_exact(r, A))


def bound_inequality_margin(A):
    """A/√(1+A) − log(1+A); strictly positive on (0, 2)."""
    A = np.asarray(A, dtype=float)
    out = A / np.sqrt(1.0 + A) - np.log1p(A)
    return out if out.ndim else float(out)


class Gap(NamedTuple):
    jp_srp: float
    jp_srr: float

    @property
    def gap(self) -> float:
        return self.jp_srp - self.jp_srr


def suboptimality_gap(gamma: float) -> Gap:
    """J_P of SRP and of the equalized SR-r, both calibrated to ARL γ."""
    B = srp_threshold(gamma)
    A = srr_threshold(gamma)
    return Gap(srp_add_exact(B), sup_add_exact(equalizer_headstart(A), A))


class Theorem2Row(NamedTuple):
    gamma: float
    B: float
    E0Tsrp: float
    A: float
    rA: float
    JPsrr: float
    gap: float


def theorem2_row(gamma: float) -> Theorem2Row:
    B = srp_threshold(gamma)
    A = srr_threshold(gamma)
    r = equalizer_headstart(A)
    jp_srp = srp_add_exact(B)
    jp_srr = sup_add_exact(r, A)
    return Theorem2Row(gamma, B, jp_srp, A, r, jp_srr, jp_srp - jp_srr)


def reference_deviations(row: Theorem2Row) -> dict[str, float]:
    """Fields of ``row`` that miss their published γ = 2 value, with the miss."""
    misses = {}
    for key, (expected, tol) in REFERENCE_AT_GAMMA_2.items():
        dev = abs(getattr(row, key) - expected)
        if dev > tol:
            misses[key] = dev
    return misses


class Figure1Row(NamedTuple):
    arl: float
    jp_srr: float
    jp_srp: float


def figure1_rows(points: int, margin: float = 0.02) -> list[Figure1Row]:
    """J_P of both procedures at matched ARL γ across (1, γ_0).

    The γ grid stays ``margin``·(γ_0 − 1) away from both ends, where the
    thresholds degenerate to 0 and 2.
    """
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points}")
    span = GAMMA0 - 1.0
    gammas = np.linspace(1.0 + margin * span, GAMMA0 - margin * span, points)
    rows = []
    for g in gammas:
        gap = suboptimality_gap(float(g))
        rows.append(Figure1Row(float(g), gap.jp_srr, gap.jp_srp))
    return rows
