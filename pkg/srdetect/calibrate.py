"""Numeric calibration of thresholds and equalizer head starts.

Works for any registered model through the Nyström and quasi-stationary
solvers; ``exact_exp`` holds the E(1,2) closed forms these are checked
against.
"""

import logging
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from srdetect.core.errors import CalibrationError
from srdetect.fredholm import (
    GridSpec,
    OperatingCharacteristics,
    add_at_change_zero,
    arl_false_alarm,
    operating_characteristics,
    resolve_grid,
)
from srdetect.models import ChangeModel
from srdetect.quasi_stationary import QuasiStationary, solve_qsd

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_THRESHOLD = 1e6
SCAN_POINTS = 64
MONOTONE_CHECKS = 8
# smallest admissible threshold, relative to the head start
_THRESHOLD_FLOOR = 1e-9


class SRPCharacteristics(NamedTuple):
    arl: float
    add: float


class Equalizer(NamedTuple):
    head_start: float
    spread: float


class EqualizedCalibration(NamedTuple):
    threshold: float
    head_start: float
    arl: float
    spread: float


def srp_characteristics(model: ChangeModel, B: float,
                        grid_spec: GridSpec | None = None,
                        qsd: QuasiStationary | None = None) -> SRPCharacteristics:
    """E_∞ T_srp = ∫φ q_B and E_0 T_srp = ∫δ_0 q_B on one shared grid."""
    if qsd is None:
        grid = resolve_grid(B, grid_spec)
        qsd = solve_qsd(model, B, grid)
    grid = qsd.grid
    phi = arl_false_alarm(model, B, grid)
    delta0 = add_at_change_zero(model, B, grid)
    return SRPCharacteristics(qsd.average(phi), qsd.average(delta0))


def _check_monotone(arl: Callable[[float], float], lo: float, hi: float) -> None:
    points = np.linspace(lo, hi, MONOTONE_CHECKS)
    values = np.array([arl(float(a)) for a in points])
    if np.any(np.diff(values) < -1e-10 * np.max(np.abs(values))):
        pairs = ", ".join(f"{a:.6g}:{v:.6g}" for a, v in zip(points, values))
        raise CalibrationError(f"ARL is not increasing in the threshold on [{lo}, {hi}]: {pairs}")


def _invert_arl(arl: Callable[[float], float], gamma: float, lo: float,
                tol: float, max_threshold: float, label: str) -> float:
    """Threshold in (lo, max_threshold] with arl(threshold) = γ."""
    if arl(lo) >= gamma:
        raise CalibrationError(
            f"{label}: ARL at the smallest threshold {lo:.3g} already exceeds γ={gamma}"
        )
    hi = max(1.0, 2.0 * lo)
    while arl(hi) < gamma:
        if hi >= max_threshold:
            raise CalibrationError(
                f"{label}: γ={gamma} unattainable below threshold cap {max_threshold:g}"
            )
        hi = min(2.0 * hi, max_threshold)
    _check_monotone(arl, lo, hi)
    threshold = brentq(lambda a: arl(a) - gamma, lo, hi, xtol=tol, rtol=1e-14)
    logger.info("%s calibrated to γ=%s: threshold %s", label, gamma, threshold)
    return threshold


def calibrate_threshold(model: ChangeModel, procedure: str, gamma: float,
                        grid_spec: GridSpec | None = None, tol: float = DEFAULT_TOL,
                        head_start: float = 0.0,
                        max_threshold: float = DEFAULT_MAX_THRESHOLD) -> float:
    """Threshold giving ARL γ for SR (``"sr"``), SR-r (``"sr-r"``) or SRP (``"srp"``).

    Raises:
        CalibrationError: γ unattainable, or ARL not monotone in the threshold.
    """
    if not gamma > 1:
        raise ValueError(f"gamma must exceed 1, got {gamma!r}")
    grid_spec = grid_spec or GridSpec()
    if procedure == "srp":
        def arl(B: float) -> float:
            return srp_characteristics(model, B, grid_spec).arl

        return _invert_arl(arl, gamma, _THRESHOLD_FLOOR, tol, max_threshold, "srp")
    if procedure not in ("sr", "sr-r"):
        raise ValueError(f"unknown procedure {procedure!r}")
    r = 0.0 if procedure == "sr" else float(head_start)
    if r < 0:
        raise ValueError(f"head start must be nonnegative, got {r}")

    def arl(A: float) -> float:
        return arl_false_alarm(model, A, grid_spec)(r)

    lo = r + _THRESHOLD_FLOOR * (1.0 + r)
    return _invert_arl(arl, gamma, lo, tol, max_threshold, f"{procedure}(r={r:g})")


def spread(oc: OperatingCharacteristics, r: float) -> float:
    """max_ν CADD_ν(r) − min_ν CADD_ν(r) over the truncated ν range."""
    return float(np.ptp(oc.cadd_profile(r)))


def _count_local_minima(values: np.ndarray) -> int:
    d = np.sign(np.diff(values))
    d = d[d != 0]
    return int(np.sum((d[:-1] < 0) & (d[1:] > 0)))


def equalizer_search(model: ChangeModel, A: float, grid_spec: GridSpec | None = None,
                     tol: float = DEFAULT_TOL, nu_max: int | None = None,
                     oc: OperatingCharacteristics | None = None) -> Equalizer:
    """Head start in [0, A) minimising the CADD spread, and the spread reached."""
    if oc is None:
        oc = operating_characteristics(model, A, grid_spec, nu_max)

    def f(r: float) -> float:
        return spread(oc, r)

    rs = A * np.arange(SCAN_POINTS) / SCAN_POINTS
    scan = np.array([f(float(r)) for r in rs])
    if _count_local_minima(scan) > 1:
        logger.warning("CADD spread is not unimodal in r at A=%s; searching near the best scan point", A)
    k = int(np.argmin(scan))
    lo = rs[max(k - 1, 0)]
    hi = rs[k + 1] if k + 1 < SCAN_POINTS else A * (1.0 - 1e-12)

    result = None
    if 0 < k < SCAN_POINTS - 1:
        try:
            result = minimize_scalar(f, bracket=(lo, rs[k], hi), method="golden",
                                     options={"xtol": tol})
            if not lo <= result.x <= hi:
                result = None
        except ValueError:
            result = None
    if result is None:
        result = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                 options={"xatol": tol})
    r_best, s_best = float(result.x), float(result.fun)
    if scan[k] < s_best:
        r_best, s_best = float(rs[k]), float(scan[k])
    logger.debug("equalizer at A=%s: r=%s, spread %.3e", A, r_best, s_best)
    return Equalizer(r_best, s_best)


def find_equalizer_headstart(model: ChangeModel, A: float,
                             grid_spec: GridSpec | None = None,
                             tol: float = DEFAULT_TOL, nu_max: int | None = None) -> float:
    return equalizer_search(model, A, grid_spec, tol, nu_max).head_start


def calibrate_equalized(model: ChangeModel, gamma: float,
                        grid_spec: GridSpec | None = None, tol: float = DEFAULT_TOL,
                        nu_max: int | None = None,
                        max_threshold: float = DEFAULT_MAX_THRESHOLD) -> EqualizedCalibration:
    """Threshold A and head start r(A) with SR-r an (approximate) equalizer at ARL γ."""
    if not gamma > 1:
        raise ValueError(f"gamma must exceed 1, got {gamma!r}")
    grid_spec = grid_spec or GridSpec()
    cache: dict[float, tuple[OperatingCharacteristics, Equalizer]] = {}

    def solve(A: float) -> tuple[OperatingCharacteristics, Equalizer]:
        if A not in cache:
            oc = operating_characteristics(model, A, grid_spec, nu_max)
            cache[A] = oc, equalizer_search(model, A, grid_spec, tol, nu_max, oc)
        return cache[A]

    def arl(A: float) -> float:
        oc, eq = solve(A)
        return oc.phi(eq.head_start)

    A = _invert_arl(arl, gamma, _THRESHOLD_FLOOR, tol, max_threshold, "sr-r equalized")
    oc, eq = solve(A)
    return EqualizedCalibration(A, eq.head_start, oc.phi(eq.head_start), eq.spread)
