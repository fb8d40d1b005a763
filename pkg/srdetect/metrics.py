"""Performance measures: supremum ADD, the integral-ADD lower bound, reports.

For any stopping time with ARL ≥ γ and any r ≥ 0,

    J_P(T) ≥ I_r(T) ≥ I_r(SR-r at the same ARL),
    I_r(T) = (r E_0 T + Σ_ν E_ν(T − ν)^+) / (r + E_∞ T),

so an SR-r procedure that is also an equalizer attains the bound and is
minimax. ``compare_at_gamma`` puts the SRP procedure next to that SR-r
procedure at a common ARL.
"""

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from srdetect import exact_exp
from srdetect.calibrate import calibrate_equalized, calibrate_threshold, srp_characteristics
from srdetect.fredholm import GridSpec, OperatingCharacteristics, operating_characteristics, resolve_grid
from srdetect.models import ChangeModel, ExponentialModel
from srdetect.quasi_stationary import solve_qsd, srp_cadd_profile

# ν range reported for procedures whose CADD is constant in closed form
ANALYTIC_NU_MAX = 20


class Provenance(str, Enum):
    ANALYTIC = "analytic"
    NYSTROM = "nystrom"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class PerformanceReport:
    procedure: str
    threshold: float
    arl: float
    cadd_by_nu: tuple[float, ...]
    jp: float
    ir_lower_bound: float | None
    provenance: Provenance
    head_start: float | None = None

    def __post_init__(self):
        if not self.cadd_by_nu:
            raise ValueError("cadd_by_nu must not be empty")
        if self.jp != max(self.cadd_by_nu):
            raise ValueError("jp must be the maximum of cadd_by_nu")

    @property
    def argmax_nu(self) -> int:
        return int(np.argmax(self.cadd_by_nu))

    def with_bound(self, bound: float) -> "PerformanceReport":
        return dataclasses.replace(self, ir_lower_bound=float(bound))

    def to_dict(self) -> dict:
        return {
            "procedure": self.procedure,
            "threshold": self.threshold,
            "head_start": self.head_start,
            "arl": self.arl,
            "jp": self.jp,
            "argmax_nu": self.argmax_nu,
            "ir_lower_bound": self.ir_lower_bound,
            "provenance": self.provenance.value,
            "cadd_by_nu": list(self.cadd_by_nu),
        }


def sup_add(cadd_by_nu: Sequence[float]) -> float:
    """J_P over the truncated ν range."""
    values = np.asarray(cadd_by_nu, dtype=float)
    if values.size == 0:
        raise ValueError("sup_add needs at least one CADD value")
    return float(np.max(values))


def integral_add_lower_bound(r: float, delta0_r: float, psi_r: float, phi_r: float) -> float:
    """I_r of SR-r started at r: (r δ_0(r) + ψ(r)) / (r + φ(r))."""
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r!r}")
    return (r * delta0_r + psi_r) / (r + phi_r)


def lower_bound_holds(jp: float, bound: float, std_error: float = 0.0,
                      k: float = 3.0, tol: float = 0.0) -> bool:
    """J_P ≥ bound up to ``k`` standard errors plus ``tol``."""
    return jp >= bound - k * std_error - tol


def report_sr_r(model: ChangeModel, A: float, r: float,
                grid_spec: GridSpec | None = None, nu_max: int | None = None,
                oc: OperatingCharacteristics | None = None) -> PerformanceReport:
    if oc is None:
        oc = operating_characteristics(model, A, grid_spec, nu_max)
    if not 0 <= r < A:
        raise ValueError(f"head start must satisfy 0 <= r < A, got r={r}, A={A}")
    profile = tuple(float(c) for c in oc.cadd_profile(r))
    bound = integral_add_lower_bound(r, oc.delta0(r), oc.psi(r), oc.phi(r))
    return PerformanceReport(
        procedure=f"sr-r(r={r:.12g},A={A:.12g})", threshold=float(A),
        arl=oc.phi(r), cadd_by_nu=profile, jp=max(profile),
        ir_lower_bound=bound, provenance=Provenance.NYSTROM, head_start=float(r),
    )


def report_srp(model: ChangeModel, B: float, grid_spec: GridSpec | None = None,
               nu_max: int | None = None) -> PerformanceReport:
    grid = resolve_grid(B, grid_spec)
    qsd = solve_qsd(model, B, grid)
    oc = operating_characteristics(model, B, grid, nu_max)
    profile = tuple(float(c) for c in srp_cadd_profile(oc, qsd))
    chars = srp_characteristics(model, B, qsd=qsd)
    return PerformanceReport(
        procedure=f"srp(B={B:.12g})", threshold=float(B), arl=chars.arl,
        cadd_by_nu=profile, jp=max(profile), ir_lower_bound=None,
        provenance=Provenance.NYSTROM,
    )


def _analytic_srp(gamma: float) -> PerformanceReport:
    B = exact_exp.srp_threshold(gamma)
    profile = (exact_exp.srp_add_exact(B),) * (ANALYTIC_NU_MAX + 1)
    return PerformanceReport(
        procedure=f"srp(B={B:.12g})", threshold=B, arl=exact_exp.srp_arl_exact(B),
        cadd_by_nu=profile, jp=max(profile), ir_lower_bound=None,
        provenance=Provenance.ANALYTIC,
    )


def _analytic_srr(gamma: float) -> PerformanceReport:
    A = exact_exp.srr_threshold(gamma)
    r = exact_exp.equalizer_headstart(A)
    profile = tuple(exact_exp.cadd_exact(nu, r, A) for nu in range(ANALYTIC_NU_MAX + 1))
    bound = integral_add_lower_bound(
        r, exact_exp.delta0_exact(r, A), exact_exp.psi_exact(r, A), exact_exp.phi_exact(r, A),
    )
    return PerformanceReport(
        procedure=f"sr-r(r={r:.12g},A={A:.12g})", threshold=A,
        arl=exact_exp.phi_exact(r, A), cadd_by_nu=profile, jp=max(profile),
        ir_lower_bound=bound, provenance=Provenance.ANALYTIC, head_start=r,
    )


class Comparison(NamedTuple):
    srp: PerformanceReport
    srr: PerformanceReport

    @property
    def gap(self) -> float:
        return self.srp.jp - self.srr.jp


def _is_exact_model(model: ChangeModel) -> bool:
    return isinstance(model, ExponentialModel) and math.isclose(model.theta, exact_exp.THETA)


def compare_at_gamma(model: ChangeModel, gamma: float, route: str = "analytic",
                     grid_spec: GridSpec | None = None,
                     nu_max: int | None = None) -> Comparison:
    """SRP and the equalized SR-r procedure, both calibrated to ARL γ.

    Both reports carry the integral-ADD bound of the SR-r procedure.
    """
    if route == "analytic":
        if not _is_exact_model(model):
            raise ValueError("the analytic route needs the exponential model with theta=2")
        srp, srr = _analytic_srp(gamma), _analytic_srr(gamma)
    elif route == "numeric":
        B = calibrate_threshold(model, "srp", gamma, grid_spec)
        srp = report_srp(model, B, grid_spec, nu_max)
        eq = calibrate_equalized(model, gamma, grid_spec, nu_max=nu_max)
        srr = report_sr_r(model, eq.threshold, eq.head_start, grid_spec, nu_max)
    else:
        raise ValueError(f"unknown route {route!r} (analytic, numeric)")
    return Comparison(srp.with_bound(srr.ir_lower_bound), srr)
