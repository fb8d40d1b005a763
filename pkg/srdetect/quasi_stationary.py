"""Quasi-stationary distribution of the SR statistic below a threshold B.

Q_B is the limit law of R_n given no alarm by n. Its density q_B is the
left eigenfunction of the pre-change transition kernel,

    λ_B q_B(x) = ∫_0^B q_B(r) K_∞(x, r) dr,    ∫_0^B q_B = 1,

with λ_B the leading eigenvalue. Note the orientation: the integral runs
over the *starting* point r, so the discrete operator is
L[j, i] = w_i K_∞(x_j, x_i), the transpose (up to a diagonal similarity)
of the matrix the Fredholm equations use. Both share their spectrum.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from srdetect.core.errors import ConvergenceError, DensityError, SolverError
from srdetect.fredholm import (
    GridFunction,
    GridSpec,
    OperatingCharacteristics,
    QuadratureGrid,
    resolve_grid,
)
from srdetect.models import ChangeModel, ExponentialModel, Hypothesis, kernel_pre

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


def _left_operator(model: ChangeModel, grid: QuadratureGrid) -> np.ndarray:
    x = grid.nodes
    return np.asarray(kernel_pre(model, x[:, None], x[None, :]), dtype=float) * grid.weights


def is_experimental(model: ChangeModel, B: float) -> bool:
    """True where no closed form backs the numbers (E(1,2) with B ≥ 2)."""
    return isinstance(model, ExponentialModel) and model.theta == 2.0 and B >= 2.0


@dataclass(frozen=True, eq=False)
class QuasiStationary:
    threshold: float
    lam: float
    density: GridFunction
    cdf: GridFunction
    iterations: int = 0
    residual: float = 0.0
    experimental: bool = False
    # CDF tabulated on [0, nodes..., B] for inversion
    _x: np.ndarray = field(default=None, repr=False)
    _q: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise SolverError(f"leading eigenvalue {self.lam!r} outside (0, 1)")

    @property
    def grid(self) -> QuadratureGrid:
        return self.density.grid

    def density_at(self, x):
        return self.density(x)

    def cdf_at(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.interp(x_arr, self._x, self._q, left=0.0, right=1.0)
        return float(out) if x_arr.ndim == 0 else out

    def quantile(self, u):
        x = np.interp(u, self._q, self._x)
        return np.minimum(x, np.nextafter(self.threshold, 0.0))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        u = rng.random(size)
        x = self.quantile(u)
        return float(x) if size is None else x

    def average(self, values: GridFunction) -> float:
        """∫_0^B values(r) q_B(r) dr on the quadrature grid."""
        return self.grid.integrate(values(self.grid.nodes) * self.density.values)


def solve_qsd(model: ChangeModel, B: float,
              grid: QuadratureGrid | GridSpec | None = None,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> QuasiStationary:
    """Power iteration for (λ_B, q_B), started from the uniform density.

    Raises:
        ConvergenceError: residual still above ``tol`` after ``max_iter``.
        DensityError: the converged density dips below −tol.
    """
    if not B > 0:
        raise ValueError(f"threshold B must be positive, got {B!r}")
    grid = resolve_grid(B, grid)
    L = _left_operator(model, grid)
    w = grid.weights

    q = np.full(grid.size, 1.0 / B)
    lam = residual = np.nan
    for it in range(1, max_iter + 1):
        v = L @ q
        lam = float(w @ v)
        if not lam > 0:
            raise SolverError(f"power iteration collapsed (λ={lam!r}) below B={B}")
        residual = float(np.max(np.abs(v - lam * q)))
        q_next = v / lam
        if residual <= tol * max(1.0, lam * np.max(np.abs(q))):
            q = q_next
            break
        q = q_next
    else:
        raise ConvergenceError(
            f"quasi-stationary power iteration did not converge for B={B}",
            residual=residual, iterations=max_iter,
        )
    logger.debug("QSD at B=%s: λ=%s after %d iterations (residual %.3e)",
                 B, lam, it, residual)

    if np.min(q) < -tol:
        raise DensityError(f"quasi-stationary density negative ({np.min(q):.3e}) at B={B}")
    q = np.maximum(q, 0.0)
    q = q / (w @ q)

    qn = q.copy()

    def interpolant(x):
        k = np.asarray(kernel_pre(model, np.asarray(x)[:, None], grid.nodes[None, :]),
                       dtype=float)
        return (k @ (w * qn)) / lam

    density = GridFunction(grid, q, interpolant)
    x_ext = np.concatenate([[0.0], grid.nodes, [B]])
    q_ext = np.concatenate([[density(0.0)], q, [density(np.nextafter(B, 0.0))]])
    cum = cumulative_trapezoid(q_ext, x_ext, initial=0.0)
    cum = cum / cum[-1]
    cdf = GridFunction(grid, cum[1:-1], lambda x: np.interp(x, x_ext, cum))

    experimental = is_experimental(model, B)
    if experimental:
        logger.warning("B=%s >= 2 for E(1,2): quasi-stationary output is experimental", B)
    return QuasiStationary(float(B), lam, density, cdf, it, residual,
                           experimental, x_ext, cum)


def dominant_eigenvalue(model: ChangeModel, B: float,
                        grid: QuadratureGrid | GridSpec | None = None) -> float:
    """Perron root of the discretised operator by a dense eigen-solve."""
    grid = resolve_grid(B, grid)
    eig = la.eigvals(_left_operator(model, grid))
    return float(np.max(eig.real))


def sample_qsd(qsd: QuasiStationary, rng: np.random.Generator) -> float:
    """One inverse-CDF draw from Q_B, always below B."""
    return qsd.sample(rng)


def qsd_convergence_check(model: ChangeModel, B: float, n_steps: int = 1,
                          r: float = 0.0, samples: int = 100_000,
                          rng: np.random.Generator | None = None,
                          qsd: QuasiStationary | None = None,
                          batch: int = 65_536) -> float:
    """KS distance between R_{n_steps} given T > n_steps (started at r) and Q_B.

    Paths that alarm within ``n_steps`` are discarded and redrawn until
    ``samples`` survivors are collected.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if not 0 <= r < B:
        raise ValueError(f"start {r} must lie in [0, {B})")
    if rng is None:
        rng = np.random.default_rng(0)
    if qsd is None:
        qsd = solve_qsd(model, B)

    kept = []
    n_kept = 0
    while n_kept < samples:
        stat = np.full(batch, float(r))
        alive = np.ones(batch, dtype=bool)
        for _ in range(n_steps):
            x = model.sample(Hypothesis.PRE, rng, batch)
            with np.errstate(over="ignore"):
                stat = (1.0 + stat) * model.lr(x)
            alive &= stat < B
        kept.append(stat[alive])
        n_kept += int(alive.sum())
    draws = np.concatenate(kept)[:samples]
    return float(stats.kstest(draws, qsd.cdf_at).statistic)


def srp_cadd_profile(oc: OperatingCharacteristics, qsd: QuasiStationary) -> np.ndarray:
    """CADD_ν of the SRP procedure, ∫δ_ν q_B / ∫ρ_ν q_B, for ν = 0..oc.nu_max."""
    if not np.isclose(oc.threshold, qsd.threshold, rtol=1e-12, atol=0.0):
        raise ValueError("operating characteristics and QSD are for different thresholds")
    delta = np.array([qsd.average(d) for d in oc.deltas])
    rho = np.array([qsd.average(p) for p in oc.rhos])
    if np.min(rho) < 1e-12:
        raise SolverError("SRP survival probability underflowed; lower nu_max")
    return delta / rho
