"""Nyström solution of the integral equations of the SR-r procedure.

Every operating characteristic of the SR-r procedure with threshold A is a
function of the head start r that solves a Fredholm equation of the second
kind on [0, A] (or is an iterate of the same operator):

    φ(r)   = 1     + ∫ φ(x)       K_∞(x, r) dx      ARL to false alarm
    δ_0(r) = 1     + ∫ δ_0(x)     K_0(x, r) dx      E_0 T
    δ_ν(r) =         ∫ δ_{ν-1}(x) K_∞(x, r) dx      E_ν (T-ν)^+, ν ≥ 1
    ρ_ν(r) =         ∫ ρ_{ν-1}(x) K_∞(x, r) dx      P_∞(T > ν),  ρ_0 = 1
    ψ(r)   = δ_0(r) + ∫ ψ(x)      K_∞(x, r) dx      Σ_ν E_ν (T-ν)^+

With nodes x_i and weights w_i the discrete operator is the matrix
M[j, i] = w_i K(x_i, x_j), i.e. row j integrates against the transition
density out of r = x_j. Solutions are evaluated off the grid with the
natural Nyström interpolant u(r) = g(r) + Σ_i w_i K(x_i, r) u(x_i), which
is exact wherever the quadrature is.
"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la
from scipy.special import roots_legendre

from srdetect.core.errors import SolverError
from srdetect.models import ChangeModel, kernel_post, kernel_pre

logger = logging.getLogger(__name__)

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]

MIN_NODES = 8
DEFAULT_NODES = 256
MAX_CONDITION = 1e12
RESIDUAL_TOL = 1e-12
DEGENERATE_SURVIVAL = 1e-12

# Truncation of sup over ν: stop once CADD moved less than CADD_TOL for
# CADD_PATIENCE consecutive ν, never beyond NU_CAP.
CADD_TOL = 1e-10
CADD_PATIENCE = 5
NU_CAP = 10_000


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    upper: float
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str

    def __post_init__(self):
        if len(self.nodes) < MIN_NODES:
            raise ValueError(f"quadrature grid needs at least {MIN_NODES} nodes")
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes and weights differ in length")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - self.upper) > 1e-12 * max(1.0, self.upper):
            raise ValueError("quadrature weights must sum to the interval length")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


def make_grid(upper: float, nodes: int = DEFAULT_NODES,
              scheme: str = "gauss_legendre") -> QuadratureGrid:
    """Quadrature rule on [0, upper]."""
    if not upper > 0:
        raise ValueError(f"grid upper bound must be positive, got {upper!r}")
    if scheme == "gauss_legendre":
        t, w = roots_legendre(nodes)
        x = 0.5 * upper * (t + 1.0)
        w = 0.5 * upper * w
    elif scheme == "trapezoid":
        x = np.linspace(0.0, upper, nodes)
        w = np.full(nodes, upper / (nodes - 1))
        w[0] = w[-1] = 0.5 * w[1]
    else:
        raise ValueError(f"unknown quadrature scheme {scheme!r}")
    return QuadratureGrid(float(upper), x, w, scheme)


@dataclass(frozen=True)
class GridSpec:
    """How to discretise [0, upper] once the upper bound is known."""

    nodes: int = DEFAULT_NODES
    scheme: str = "gauss_legendre"

    def grid(self, upper: float) -> QuadratureGrid:
        return make_grid(upper, self.nodes, self.scheme)


def resolve_grid(upper: float, grid: "QuadratureGrid | GridSpec | None") -> QuadratureGrid:
    if grid is None:
        grid = GridSpec()
    if isinstance(grid, GridSpec):
        return grid.grid(upper)
    if not np.isclose(grid.upper, upper, rtol=1e-14, atol=0.0):
        raise ValueError(f"grid covers [0, {grid.upper}] but the threshold is {upper}")
    return grid


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the nodes of a grid plus a rule for evaluating elsewhere.

    Without an interpolant, off-node values are linear interpolation.
    """

    grid: QuadratureGrid
    values: np.ndarray
    interpolant: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("grid function needs exactly one value per node")
        if not np.all(np.isfinite(self.values)):
            raise SolverError("grid function has non-finite values")

    @classmethod
    def constant(cls, grid: QuadratureGrid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.size, float(c)),
                   lambda r: np.full(np.shape(r), float(c)))

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r_arr).ravel()
        if self.interpolant is not None:
            out = np.asarray(self.interpolant(flat), dtype=float).reshape(flat.shape)
        else:
            out = np.interp(flat, self.grid.nodes, self.values)
        # node hits return the stored value
        idx = np.clip(np.searchsorted(self.grid.nodes, flat), 0, self.grid.size - 1)
        hit = self.grid.nodes[idx] == flat
        out = np.where(hit, self.values[idx], out)
        return float(out[0]) if r_arr.ndim == 0 else out.reshape(r_arr.shape)

    def integrate(self, density: "GridFunction | None" = None) -> float:
        if density is None:
            return self.grid.integrate(self.values)
        return self.grid.integrate(self.values * density.values)


class FredholmOperator:
    """Discretised integral operator (I − K) with a cached LU factorisation.

    ``kernel(x, r)`` must broadcast; it is the density of moving from r to x.
    """

    def __init__(self, kernel: Kernel, grid: QuadratureGrid):
        self.kernel = kernel
        self.grid = grid
        x = grid.nodes
        kmat = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
        # M[j, i] = w_i K(x_i, x_j)
        self.matrix = (kmat * grid.weights[:, None]).T
        self.system = np.eye(grid.size) - self.matrix
        self._lu = None

    def _factor(self):
        if self._lu is None:
            if not np.all(np.isfinite(self.system)):
                raise SolverError("kernel produced non-finite values on the grid")
            condition = np.linalg.cond(self.system, 1)
            logger.debug("Nyström system: %d nodes, condition %.3e", self.grid.size, condition)
            if not np.isfinite(condition) or condition > MAX_CONDITION:
                raise SolverError(
                    f"Nyström system is singular or ill-conditioned "
                    f"(condition estimate {condition:.3e} > {MAX_CONDITION:.0e})"
                )
            self._lu = la.lu_factor(self.system)
        return self._lu

    def apply_at(self, values: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Σ_i w_i K(x_i, r) values_i for arbitrary head starts r (1-D)."""
        r = np.asarray(r, dtype=float)
        k = np.asarray(self.kernel(self.grid.nodes[:, None], r[None, :]), dtype=float)
        return (self.grid.weights * values) @ k

    def solve(self, inhomogeneity: GridFunction) -> GridFunction:
        """u = g + K u on the grid, with the natural interpolant attached."""
        g = inhomogeneity.values
        u = la.lu_solve(self._factor(), g)
        residual = np.max(np.abs(self.system @ u - g))
        scale = np.max(np.abs(self.system).sum(axis=1)) * np.max(np.abs(u)) + np.max(np.abs(g))
        if residual > RESIDUAL_TOL * scale:
            raise SolverError(
                f"Nyström residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} relative"
            )
        return GridFunction(
            self.grid, u,
            lambda r: inhomogeneity(r) + self.apply_at(u, r),
        )

    def iterate(self, previous: GridFunction) -> GridFunction:
        """One application of K: v(r) = ∫ previous(x) K(x, r) dx."""
        prev = previous.values
        return GridFunction(
            self.grid, self.matrix @ prev,
            lambda r: self.apply_at(prev, r),
        )


def solve_second_kind(kernel: Kernel, inhomogeneity: GridFunction,
                      grid: QuadratureGrid) -> GridFunction:
    """Solve u(r) = g(r) + ∫_0^upper u(x) K(x, r) dx by Nyström."""
    return FredholmOperator(kernel, grid).solve(inhomogeneity)


def pre_operator(model: ChangeModel, grid: QuadratureGrid) -> FredholmOperator:
    return FredholmOperator(functools.partial(kernel_pre, model), grid)


def post_operator(model: ChangeModel, grid: QuadratureGrid) -> FredholmOperator:
    return FredholmOperator(functools.partial(kernel_post, model), grid)


def arl_false_alarm(model: ChangeModel, A: float,
                    grid: QuadratureGrid | GridSpec | None = None) -> GridFunction:
    """φ(r) = E_∞ T_sr^r(A)."""
    grid = resolve_grid(A, grid)
    return pre_operator(model, grid).solve(GridFunction.constant(grid, 1.0))


def add_at_change_zero(model: ChangeModel, A: float,
                       grid: QuadratureGrid | GridSpec | None = None) -> GridFunction:
    """δ_0(r) = E_0 T_sr^r(A)."""
    grid = resolve_grid(A, grid)
    return post_operator(model, grid).solve(GridFunction.constant(grid, 1.0))


def psi(model: ChangeModel, A: float,
        grid: QuadratureGrid | GridSpec | None = None,
        delta0: GridFunction | None = None) -> GridFunction:
    """ψ(r) = Σ_ν E_ν (T_sr^r − ν)^+, the ψ equation with inhomogeneity δ_0."""
    grid = resolve_grid(A, grid)
    if delta0 is None:
        delta0 = add_at_change_zero(model, A, grid)
    return pre_operator(model, grid).solve(delta0)


def delay_and_survival_sequences(
    model: ChangeModel, A: float, grid: QuadratureGrid | GridSpec | None,
    nu_max: int, delta0: GridFunction | None = None,
) -> tuple[list[GridFunction], list[GridFunction]]:
    """(δ_0..δ_{nu_max}, ρ_0..ρ_{nu_max}) by iterating the P_∞ operator."""
    if nu_max < 0:
        raise ValueError("nu_max must be nonnegative")
    grid = resolve_grid(A, grid)
    if delta0 is None:
        delta0 = add_at_change_zero(model, A, grid)
    op = pre_operator(model, grid)
    deltas = [delta0]
    rhos = [GridFunction.constant(grid, 1.0)]
    for _ in range(nu_max):
        deltas.append(op.iterate(deltas[-1]))
        rhos.append(op.iterate(rhos[-1]))
    return deltas, rhos


def cadd(delta_nu: GridFunction, rho_nu: GridFunction) -> GridFunction:
    """E_ν(T − ν | T > ν) = δ_ν / ρ_ν."""
    if np.min(rho_nu.values) < DEGENERATE_SURVIVAL:
        raise SolverError(
            f"survival probability {np.min(rho_nu.values):.3e} below "
            f"{DEGENERATE_SURVIVAL:.0e}; conditional delay is degenerate"
        )
    return GridFunction(
        delta_nu.grid, delta_nu.values / rho_nu.values,
        lambda r: delta_nu(r) / rho_nu(r),
    )


def _has_settled(profile: list[np.ndarray], tol: float, patience: int) -> bool:
    if len(profile) <= patience:
        return False
    return all(
        np.max(np.abs(profile[-k] - profile[-k - 1])) < tol
        for k in range(1, patience + 1)
    )


@dataclass(frozen=True, eq=False)
class OperatingCharacteristics:
    """All SR-r characteristics for one (model, A, grid), as functions of r."""

    model: ChangeModel
    threshold: float
    grid: QuadratureGrid
    phi: GridFunction
    delta0: GridFunction
    psi: GridFunction
    deltas: tuple[GridFunction, ...]
    rhos: tuple[GridFunction, ...]
    _pre: FredholmOperator = field(repr=False)

    @property
    def nu_max(self) -> int:
        return len(self.deltas) - 1

    def cadd(self, nu: int) -> GridFunction:
        return cadd(self.deltas[nu], self.rhos[nu])

    def _sequences_at(self, r: float) -> tuple[np.ndarray, np.ndarray]:
        """(δ_ν(r), ρ_ν(r)) for ν = 0..nu_max in one matrix product."""
        r_arr = np.array([float(r)])
        k = np.asarray(self._pre.kernel(self.grid.nodes[:, None], r_arr[None, :]),
                       dtype=float)[:, 0]
        wk = self.grid.weights * k
        d_prev = np.array([d.values for d in self.deltas[:-1]])
        p_prev = np.array([p.values for p in self.rhos[:-1]])
        delta = np.concatenate([[self.delta0(r)], d_prev @ wk if len(d_prev) else []])
        rho = np.concatenate([[1.0], p_prev @ wk if len(p_prev) else []])
        return delta, rho

    def cadd_profile(self, r: float) -> np.ndarray:
        """CADD_ν(r) for ν = 0..nu_max."""
        delta, rho = self._sequences_at(r)
        if np.min(rho) < DEGENERATE_SURVIVAL:
            raise SolverError(
                f"P_∞(T > ν) fell below {DEGENERATE_SURVIVAL:.0e} at r={r}; "
                f"lower nu_max"
            )
        return delta / rho

    def at(self, r: float) -> dict:
        """Point characteristics at head start r."""
        return {
            "phi": self.phi(r),
            "delta0": self.delta0(r),
            "psi": self.psi(r),
        }


def operating_characteristics(
    model: ChangeModel, A: float,
    grid: QuadratureGrid | GridSpec | None = None,
    nu_max: int | None = None,
) -> OperatingCharacteristics:
    """Solve for φ, δ_0, ψ and the δ_ν, ρ_ν sequences.

    With ``nu_max=None`` the sequences run until CADD on the grid settles
    (|CADD_ν − CADD_{ν−1}| < 1e-10 for 5 consecutive ν), capped at 10^4.
    """
    grid = resolve_grid(A, grid)
    pre = pre_operator(model, grid)
    phi_fn = pre.solve(GridFunction.constant(grid, 1.0))
    delta0 = post_operator(model, grid).solve(GridFunction.constant(grid, 1.0))
    psi_fn = pre.solve(delta0)

    deltas = [delta0]
    rhos = [GridFunction.constant(grid, 1.0)]
    profile = [delta0.values]
    limit = NU_CAP if nu_max is None else nu_max
    while len(deltas) - 1 < limit:
        deltas.append(pre.iterate(deltas[-1]))
        rhos.append(pre.iterate(rhos[-1]))
        if nu_max is None:
            if np.min(rhos[-1].values) < DEGENERATE_SURVIVAL:
                logger.warning("survival underflow at ν=%d; truncating", len(rhos) - 1)
                deltas.pop()
                rhos.pop()
                break
            profile.append(deltas[-1].values / rhos[-1].values)
            if _has_settled(profile, CADD_TOL, CADD_PATIENCE):
                break
    logger.debug("operating characteristics at A=%s: nu_max=%d", A, len(deltas) - 1)
    return OperatingCharacteristics(
        model, float(A), grid, phi_fn, delta0, psi_fn,
        tuple(deltas), tuple(rhos), pre,
    )
