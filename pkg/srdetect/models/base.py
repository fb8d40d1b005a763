"""Observation models and the integral kernels every solver consumes.

A model fixes the pre-change density f_∞, the post-change density f_0 and
hence the likelihood ratio Λ(x) = f_0(x)/f_∞(x). The detection statistic
only ever sees Λ, so what the solvers need are the distribution functions
of Λ_1 under each hypothesis,

    F_∞(y) = P_∞(Λ_1 ≤ y),    F_0(y) = P_0(Λ_1 ≤ y),

and the transition densities of R_n = (1 + R_{n-1}) Λ_n they induce:

    K(x, r) = ∂/∂x F(x / (1 + r)).

Models that know the density of Λ in closed form expose it (``lr_pdf``);
the kernel then is exact. Otherwise the kernel is a central difference of
the CDF in x with step 1e-6·(1+|x|), made one-sided where the stencil
would cross 0 or the upper edge of the support of Λ.
"""

import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import ClassVar

import numpy as np
from scipy import integrate

_DIFF_STEP = 1e-6
_NORMALIZATION_TOL = 1e-8
_ATOM_TOL = 1e-6
_ATOM_CHECKS = 1024


class Hypothesis(str, Enum):
    PRE = "pre"
    POST = "post"


class ChangeModel(ABC):
    """Immutable i.i.d. pre/post-change model.

    Subclasses call ``_check_model()`` at the end of ``__init__``; a model
    whose densities do not integrate to one, or whose Λ has atoms, is
    rejected at construction.
    """

    name: ClassVar[str]
    has_lr_pdf: ClassVar[bool] = False

    # -- densities of the observations --------------------------------------

    @abstractmethod
    def pre_density(self, x):
        """f_∞(x)."""

    @abstractmethod
    def post_density(self, x):
        """f_0(x)."""

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]:
        """Support of the observations, for normalisation checks."""

    # -- likelihood ratio ---------------------------------------------------

    @abstractmethod
    def lr(self, x):
        """Λ(x) = f_0(x)/f_∞(x)."""

    @property
    @abstractmethod
    def lr_support_max(self) -> float:
        """Essential supremum of Λ_1 (may be +inf)."""

    @abstractmethod
    def lr_cdf_pre(self, y):
        """F_∞(y) = P_∞(Λ_1 ≤ y)."""

    @abstractmethod
    def lr_cdf_post(self, y):
        """F_0(y) = P_0(Λ_1 ≤ y)."""

    def lr_pdf_pre(self, y):
        raise NotImplementedError(f"{self.name} model has no closed-form density of Λ")

    def lr_pdf_post(self, y):
        raise NotImplementedError(f"{self.name} model has no closed-form density of Λ")

    def lr_cdf(self, hypothesis: Hypothesis, y):
        if Hypothesis(hypothesis) is Hypothesis.PRE:
            return self.lr_cdf_pre(y)
        return self.lr_cdf_post(y)

    def lr_pdf(self, hypothesis: Hypothesis, y):
        if Hypothesis(hypothesis) is Hypothesis.PRE:
            return self.lr_pdf_pre(y)
        return self.lr_pdf_post(y)

    # -- sampling -----------------------------------------------------------

    @abstractmethod
    def sample(self, hypothesis: Hypothesis, rng: np.random.Generator,
               size: int | None = None):
        """Draw observations from f_∞ (pre) or f_0 (post)."""

    # -- config -------------------------------------------------------------

    @abstractmethod
    def params(self) -> dict:
        """Model parameters as they appear in a config section."""

    def config(self) -> dict:
        return {"name": self.name, **self.params()}

    @classmethod
    @abstractmethod
    def config_problems(cls, section: dict) -> list[str]:
        """Strict schema check of a ``model`` config section."""

    @classmethod
    @abstractmethod
    def from_config(cls, section: dict) -> "ChangeModel":
        ...

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self) -> int:
        return hash((type(self).__name__, tuple(sorted(self.params().items()))))

    # -- construction checks ------------------------------------------------

    def _check_model(self) -> None:
        lo, hi = self.support
        for label, density in (("pre", self.pre_density), ("post", self.post_density)):
            mass, _ = integrate.quad(lambda t: float(density(t)), lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200)
            if abs(mass - 1.0) > _NORMALIZATION_TOL:
                raise ValueError(
                    f"{self.name} model: {label}-change density integrates to {mass!r}, not 1"
                )
        for label, cdf in (("pre", self.lr_cdf_pre), ("post", self.lr_cdf_post)):
            if float(cdf(0.0)) != 0.0:
                raise ValueError(f"{self.name} model: F_{label}(0) must be 0")
            points = _atom_check_points(self.lr_support_max)
            lower = np.asarray(cdf(points * (1 - 1e-9)), dtype=float)
            upper = np.asarray(cdf(points * (1 + 1e-9)), dtype=float)
            jump = float(np.max(upper - lower))
            if jump > _ATOM_TOL:
                raise ValueError(
                    f"{self.name} model: likelihood ratio has an atom under the "
                    f"{label}-change hypothesis (CDF jump {jump:.3e}); only "
                    f"continuous Λ is supported"
                )


def _atom_check_points(support_max: float) -> np.ndarray:
    if math.isfinite(support_max):
        return np.linspace(0.0, support_max, _ATOM_CHECKS + 2)[1:-1]
    return np.geomspace(1e-8, 1e8, _ATOM_CHECKS)


def _check_domain(x: np.ndarray, r: np.ndarray) -> None:
    if np.any(x < 0) or np.any(r < 0):
        raise ValueError("kernel arguments must satisfy x >= 0 and r >= 0")


def _numeric_kernel(model: ChangeModel, hypothesis: Hypothesis,
                    x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """∂/∂x F(x/(1+r)) by finite differences, one-sided at 0 and the edge."""
    x, r = np.broadcast_arrays(x, r)
    scale = 1.0 + r
    h = _DIFF_STEP * (1.0 + np.abs(x))
    edge = model.lr_support_max * scale

    fwd = x - h < 0
    bwd = ~fwd & (x + h > edge) & (x <= edge)
    lo = np.where(fwd, x, x - h)
    hi = np.where(bwd, x, x + h)

    cdf = lambda t: np.asarray(model.lr_cdf(hypothesis, t / scale), dtype=float)
    return (cdf(hi) - cdf(lo)) / (hi - lo)


def _kernel(model: ChangeModel, hypothesis: Hypothesis, x, r):
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    _check_domain(x, r)
    if model.has_lr_pdf:
        out = np.asarray(model.lr_pdf(hypothesis, x / (1.0 + r)), dtype=float) / (1.0 + r)
    else:
        out = _numeric_kernel(model, hypothesis, x, r)
    return out if out.ndim else float(out)


def kernel_pre(model: ChangeModel, x, r):
    """K_∞(x, r): density of R_n at x given R_{n-1} = r under P_∞.

    Vectorised: ``x`` and ``r`` broadcast against each other.
    """
    return _kernel(model, Hypothesis.PRE, x, r)


def kernel_post(model: ChangeModel, x, r):
    """K_0(x, r): density of R_n at x given R_{n-1} = r under P_0."""
    return _kernel(model, Hypothesis.POST, x, r)


def sample_observation(model: ChangeModel, hypothesis: Hypothesis,
                       rng: np.random.Generator) -> float:
    """One draw from f_∞ or f_0 using the caller's generator."""
    return float(model.sample(Hypothesis(hypothesis), rng))
