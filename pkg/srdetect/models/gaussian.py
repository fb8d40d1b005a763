"""Gaussian mean shift: N(0, 1) before the change, N(μ, 1) after it.

Λ(x) = exp(μx − μ²/2) is log-normal under both hypotheses, with
F_∞(y) = Φ((log y + μ²/2)/|μ|) and F_0(y) = Φ((log y − μ²/2)/|μ|).
Only the CDFs are exposed; kernels go through numeric differentiation,
which keeps the generic solver path exercised.
"""

import numpy as np
from scipy.special import ndtr

from srdetect.core.config import check_keys
from srdetect.models.base import ChangeModel, Hypothesis

# Below this the CDF of Λ is so steep that the atom check cannot tell it
# from a jump.
MIN_ABS_MU = 1e-2


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class GaussianModel(ChangeModel):
    name = "gaussian"

    def __init__(self, mu: float = 1.0):
        if not (_is_real(mu) and abs(mu) >= MIN_ABS_MU):
            raise ValueError(f"gaussian model needs |mu| >= {MIN_ABS_MU}, got {mu!r}")
        self.mu = float(mu)
        self._check_model()

    @property
    def support(self) -> tuple[float, float]:
        return -np.inf, np.inf

    def pre_density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)

    def post_density(self, x):
        d = np.asarray(x, dtype=float) - self.mu
        return np.exp(-0.5 * d * d) / np.sqrt(2 * np.pi)

    def lr(self, x):
        return np.exp(self.mu * np.asarray(x, dtype=float) - 0.5 * self.mu ** 2)

    @property
    def lr_support_max(self) -> float:
        return np.inf

    def _lognormal_cdf(self, y, shift: float):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(y, 0.0)) + shift) / abs(self.mu)
        out = ndtr(z)
        return out if out.ndim else float(out)

    def lr_cdf_pre(self, y):
        return self._lognormal_cdf(y, 0.5 * self.mu ** 2)

    def lr_cdf_post(self, y):
        return self._lognormal_cdf(y, -0.5 * self.mu ** 2)

    def sample(self, hypothesis: Hypothesis, rng: np.random.Generator,
               size: int | None = None):
        loc = 0.0 if Hypothesis(hypothesis) is Hypothesis.PRE else self.mu
        return rng.normal(loc, 1.0, size)

    def params(self) -> dict:
        return {"mu": self.mu}

    @classmethod
    def config_problems(cls, section: dict) -> list[str]:
        problems = check_keys(section, required={"name"}, optional={"mu"},
                              context="model")
        mu = section.get("mu", 1.0)
        if not (_is_real(mu) and abs(mu) >= MIN_ABS_MU):
            problems.append(f"model.mu: must be a number with |mu| >= {MIN_ABS_MU}")
        return problems

    @classmethod
    def from_config(cls, section: dict) -> "GaussianModel":
        return cls(section.get("mu", 1.0))


def gaussian_model(mu: float) -> GaussianModel:
    return GaussianModel(mu)
