"""The E(1, θ) model: Exp(1) before the change, Exp(θ) after it.

With Λ(x) = θ e^{-(θ-1)x} decreasing in x, the event {Λ_1 ≤ y} is
{X_1 ≥ log(θ/y)/(θ-1)}, so on [0, θ]

    F_∞(y) = (y/θ)^{1/(θ-1)},    F_0(y) = (y/θ)^{θ/(θ-1)}.

For θ = 2 the pre-change kernel is 1/(2(1+r)), constant in x below
2(1+r); that is what makes the closed forms in ``exact_exp`` possible.
"""

import numpy as np

from srdetect.core.config import check_keys
from srdetect.models.base import ChangeModel, Hypothesis


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class ExponentialModel(ChangeModel):
    name = "exponential"
    has_lr_pdf = True

    def __init__(self, theta: float = 2.0):
        if not (_is_real(theta) and theta > 1):
            raise ValueError(f"exponential model needs theta > 1, got {theta!r}")
        self.theta = float(theta)
        self._check_model()

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, np.inf

    def pre_density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.abs(x)), 0.0)

    def post_density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.theta * np.exp(-self.theta * np.abs(x)), 0.0)

    def lr(self, x):
        return self.theta * np.exp(-(self.theta - 1.0) * np.asarray(x, dtype=float))

    @property
    def lr_support_max(self) -> float:
        return self.theta

    def _power_cdf(self, y, exponent: float):
        y = np.asarray(y, dtype=float)
        u = np.clip(y / self.theta, 0.0, 1.0)
        out = u ** exponent
        return out if out.ndim else float(out)

    def lr_cdf_pre(self, y):
        return self._power_cdf(y, 1.0 / (self.theta - 1.0))

    def lr_cdf_post(self, y):
        return self._power_cdf(y, self.theta / (self.theta - 1.0))

    def _power_pdf(self, y, exponent: float, coef: float):
        y = np.asarray(y, dtype=float)
        # y = 0 is a pole only for a negative exponent
        lower = (y > 0) if exponent < 0 else (y >= 0)
        inside = lower & (y < self.theta)
        u = np.where(inside, y / self.theta, 1.0)
        with np.errstate(divide="ignore"):
            out = np.where(inside, coef * u ** exponent, 0.0)
        return out if out.ndim else float(out)

    def lr_pdf_pre(self, y):
        # d/dy (y/θ)^{1/(θ-1)}; support edge y = θ belongs to the zero side
        a = 1.0 / (self.theta - 1.0)
        return self._power_pdf(y, a - 1.0, a / self.theta)

    def lr_pdf_post(self, y):
        a = self.theta / (self.theta - 1.0)
        return self._power_pdf(y, a - 1.0, a / self.theta)

    def sample(self, hypothesis: Hypothesis, rng: np.random.Generator,
               size: int | None = None):
        scale = 1.0 if Hypothesis(hypothesis) is Hypothesis.PRE else 1.0 / self.theta
        return rng.exponential(scale, size)

    def params(self) -> dict:
        return {"theta": self.theta}

    @classmethod
    def config_problems(cls, section: dict) -> list[str]:
        problems = check_keys(section, required={"name"}, optional={"theta"},
                              context="model")
        theta = section.get("theta", 2.0)
        if not (_is_real(theta) and theta > 1):
            problems.append("model.theta: must be a number > 1")
        return problems

    @classmethod
    def from_config(cls, section: dict) -> "ExponentialModel":
        return cls(section.get("theta", 2.0))


def exponential_model(theta: float) -> ExponentialModel:
    """E(1, θ): f_∞(x) = e^{-x}, f_0(x) = θ e^{-θx} on x ≥ 0."""
    return ExponentialModel(theta)
