import math

import numpy as np
import pytest

from srdetect.fredholm import make_grid
from srdetect.models import ExponentialModel, GaussianModel, Hypothesis

# Published E(1,2) numbers at ARL γ = 2.
B_GAMMA2 = math.e - 1.0
A_GAMMA2 = 1.66485
R_A_GAMMA2 = 0.63244
E0_SRP_GAMMA2 = 1.33275
JP_SRR_GAMMA2 = 1.31622


class ScriptedModel(ExponentialModel):
    """Observations are likelihood-ratio values, drawn as constants.

    Every pre-change draw is ``pre_lr`` and every post-change draw is
    ``post_lr``, so stopping times are known in advance.
    """

    name = "scripted"

    def __init__(self, pre_lr: float = 0.5, post_lr: float = 4.0):
        super().__init__(2.0)
        self.pre_lr = pre_lr
        self.post_lr = post_lr

    def lr(self, x):
        return np.asarray(x, dtype=float) if np.ndim(x) else float(x)

    def sample(self, hypothesis, rng, size=None):
        value = self.pre_lr if Hypothesis(hypothesis) is Hypothesis.PRE else self.post_lr
        return value if size is None else np.full(size, value)


@pytest.fixture
def e12():
    return ExponentialModel(2.0)


@pytest.fixture
def gaussian():
    return GaussianModel(1.0)


@pytest.fixture
def scripted():
    return ScriptedModel()


@pytest.fixture
def grid_gamma2():
    return make_grid(A_GAMMA2, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
