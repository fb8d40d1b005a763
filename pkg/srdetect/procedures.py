"""Streaming SR, SR-r and SRP detectors.

All three procedures share the recursion R_n = (1 + R_{n-1}) Λ_n and the
stopping rule T = inf{n ≥ 1 : R_n ≥ threshold}; they differ only in R_0:

    SR     R_0 = 0
    SR-r   R_0 = r, a deterministic head start below the threshold
    SRP    R_0 ~ Q_B, one fresh quasi-stationary draw per run

``step``/``run_to_alarm`` work one observation at a time; ``simulate_batch``
runs many independent detectors at once for the Monte Carlo oracle.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from srdetect.models import ChangeModel, Hypothesis, sample_observation

if TYPE_CHECKING:
    from srdetect.quasi_stationary import QuasiStationary

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10_000_000

# log of the largest finite double; (1+R)Λ beyond this would overflow
_LOG_MAX = math.log(np.finfo(float).max)


class HeadStartKind(str, Enum):
    DETERMINISTIC = "deterministic"
    QUASI_STATIONARY = "quasi_stationary"


@dataclass(frozen=True)
class HeadStart:
    kind: HeadStartKind
    r: float = 0.0
    qsd: "QuasiStationary | None" = None

    def __post_init__(self):
        kind = HeadStartKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is HeadStartKind.DETERMINISTIC:
            if not (math.isfinite(self.r) and self.r >= 0):
                raise ValueError(f"head start must be a nonnegative number, got {self.r!r}")
        elif self.qsd is None:
            raise ValueError("quasi-stationary head start needs a QuasiStationary")

    @classmethod
    def deterministic(cls, r: float = 0.0) -> "HeadStart":
        return cls(HeadStartKind.DETERMINISTIC, float(r))

    @classmethod
    def quasi_stationary(cls, qsd: "QuasiStationary") -> "HeadStart":
        return cls(HeadStartKind.QUASI_STATIONARY, qsd=qsd)

    @property
    def is_randomized(self) -> bool:
        return self.kind is HeadStartKind.QUASI_STATIONARY

    def describe(self) -> str:
        if self.is_randomized:
            return f"srp(B={self.qsd.threshold:.12g})"
        if self.r == 0:
            return "sr"
        return f"sr-r(r={self.r:.12g})"

    def check_threshold(self, threshold: float) -> None:
        if not threshold > 0:
            raise ValueError(f"threshold must be positive, got {threshold!r}")
        if self.is_randomized:
            if not math.isclose(self.qsd.threshold, threshold, rel_tol=1e-12):
                raise ValueError(
                    f"quasi-stationary distribution is for B={self.qsd.threshold}, "
                    f"not for threshold {threshold}"
                )
        elif self.r >= threshold:
            raise ValueError(
                f"head start {self.r} must be below the threshold {threshold}"
            )

    def draw(self, rng: np.random.Generator, size: int | None = None):
        """R_0 for one run (``size=None``) or for ``size`` runs."""
        if self.is_randomized:
            return self.qsd.sample(rng, size)
        if size is None:
            return self.r
        return np.full(size, self.r)


@dataclass(frozen=True)
class DetectorState:
    statistic: float
    n: int
    threshold: float
    stopped: bool = False


@dataclass(frozen=True)
class RunOutcome:
    """Result of one run.

    ``censored`` runs reached ``cap`` without an alarm; their
    ``stopping_time`` is the cap. ``changepoint`` is None for ν = ∞.
    """

    stopping_time: int
    censored: bool
    changepoint: int | None
    trajectory: tuple[float, ...] | None = None


def init_detector(head_start: HeadStart, threshold: float,
                  rng: np.random.Generator | None = None) -> DetectorState:
    head_start.check_threshold(threshold)
    if head_start.is_randomized:
        if rng is None:
            raise ValueError("a quasi-stationary head start needs an rng")
        r0 = float(head_start.draw(rng))
    else:
        r0 = head_start.r
    return DetectorState(statistic=r0, n=0, threshold=float(threshold))


def advance(state: DetectorState, lr_value: float) -> DetectorState:
    """One SR update on a likelihood-ratio value."""
    if state.stopped:
        raise ValueError(f"detector already stopped at n={state.n}")
    if lr_value < 0 or math.isnan(lr_value):
        raise ValueError(f"likelihood ratio must be nonnegative, got {lr_value!r}")
    if lr_value > 0 and math.log1p(state.statistic) + math.log(lr_value) > _LOG_MAX:
        # overflow: alarm, the statistic is beyond any finite threshold
        logger.debug("statistic overflow at n=%d; raising alarm", state.n + 1)
        return DetectorState(math.inf, state.n + 1, state.threshold, True)
    statistic = (1.0 + state.statistic) * lr_value
    return DetectorState(statistic, state.n + 1, state.threshold,
                         statistic >= state.threshold)


def step(state: DetectorState, observation: float, model: ChangeModel) -> DetectorState:
    return advance(state, float(model.lr(observation)))


def _hypothesis(n: int, changepoint: int | None) -> Hypothesis:
    # X_n is post-change iff n > ν
    if changepoint is not None and n > changepoint:
        return Hypothesis.POST
    return Hypothesis.PRE


def run_to_alarm(model: ChangeModel, head_start: HeadStart, threshold: float,
                 changepoint: int | None, rng: np.random.Generator,
                 cap: int = DEFAULT_CAP, record: bool = False) -> RunOutcome:
    """Run one detector until it alarms or ``cap`` observations have been seen."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    if changepoint is not None and changepoint < 0:
        raise ValueError(f"changepoint must be >= 0 or None, got {changepoint}")
    state = init_detector(head_start, threshold, rng)
    trajectory = [state.statistic] if record else None
    while state.n < cap:
        x = sample_observation(model, _hypothesis(state.n + 1, changepoint), rng)
        state = step(state, x, model)
        if record:
            trajectory.append(state.statistic)
        if state.stopped:
            return RunOutcome(state.n, False, changepoint,
                              tuple(trajectory) if record else None)
    return RunOutcome(cap, True, changepoint, tuple(trajectory) if record else None)


@dataclass(frozen=True, eq=False)
class Batch:
    """Stopping times of many independent runs; censored runs hold ``cap``."""

    stopping_times: np.ndarray
    censored: np.ndarray
    changepoint: int | None

    def __len__(self) -> int:
        return len(self.stopping_times)

    def concat(self, other: "Batch") -> "Batch":
        return dataclasses.replace(
            self,
            stopping_times=np.concatenate([self.stopping_times, other.stopping_times]),
            censored=np.concatenate([self.censored, other.censored]),
        )


def simulate_batch(model: ChangeModel, head_start: HeadStart, threshold: float,
                   changepoint: int | None, rng: np.random.Generator, size: int,
                   cap: int = DEFAULT_CAP) -> Batch:
    """``size`` independent runs of ``run_to_alarm``, advanced in lockstep."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    head_start.check_threshold(threshold)
    stat = np.asarray(head_start.draw(rng, size), dtype=float)
    times = np.full(size, cap, dtype=np.int64)
    censored = np.ones(size, dtype=bool)
    active = np.arange(size)
    n = 0
    while active.size and n < cap:
        n += 1
        x = model.sample(_hypothesis(n, changepoint), rng, active.size)
        with np.errstate(over="ignore"):
            stat = (1.0 + stat) * model.lr(x)
        alarm = stat >= threshold
        if alarm.any():
            times[active[alarm]] = n
            censored[active[alarm]] = False
            active = active[~alarm]
            stat = stat[~alarm]
    if active.size:
        logger.warning("%d of %d runs censored at cap=%d", active.size, size, cap)
    return Batch(times, censored, changepoint)
