"""Monte Carlo oracle for ARL, conditional delays and the integral ADD.

Runs are simulated in fixed-size chunks. Chunk k of stream s draws from
its own generator,

    Generator(PCG64(SeedSequence(seed, spawn_key=(*s, k)))),

so streams never overlap and the results depend on the seed and the
chunk size only, not on how many workers ran the chunks. Censored runs
enter every mean at the cap value and are counted; an estimate with more
than 0.1% censored runs is flagged unreliable.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from srdetect.core.errors import NumericalError
from srdetect.core.executor import run_chunks
from srdetect.models import ChangeModel
from srdetect.procedures import DEFAULT_CAP, Batch, HeadStart, simulate_batch

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 65_536
MAX_CENSORED_FRACTION = 1e-3
# P_∞(T > ν_max) below which the integral ADD series is cut
TAIL_MASS = 1e-4
# conditioning on {T > ν} gives up after this many draws per accepted run
MAX_DRAWS_PER_RUN = 1_000

_ARL_STREAM = (0,)
_CADD_STREAM = 1
_IRADD_STREAM = 2


@dataclass(frozen=True)
class SimulationOptions:
    cap: int = DEFAULT_CAP
    chunk_size: int = DEFAULT_CHUNK_SIZE
    workers: int = 1
    timeout: float | None = None


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_runs: int
    n_censored: int
    seed: int
    acceptance_rate: float = 1.0
    truncation_mass: float | None = None

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / self.n_runs

    @property
    def reliable(self) -> bool:
        return self.censored_fraction <= MAX_CENSORED_FRACTION

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.std_error

    def to_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_runs": self.n_runs,
            "n_censored": self.n_censored,
            "seed": self.seed,
            "reliable": self.reliable,
            "acceptance_rate": self.acceptance_rate,
        }
        if self.truncation_mass is not None:
            out["truncation_mass"] = self.truncation_mass
        return out


def chunk_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _estimate(values: np.ndarray, n_censored: int, seed: int, **extra) -> MCEstimate:
    mean, se = _mean_and_se(values)
    est = MCEstimate(mean, se, len(values), int(n_censored), seed, **extra)
    if not est.reliable:
        logger.warning("%.3g%% of runs censored; estimate %s is unreliable",
                       100 * est.censored_fraction, mean)
    return est


def _check_runs(runs: int) -> None:
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")


def _simulate_chunks(model: ChangeModel, procedure: HeadStart, threshold: float,
                     changepoint: int | None, chunk_ids: range, size: int,
                     seed: int, stream: tuple[int, ...], opts: SimulationOptions,
                     total: int | None = None) -> list[Batch]:
    def run(k: int) -> Batch:
        n = size if total is None else min(size, total - k * size)
        return simulate_batch(model, procedure, threshold, changepoint,
                              chunk_rng(seed, *stream, k), n, opts.cap)

    return run_chunks(run, chunk_ids, opts.workers, opts.timeout)


def simulate_runs(model: ChangeModel, procedure: HeadStart, threshold: float,
                  changepoint: int | None, runs: int, seed: int,
                  opts: SimulationOptions | None = None,
                  stream: tuple[int, ...] = _ARL_STREAM) -> Batch:
    """``runs`` independent runs, reduced in chunk order."""
    _check_runs(runs)
    opts = opts or SimulationOptions()
    procedure.check_threshold(threshold)
    n_chunks = -(-runs // opts.chunk_size)
    batches = _simulate_chunks(model, procedure, threshold, changepoint,
                               range(n_chunks), opts.chunk_size, seed, stream, opts, runs)
    out = batches[0]
    for b in batches[1:]:
        out = out.concat(b)
    logger.debug("simulated %d runs of %s at ν=%s", runs, procedure.describe(), changepoint)
    return out


def estimate_arl(model: ChangeModel, procedure: HeadStart, threshold: float,
                 runs: int, seed: int, opts: SimulationOptions | None = None) -> MCEstimate:
    """E_∞ T from ``runs`` change-free runs."""
    batch = simulate_runs(model, procedure, threshold, None, runs, seed, opts)
    return _estimate(batch.stopping_times, batch.censored.sum(), seed)


def estimate_cadd(model: ChangeModel, procedure: HeadStart, threshold: float,
                  nu: int, runs: int, seed: int,
                  opts: SimulationOptions | None = None) -> MCEstimate:
    """E_ν(T − ν | T > ν) over ``runs`` accepted runs.

    Runs alarming by ν are discarded; the first ``runs`` survivors in chunk
    order are kept, so the estimate does not depend on ``workers``.
    """
    _check_runs(runs)
    if nu < 0:
        raise ValueError(f"nu must be nonnegative, got {nu}")
    opts = opts or SimulationOptions()
    procedure.check_threshold(threshold)
    size = min(opts.chunk_size, runs)
    max_chunks = -(-runs * MAX_DRAWS_PER_RUN // size)

    delays, censored = [], []
    n_accepted = n_drawn = 0
    next_chunk = 0
    while n_accepted < runs:
        if next_chunk >= max_chunks:
            raise NumericalError(
                f"conditioning on T > {nu} accepted {n_accepted} of {n_drawn} runs; "
                f"need {runs}"
            )
        rate = n_accepted / n_drawn if n_drawn else 1.0
        want = -(-(runs - n_accepted) // max(1, int(size * max(rate, 1e-3))))
        n_chunks = min(max(want, opts.workers), max_chunks - next_chunk)
        batches = _simulate_chunks(
            model, procedure, threshold, nu,
            range(next_chunk, next_chunk + n_chunks), size, seed, (_CADD_STREAM, nu), opts,
        )
        next_chunk += n_chunks
        for b in batches:
            if n_accepted >= runs:
                break
            need = runs - n_accepted
            take = np.flatnonzero(b.stopping_times > nu)[:need]
            # the acceptance rate counts draws up to the last run kept
            n_drawn += int(take[-1]) + 1 if len(take) == need else len(b)
            delays.append(b.stopping_times[take] - nu)
            censored.append(b.censored[take])
            n_accepted += len(take)

    rate = n_accepted / n_drawn
    if rate < 0.5:
        logger.info("conditioning on T > %d accepted %.3g%% of runs", nu, 100 * rate)
    return _estimate(np.concatenate(delays), np.concatenate(censored).sum(), seed,
                     acceptance_rate=rate)


def survival_curve(stopping_times: np.ndarray, n_max: int | None = None) -> np.ndarray:
    """Empirical P(T > n) for n = 0..n_max."""
    times = np.asarray(stopping_times, dtype=np.int64)
    if times.size == 0:
        raise ValueError("survival_curve needs at least one stopping time")
    if n_max is None:
        n_max = int(times.max())
    counts = np.bincount(np.minimum(times, n_max + 1), minlength=n_max + 2)
    return 1.0 - np.cumsum(counts)[: n_max + 1] / times.size


def estimate_integral_add(model: ChangeModel, procedure: HeadStart, threshold: float,
                          r: float, runs: int, seed: int, nu_max: int | None = None,
                          opts: SimulationOptions | None = None) -> MCEstimate:
    """Plug-in I_r(T) = (r E_0 T + Σ_{ν ≤ ν_max} E_ν(T − ν)^+) / (r + E_∞ T).

    Each term comes from its own batch of ``runs`` runs; the standard error
    follows by the delta method. With ``nu_max=None`` the series stops where
    the estimated P_∞(T > ν) drops below 1e-4. ``truncation_mass`` reports
    the estimated P_∞(T > ν_max) left out.
    """
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    arl_batch = simulate_runs(model, procedure, threshold, None, runs, seed, opts)
    arl, arl_se = _mean_and_se(arl_batch.stopping_times)
    survival = survival_curve(arl_batch.stopping_times)
    if nu_max is None:
        below = np.flatnonzero(survival < TAIL_MASS)
        nu_max = int(below[0]) if below.size else len(survival) - 1
    tail = float(survival[nu_max]) if nu_max < len(survival) else 0.0

    n_censored = int(arl_batch.censored.sum())
    means, ses = [], []
    for nu in range(nu_max + 1):
        b = simulate_runs(model, procedure, threshold, nu, runs, seed, opts,
                          stream=(_IRADD_STREAM, nu))
        m, se = _mean_and_se(np.maximum(b.stopping_times - nu, 0))
        means.append(m)
        ses.append(se)
        n_censored += int(b.censored.sum())

    num = r * means[0] + sum(means)
    var_num = (r + 1.0) ** 2 * ses[0] ** 2 + sum(s * s for s in ses[1:])
    den = r + arl
    value = num / den
    se = math.sqrt(var_num / den ** 2 + num ** 2 * arl_se ** 2 / den ** 4)
    logger.debug("I_r at r=%s: %s ± %s over ν ≤ %d (tail %.3g)", r, value, se, nu_max, tail)
    total = runs * (nu_max + 2)
    est = MCEstimate(value, se, total, n_censored, seed, truncation_mass=tail)
    if not est.reliable:
        logger.warning("%.3g%% of runs censored; I_r estimate is unreliable",
                       100 * est.censored_fraction)
    return est


class GeometricFit(NamedTuple):
    statistic: float
    pvalue: float
    bins: int

    def passes(self, alpha: float = 0.01) -> bool:
        return self.pvalue >= alpha


def geometric_gof(stopping_times: np.ndarray, p: float,
                  min_expected: float = 5.0) -> GeometricFit:
    """Chi-square test of T ~ Geometric(p) on {1, 2, ...}.

    Cells are T = 1..K plus the tail T > K, with K the largest value
    keeping every expected count at least ``min_expected``.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    times = np.asarray(stopping_times, dtype=np.int64)
    n = times.size
    K = 0
    while (n * (1 - p) ** K * p >= min_expected
           and n * (1 - p) ** (K + 1) >= min_expected):
        K += 1
    if K < 1:
        raise ValueError(f"too few stopping times ({n}) for a chi-square test")
    ks = np.arange(1, K + 1)
    expected = np.append(n * (1 - p) ** (ks - 1) * p, n * (1 - p) ** K)
    counts = np.bincount(np.minimum(times, K + 1), minlength=K + 2)[1:]
    result = stats.chisquare(counts, expected)
    return GeometricFit(float(result.statistic), float(result.pvalue), K + 1)
