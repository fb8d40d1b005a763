import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


class SimulationTimeout(Exception):
    """Chunks were still running when the time budget ran out."""

    def __init__(self, timeout: float, done: int, total: int):
        super().__init__(
            f"simulation stopped after {timeout}s with {done} of {total} chunks "
            f"finished; raise simulation time budget or lower runs"
        )
        self.timeout = timeout
        self.done = done
        self.total = total


async def execute_chunks(
    fn: Callable[[int], T],
    chunk_ids: Iterable[int],
    workers: int = 1,
    timeout: float | None = None,
) -> list[T]:
    """Run ``fn(k)`` for every chunk id on a thread pool.

    Results come back in ``chunk_ids`` order whatever order the chunks
    finish in, so a reduction over them is independent of ``workers``.

    Raises:
        ValueError: if ``workers`` < 1.
        SimulationTimeout: if the chunks outlive ``timeout`` seconds.
            Pending chunks are cancelled; running ones finish in the
            background and their results are dropped.
    """
    if workers < 1:
        raise ValueError(f"execute_chunks needs at least one worker, got {workers}")
    ids = list(chunk_ids)
    loop = asyncio.get_running_loop()
    pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="srdetect-chunk")
    futures = [loop.run_in_executor(pool, fn, k) for k in ids]
    try:
        gathered = asyncio.gather(*futures)
        if timeout is not None:
            results = await asyncio.wait_for(gathered, timeout=timeout)
        else:
            results = await gathered
    except asyncio.TimeoutError:
        done = sum(f.done() and not f.cancelled() for f in futures)
        raise SimulationTimeout(timeout, done, len(ids)) from None
    finally:
        pool.shutdown(wait=False, cancel_futures=True)
    logger.debug("finished %d chunks on %d worker(s)", len(ids), workers)
    return list(results)


def run_chunks(
    fn: Callable[[int], T],
    chunk_ids: Iterable[int],
    workers: int = 1,
    timeout: float | None = None,
) -> list[T]:
    """Synchronous front of ``execute_chunks`` for callers outside an event loop."""
    return asyncio.run(execute_chunks(fn, chunk_ids, workers, timeout))
