from __future__ import annotations

import asyncio
import os
import typing
from collections import deque
from typing import Any, Awaitable, Callable, Generic, Hashable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")
K = TypeVar("K", bound=Hashable)


def default_job_count() -> int:
    """Number of concurrent jobs used when nothing else is configured.

    Honours ``MCP_FORGE_JOBS`` and otherwise uses the CPU count.
    """
    try:
        return max(1, int(os.environ["MCP_FORGE_JOBS"]))
    except (KeyError, ValueError):
        return os.cpu_count() or 1


class Lease:
    """Permission to run one job, handed out by a `JobLimiter`.

    Awaiting a lease waits until it is ready. A lease must be returned (directly or by leaving the
    ``async with`` block) so that waiting jobs can proceed.
    """

    def __init__(self, limiter: JobLimiter):
        self._limiter = limiter
        self._is_ready = False
        self._is_done = False
        self._future: asyncio.Future[None] | None = None

    @property
    def ready(self) -> bool:
        return self._is_ready

    def return_lease(self) -> None:
        if self._is_ready and not self._is_done:
            self._limiter.__return_lease__()
        elif not self._is_ready:
            self._limiter.__cancel_pending__(self)
        self._is_done = True

    def __await__(self) -> typing.Generator[Any, Any, None]:
        if self._is_ready:
            return
        if self._future is None:
            self._future = asyncio.get_running_loop().create_future()
        yield from self._future.__await__()

    async def __aenter__(self) -> Lease:
        try:
            await self
        except BaseException:
            self.return_lease()
            raise
        return self

    async def __aexit__(self, *exc: object) -> None:
        self.return_lease()

    def __repr__(self):  # pragma: no cover (debug only)
        return f"is_ready={self._is_ready} is_done={self._is_done}"

    def __mark_as_ready__(self) -> None:
        assert not self._is_ready
        self._is_ready = True
        if self._future is not None and not self._future.done():
            self._future.set_result(None)


class JobLimiter:
    """Bounds the number of concurrently running jobs.

    Leases are granted in request order, which keeps scheduling fair and reproducible.
    """

    def __init__(self, jobs: int | None = None):
        self.jobs = default_job_count() if jobs is None else max(1, jobs)
        self._active = 0
        self._pending: deque[Lease] = deque()

    def request_lease(self) -> Lease:
        lease = Lease(self)
        if self._active < self.jobs:
            self._active += 1
            lease.__mark_as_ready__()
        else:
            self._pending.append(lease)
        return lease

    def __return_lease__(self) -> None:
        while self._pending:
            lease = self._pending.popleft()
            if not lease._is_done:
                lease.__mark_as_ready__()
                return
        self._active -= 1

    def __cancel_pending__(self, lease: Lease) -> None:
        try:
            self._pending.remove(lease)
        except ValueError:
            pass


async def map_ordered(
    fn: Callable[[T], Awaitable[R]], items: Iterable[T], *, jobs: int | None = None
) -> list[R]:
    """Apply an async function to all items concurrently and return results in input order.

    At most ``jobs`` calls run at the same time. The first exception cancels the remaining work
    and is re-raised.
    """
    limiter = JobLimiter(jobs)

    async def run(item: T) -> R:
        async with limiter.request_lease():
            return await fn(item)

    tasks = [asyncio.ensure_future(run(item)) for item in items]
    try:
        return list(await asyncio.gather(*tasks))
    except BaseException:
        for task in tasks:
            task.cancel()
        raise


class SingleFlight(Generic[K, R]):
    """Runs at most one computation per key at a time.

    Concurrent callers asking for the same key while a computation is in flight share its
    result instead of starting their own.
    """

    def __init__(self) -> None:
        self._inflight: dict[K, asyncio.Future[R]] = {}

    async def run(self, key: K, compute: Callable[[], Awaitable[R]]) -> R:
        if (future := self._inflight.get(key)) is not None:
            return await asyncio.shield(future)

        future = asyncio.get_running_loop().create_future()
        self._inflight[key] = future
        try:
            result = await compute()
        except asyncio.CancelledError:
            future.cancel()
            raise
        except BaseException as exc:
            future.set_exception(exc)
            # consumed here so waiters see it but an unobserved future does not warn
            future.exception()
            raise
        else:
            future.set_result(result)
            return result
        finally:
            del self._inflight[key]
