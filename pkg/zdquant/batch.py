"""Ordered, optionally threaded execution of independent jobs."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence

import numpy as np

from .utils.exceptions import ZdqError
from .utils.file_logger import get_logger


@dataclass
class BatchResult:
    """Result of one job."""
    index: int
    status: str  # "success" or "failed"
    value: Any = None
    error: str = None
    exception: BaseException = None


def child_seeds(seed, count: int) -> List[np.random.SeedSequence]:
    """Independent per-job seeds derived from one root seed."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


class BatchRunner:
    """Runs jobs on a thread pool and returns results in job order."""

    def __init__(self, threads: int = 1, description: str = "jobs"):
        """Initialize batch runner.

        Args:
            threads: Worker count; 1 runs inline
            description: Label used in log lines
        """
        self.threads = max(1, int(threads))
        self.description = description

    def process(
        self,
        func: Callable[[Any], Any],
        jobs: Sequence[Any],
        on_progress: Callable[[int, int], None] = None,
    ) -> List[BatchResult]:
        """Run func over jobs; failures are recorded, not raised."""
        logger = get_logger()
        total = len(jobs)
        logger.debug(f"Starting {total} {self.description} on {self.threads} thread(s)")

        def run(index: int) -> BatchResult:
            try:
                return BatchResult(index=index, status="success", value=func(jobs[index]))
            except Exception as e:
                logger.error(f"{self.description} #{index} failed: {e}")
                return BatchResult(index=index, status="failed", error=str(e), exception=e)

        results: List[BatchResult] = []
        if self.threads == 1:
            for index in range(total):
                results.append(run(index))
                if on_progress:
                    on_progress(index + 1, total)
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                # map preserves submission order, so reduction order is fixed
                for done, result in enumerate(pool.map(run, range(total)), start=1):
                    results.append(result)
                    if on_progress:
                        on_progress(done, total)

        summary = self.get_summary(results)
        logger.debug(
            f"{self.description}: {summary['success_count']} succeeded, {summary['failed_count']} failed"
        )
        return results

    def map(self, func: Callable[[Any], Any], jobs: Sequence[Any]) -> List[Any]:
        """Like process() but re-raises the first failure in job order."""
        results = self.process(func, jobs)
        for result in results:
            if result.status == "failed":
                if isinstance(result.exception, ZdqError):
                    raise result.exception
                raise ZdqError(f"{self.description} #{result.index} failed: {result.error}") from result.exception
        return [result.value for result in results]

    @staticmethod
    def get_summary(results: List[BatchResult]) -> Dict[str, Any]:
        """Summary counts over process() results."""
        failed = [r for r in results if r.status == "failed"]
        return {
            "total": len(results),
            "success_count": len(results) - len(failed),
            "failed_count": len(failed),
            "failed_jobs": [(r.index, r.error) for r in failed],
        }
