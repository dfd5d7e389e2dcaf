import functools
import time

from .file_logger import get_logger


def timer(func):
    """Log wall-clock time of the wrapped call."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        elapsed = time.perf_counter() - start
        get_logger().info(f"{func.__name__} took {elapsed:.2f}s")
        return result
    return wrapper

