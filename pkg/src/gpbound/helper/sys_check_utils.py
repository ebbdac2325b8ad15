import os
import sys

THREADS_ENV_VAR = "GPBOUND_THREADS"


def check_python_version():
    """
    Checks the current Python version to ensure it meets the required minimum version.

    Raises:
        RuntimeError: If the current Python version is below 3.10.
    """
    if sys.version_info < (3, 10):
        raise RuntimeError("Must be using Python 3.10 or higher")


def available_cores() -> int:
    """
    Returns the number of cores this process may run on, falling back to the
    machine's CPU count where affinity is not supported.
    """
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def resolve_thread_count(requested: int | None) -> int:
    """
    Resolves the worker-thread count for parallel grid and sampling work.

    Precedence is the ``GPBOUND_THREADS`` environment variable, then the
    requested value, then the number of available cores.

    Args:
        requested (int | None): The ``--threads`` value, if given.

    Returns:
        int: A positive thread count.

    Raises:
        ValueError: If the environment variable or request is not a positive integer.
    """
    env = os.environ.get(THREADS_ENV_VAR, "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV_VAR} must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"{THREADS_ENV_VAR} must be a positive integer, got {env!r}")
        return value
    if requested is not None:
        if requested < 1:
            raise ValueError(f"--threads must be a positive integer, got {requested}")
        return requested
    return available_cores()
