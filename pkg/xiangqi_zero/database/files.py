"""
File writes shared by checkpoints, datasets and game records.
Transient OS errors are retried; anything else propagates to the caller.
"""

from pathlib import Path
from typing import Union

from loguru import logger
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

TRANSIENT_WRITE_ERRORS = (BlockingIOError, InterruptedError, TimeoutError)

PathLike = Union[str, Path]


@retry(
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=2),
    retry=retry_if_exception_type(TRANSIENT_WRITE_ERRORS),
    reraise=True,
)
def write_bytes(path: PathLike, data: bytes) -> Path:
    """
    Write `data` to `path` through a temporary sibling, then rename into place.

    Args:
        path: Destination file. Parent directories are created.
        data: Full file contents.

    Returns:
        The destination path.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    partial = target.with_name(target.name + ".part")
    partial.write_bytes(data)
    partial.replace(target)
    logger.debug(f"Wrote {len(data)} bytes to {target}")
    return target


def write_text(path: PathLike, text: str) -> Path:
    return write_bytes(path, text.encode("utf-8"))
