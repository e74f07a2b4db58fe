import os
from concurrent.futures import ProcessPoolExecutor

ENV_THREADS = "FUNKMEAN_THREADS"


def worker_count(requested=None) -> int:
    """Workers to use: explicit request, else FUNKMEAN_THREADS, else all CPUs (0 = auto)."""
    if requested is None:
        try:
            requested = int(os.environ.get(ENV_THREADS, "0"))
        except ValueError:
            requested = 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, int(requested))


def map_chunks(fn, chunks, workers=None):
    """Apply ``fn`` to every chunk, in a process pool when more than one worker."""
    workers = worker_count(workers)
    chunks = list(chunks)
    if workers == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ProcessPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
        return list(pool.map(fn, chunks))
