"""Download helpers for the public entity-resolution benchmarks."""

from __future__ import annotations

import asyncio
import io
import logging
import zipfile
from pathlib import Path
from typing import Dict, Tuple

import httpx

from .errors import UsageError

logger = logging.getLogger(__name__)

_FALCON = "http://pages.cs.wisc.edu/~anhai/data/falcon_data"

# benchmark -> files; ``.zip`` archives are unpacked, anything else is saved as is
BENCHMARKS: Dict[str, Tuple[str, ...]] = {
    "dblp-scholar": ("https://dbs.uni-leipzig.de/file/DBLP-Scholar.zip",),
    "abt-buy": ("https://dbs.uni-leipzig.de/file/Abt-Buy.zip",),
    "songs": (f"{_FALCON}/songs/msd.csv", f"{_FALCON}/songs/matches_msd_msd.csv"),
}


async def fetch_archive(url: str, timeout: float = 60.0) -> bytes:
    async with httpx.AsyncClient(timeout=timeout, follow_redirects=True) as client:
        resp = await client.get(url)
        resp.raise_for_status()
    logger.info("Downloaded %d bytes from %s", len(resp.content), url)
    return resp.content


def _store(url: str, payload: bytes, target: Path) -> int:
    filename = url.rsplit("/", 1)[-1]
    if not filename.lower().endswith(".zip"):
        (target / filename).write_bytes(payload)
        return 1
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        archive.extractall(target)
        return len(archive.namelist())


async def fetch_benchmark(name: str, dest: Path) -> Path:
    """Download benchmark ``name`` into ``dest/name``, unpacking zip archives."""

    try:
        urls = BENCHMARKS[name]
    except KeyError:
        raise UsageError("datasets", f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None

    payloads = await asyncio.gather(*(fetch_archive(url) for url in urls))
    target = Path(dest) / name
    target.mkdir(parents=True, exist_ok=True)
    written = sum(_store(url, payload, target) for url, payload in zip(urls, payloads))
    logger.info("Stored %d files into %s", written, target)
    return target


def fetch_benchmark_sync(name: str, dest: Path) -> Path:
    return asyncio.run(fetch_benchmark(name, dest))
