"""Ball-cache files and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
import time
from pathlib import Path

from .cayley import BallCache
from .errors import ChecksumMismatch, VersionMismatch
from .groups import KEY_VERSION, GroupModel, element_from_key

FORMAT = "divlab-ball"
FORMAT_VERSION = 1


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_filename(model: GroupModel, radius: int) -> str:
    return f"ball_{model.h.kind}_m{model.m}_R{radius}.tsv"


def _body(cache: BallCache) -> bytes:
    lines = sorted(f"{key}\t{d}" for key, d in cache.entries.items())
    return ("\n".join(lines) + "\n").encode()


def store_ball(cache: BallCache, path: str | os.PathLike) -> Path:
    """Write a header line (JSON) then sorted ``key<TAB>dist`` lines; atomic rename."""
    path = Path(path)
    body = _body(cache)
    header = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "key_version": KEY_VERSION,
        "descriptor": cache.descriptor,
        "radius": cache.radius,
        "entries": len(cache),
        "sha256": hashlib.sha256(body).hexdigest(),
    }
    _atomic_write(path, json.dumps(header, sort_keys=True).encode() + b"\n" + body)
    return path


def load_ball(model: GroupModel, path: str | os.PathLike) -> BallCache:
    """Load a cache written by store_ball, checking descriptor, versions and checksum."""
    raw = Path(path).read_bytes()
    head, _, body = raw.partition(b"\n")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise ChecksumMismatch(f"unreadable cache header in {path}") from exc
    if header.get("format") != FORMAT or header.get("version") != FORMAT_VERSION:
        raise VersionMismatch(f"{path} is not a version-{FORMAT_VERSION} ball cache")
    if header.get("key_version") != KEY_VERSION:
        raise VersionMismatch(f"{path} uses key version {header.get('key_version')}")
    if header.get("descriptor") != model.descriptor:
        raise VersionMismatch(f"{path} holds {header.get('descriptor')}, requested {model.descriptor}")
    if hashlib.sha256(body).hexdigest() != header.get("sha256"):
        raise ChecksumMismatch(f"{path} is truncated or corrupted")
    dist = {}
    for line in body.decode().splitlines():
        key, d = line.split("\t")
        dist[element_from_key(model, key).payload] = int(d)
    if len(dist) != header.get("entries"):
        raise ChecksumMismatch(f"{path} entry count does not match its header")
    return BallCache(model, header["radius"], dist)


def cached_ball(model: GroupModel, radius: int, cache_dir: str | os.PathLike | None, workers: int = 1) -> BallCache:
    """Load the ball from ``cache_dir`` when present, else build and store it."""
    from .cayley import ball

    if cache_dir is None:
        return ball(model, radius, workers=workers)
    path = Path(cache_dir) / cache_filename(model, radius)
    if path.exists():
        return load_ball(model, path)
    cache = ball(model, radius, workers=workers)
    store_ball(cache, path)
    return cache


# ---------------------------------------------------------------------------
# run manifests


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def write_manifest(out_dir: str | os.PathLike, config: dict, artifacts: list[str], timings: dict,
                   extra: dict | None = None) -> Path:
    from . import __version__

    out = Path(out_dir)
    manifest = {
        "config": config,
        "config_hash": config_hash(config),
        "artifacts": sorted(artifacts),
        "versions": {"divlab": __version__, "python": platform.python_version()},
        "timings": timings,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    _atomic_write(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return path
