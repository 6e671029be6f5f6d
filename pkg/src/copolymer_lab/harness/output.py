"""Run directories, atomic file writes, CSV / JSON-lines writers and the run manifest.

CSV schemas (all files have a header row):

* ``curve.csv``: ``x, mean, stderr, reference`` (reference empty when absent)
* ``spectrum.csv``: ``m, log_value, probability``
* ``partition.csv``: ``k, log_value`` (constrained table over even ``k``)
* ``free_energy.csv``: ``N, mean_Fc, se_Fc, mean_Ff, se_Ff``
* ``samples.csv``: ``sample, occupation, last_exit``

JSON-lines records carry ``schema_version``; timestamps appear only in
``manifest.json``, so result files are byte-identical across reruns.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from .. import __version__


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


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("-inf" if x < 0 else ("inf" if x > 0 else "nan"))
    return str(x)


class RunWriter:
    """Owns one run directory; every file it writes is listed in the manifest."""

    def __init__(self, root: Path, experiment: str, seed: int):
        self.started = datetime.now(timezone.utc)
        stamp = self.started.strftime("%Y%m%dT%H%M%S%f")
        base = f"{experiment}-{stamp}-s{seed}"
        root.mkdir(parents=True, exist_ok=True)
        path = root / base
        n = 1
        while True:
            try:
                path.mkdir()
                break
            except FileExistsError:
                n += 1
                path = root / f"{base}-{n}"
        self.dir = path
        self.files: dict[str, str] = {}

    def write_bytes(self, name: str, data: bytes) -> Path:
        if name in self.files or name == "manifest.json":
            raise ValueError(f"file {name} already written in this run")
        path = self.dir / name
        _atomic_write(path, data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        return self.write_bytes(name, buf.getvalue().encode())

    def write_jsonl(self, name: str, records: list[dict]) -> Path:
        text = "".join(json.dumps(r, sort_keys=True, allow_nan=False) + "\n" for r in records)
        return self.write_bytes(name, text.encode())

    def finish(self, config: dict, status: str, message: str | None = None) -> Path:
        manifest = {
            "schema_version": 1,
            "software_version": __version__,
            "config": config,
            "started": self.started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "status": status,
            "message": message,
            "files": dict(sorted(self.files.items())),
        }
        path = self.dir / "manifest.json"
        _atomic_write(path, (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode())
        return path


def verify_manifest(run_dir: Path) -> bool:
    """Every listed file exists and matches its digest."""
    manifest = json.loads((Path(run_dir) / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        data = (Path(run_dir) / name).read_bytes()
        if hashlib.sha256(data).hexdigest() != digest:
            return False
    return True
