"""On-disk corpus format.

A corpus directory holds ``requests.jsonl`` (one provisioning request per
line), ``traces/<disk_id>.csv`` with header ``disk_id,sample_index,kbps`` and,
for generated corpora, ``ground_truth.csv`` with header
``disk_id,label,intensity_kbps``.  Floats are written with ``repr`` so a
write/read round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .generator import Corpus, GroundTruth
from .workload import ApplicationClass, ConfigError, DiskTrace, ProvisioningRequest

REQUESTS_FILE = "requests.jsonl"
TRACES_DIR = "traces"
GROUND_TRUTH_FILE = "ground_truth.csv"
TRACE_HEADER = "disk_id,sample_index,kbps"


class MissingInput(FileNotFoundError):
    """A required input file or directory does not exist."""


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingInput(f"missing input: {path}")
    return path


def write_requests(path: str | os.PathLike, requests) -> None:
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in requests]
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_requests(path: str | os.PathLike) -> list[ProvisioningRequest]:
    out = []
    for n, line in enumerate(_require(Path(path)).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(ProvisioningRequest.from_dict(json.loads(line)))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{n}: bad request record: {exc}") from exc
    return out


def trace_to_csv(trace: DiskTrace) -> str:
    d = trace.disk_id
    body = "".join(f"{d},{i},{float(v)!r}\n" for i, v in enumerate(trace.samples))
    return TRACE_HEADER + "\n" + body


def trace_from_csv(text: str, source: str = "<trace>") -> DiskTrace:
    header, _, body = text.partition("\n")
    if header.strip() != TRACE_HEADER:
        raise ConfigError(f"{source}: expected header {TRACE_HEADER!r}")
    cells = np.array(body.replace("\n", ",").rstrip(",").split(","))
    if cells.size % 3:
        raise ConfigError(f"{source}: ragged trace rows")
    rows = cells.reshape(-1, 3)
    ids = np.unique(rows[:, 0])
    if len(ids) != 1:
        raise ConfigError(f"{source}: one disk per trace file")
    idx = rows[:, 1].astype(np.int64)
    if not np.array_equal(idx, np.arange(len(idx))):
        raise ConfigError(f"{source}: sample_index must run 0..n-1")
    return DiskTrace(int(ids[0]), rows[:, 2].astype(float))


def write_traces(directory: str | os.PathLike, traces) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for tr in traces:
        (d / f"{tr.disk_id}.csv").write_text(trace_to_csv(tr))


def read_traces(directory: str | os.PathLike, disk_ids=None) -> dict[int, DiskTrace]:
    d = _require(Path(directory))
    if disk_ids is None:
        files = sorted(d.glob("*.csv"), key=lambda p: int(p.stem))
    else:
        files = [_require(d / f"{i}.csv") for i in disk_ids]
    out = {}
    for f in files:
        tr = trace_from_csv(f.read_text(), str(f))
        out[tr.disk_id] = tr
    return out


def write_ground_truth(path: str | os.PathLike, gt: GroundTruth) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["disk_id", "label", "intensity_kbps"])
    for disk_id in sorted(gt.labels):
        w.writerow([disk_id, gt.labels[disk_id].value, repr(float(gt.intensities[disk_id]))])
    Path(path).write_text(buf.getvalue())


def read_ground_truth(path: str | os.PathLike) -> GroundTruth:
    rows = list(csv.DictReader(_require(Path(path)).read_text().splitlines()))
    labels = {int(r["disk_id"]): ApplicationClass.from_label(r["label"]) for r in rows}
    intens = {int(r["disk_id"]): float(r["intensity_kbps"]) for r in rows}
    return GroundTruth(labels, intens, {})


def write_corpus(directory: str | os.PathLike, corpus: Corpus,
                 requests: list[ProvisioningRequest] | None = None) -> None:
    """Write a corpus; ``requests`` overrides the stored requests (e.g. noise-injected)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_requests(d / REQUESTS_FILE, corpus.requests if requests is None else requests)
    write_traces(d / TRACES_DIR, [corpus.traces[k] for k in sorted(corpus.traces)])
    write_ground_truth(d / GROUND_TRUTH_FILE, corpus.ground_truth)


def read_corpus(directory: str | os.PathLike, need_ground_truth: bool = False) -> Corpus:
    d = _require(Path(directory))
    requests = read_requests(d / REQUESTS_FILE)
    traces = read_traces(d / TRACES_DIR, [r.request_id for r in requests])
    gt_path = d / GROUND_TRUTH_FILE
    if gt_path.exists():
        gt = read_ground_truth(gt_path)
    elif need_ground_truth:
        raise MissingInput(f"missing input: {gt_path}")
    else:
        gt = GroundTruth({}, {}, {})
    return Corpus(requests, traces, gt)
