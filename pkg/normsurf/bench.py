import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import IO, Callable, Iterable, Optional

import numpy as np
from pydantic import BaseModel

from . import deadline, model
from .config import Settings
from .convert import quad_to_std
from .coords import quad_matching_system, standard_matching_system
from .enumeration import DoubleDescription
from .errors import EnumerationTimeout, NormalSurfaceError
from .triangulation import read_triangulation, require_compact

LOG = logging.getLogger(__name__)

CSV_VERSION = 1
CORPUS_PATTERN = "*.tri"

OK = "ok"
CENSORED = "censored"
FAILED = "failed"
MISMATCH = "mismatch"


class BenchRecord(BaseModel):
    input_name: str
    n: int = 0
    quad_size: Optional[int] = None
    std_size: Optional[int] = None
    direct_secs: Optional[float] = None
    quad_secs: Optional[float] = None
    conversion_secs: Optional[float] = None
    pipeline_secs: Optional[float] = None
    speedup: Optional[float] = None
    direct_ratio: Optional[float] = None
    quad_ratio: Optional[float] = None
    conversion_ratio: Optional[float] = None
    status: str = OK
    error: Optional[str] = None

    def to_model(self) -> model.BenchResult:
        return model.BenchResult(**self.model_dump())


COLUMNS = tuple(BenchRecord.model_fields)


def _timed(func: Callable):
    started = time.perf_counter()
    result = func()
    return result, time.perf_counter() - started


def run_input(
    path: Path, timeout_secs: Optional[float], check_invariants: bool = False
) -> BenchRecord:
    record = BenchRecord(input_name=Path(path).name)
    try:
        tri = read_triangulation(path)
        record.n = tri.size
        skeleton = require_compact(tri)
        std_system = standard_matching_system(tri, skeleton)
        quad_system = quad_matching_system(tri, skeleton)
    except NormalSurfaceError as e:
        record.status, record.error = FAILED, e.format_message()
        return record
    except OSError as e:
        record.status, record.error = FAILED, str(e)
        return record

    direct = None
    try:
        dd = DoubleDescription(std_system, deadline=deadline.of(timeout_secs))
        direct, record.direct_secs = _timed(dd.run)
        record.direct_ratio = dd.ratio
        record.std_size = len(direct)
    except EnumerationTimeout as e:
        record.status, record.error = CENSORED, f"direct: {e.format_message()}"
    except Exception as e:
        LOG.exception("direct enumeration of %s failed", record.input_name)
        record.status, record.error = FAILED, f"direct: {e}"
        return record

    try:
        limit = deadline.of(timeout_secs)
        qdd = DoubleDescription(quad_system, deadline=limit)
        quad_set, record.quad_secs = _timed(qdd.run)
        record.quad_ratio = qdd.ratio
        record.quad_size = len(quad_set)
        (converted, trace), record.conversion_secs = _timed(
            lambda: quad_to_std(
                quad_set,
                skeleton,
                std_system,
                deadline=limit,
                check_invariants=check_invariants,
            )
        )
    except EnumerationTimeout as e:
        record.status = CENSORED
        record.error = "; ".join(filter(None, [record.error, f"pipeline: {e.format_message()}"]))
        return record
    except Exception as e:
        LOG.exception("pipeline for %s failed", record.input_name)
        record.status, record.error = FAILED, f"pipeline: {e}"
        return record

    record.pipeline_secs = record.quad_secs + record.conversion_secs
    record.conversion_ratio = trace.ratio
    record.std_size = len(converted)
    if direct is None:
        return record
    if direct != converted:
        record.status = MISMATCH
        record.error = f"direct found {len(direct)} rays, pipeline {len(converted)}"
    elif record.pipeline_secs > 0:
        record.speedup = record.direct_secs / record.pipeline_secs
    return record


def corpus_files(corpus: Path) -> list[Path]:
    return sorted(p for p in Path(corpus).glob(CORPUS_PATTERN) if p.is_file())


def run_bench(
    files: Iterable[Path],
    settings: Settings,
    *,
    jobs: int = 1,
    check_invariants: bool = False,
    on_done: Optional[Callable[[BenchRecord], None]] = None,
) -> list[BenchRecord]:
    files = list(files)
    timeout = settings.timeout_secs
    records: list[BenchRecord] = []
    if jobs <= 1:
        for path in files:
            record = run_input(path, timeout, check_invariants)
            records.append(record)
            if on_done:
                on_done(record)
        return records

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_input, path, timeout, check_invariants) for path in files]
        for path, future in zip(files, futures):
            try:
                record = future.result()
            except Exception as e:
                record = BenchRecord(input_name=path.name, status=FAILED, error=str(e))
            records.append(record)
            if on_done:
                on_done(record)
    return records


def write_csv(records: Iterable[BenchRecord], stream: IO[str]):
    stream.write(f"# normsurf bench v{CSV_VERSION}: {','.join(COLUMNS)}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for record in records:
        row = record.model_dump()
        writer.writerow(
            [
                f"{v:.6f}" if isinstance(v, float) else "" if v is None else v
                for v in (row[c] for c in COLUMNS)
            ]
        )


class BenchSummary(BaseModel):
    warnings: list[str] = []
    failures: list[str] = []
    slope: Optional[float] = None
    largest: Optional[str] = None
    largest_speedup: Optional[float] = None


def summarize(records: list[BenchRecord], settings: Settings) -> BenchSummary:
    summary = BenchSummary()
    for record in records:
        ratio = record.conversion_ratio
        if ratio is None:
            continue
        message = f"{record.input_name}: conversion list ratio {ratio:.2f}"
        if ratio > settings.ratio_fail:
            summary.failures.append(message)
            LOG.error("%s exceeds %.2f", message, settings.ratio_fail)
        elif ratio > settings.ratio_warn:
            summary.warnings.append(message)
            LOG.warning("%s exceeds %.2f", message, settings.ratio_warn)

    points = [
        (r.std_size, r.conversion_secs)
        for r in records
        if r.std_size and r.conversion_secs and r.conversion_secs >= settings.regression_min_secs
    ]
    if len({size for size, _ in points}) >= 2:
        sizes, secs = np.log(np.array(points, dtype=float)).T
        summary.slope = float(np.polyfit(sizes, secs, 1)[0])

    completed = [r for r in records if r.status == OK]
    if completed:
        largest = max(completed, key=lambda r: (r.n, r.std_size or 0))
        summary.largest = largest.input_name
        summary.largest_speedup = largest.speedup
    return summary


def to_run(corpus: Path, settings: Settings, jobs: int, records: list[BenchRecord]) -> model.BenchRun:
    return model.BenchRun(
        started=datetime.now(),
        corpus=str(corpus),
        timeout_secs=settings.timeout_secs,
        jobs=jobs,
        results=[r.to_model() for r in records],
    )
