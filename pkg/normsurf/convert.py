import csv
import logging
import time
from typing import IO, Iterable, Mapping, NamedTuple, Optional, Sequence

from pydantic import BaseModel

from .coords import (
    MatchingSystem,
    NormalVector,
    SolutionSet,
    Space,
    Vector,
    canonical_extension,
    compatible_support,
    project_entries,
    quad_groups,
    quad_matching_system,
    quad_positions,
    reduce,
    standard_matching_system,
    support_mask,
)
from .deadline import NEVER, Deadline
from .enumeration import DoubleDescription, adjacent
from .errors import DimensionError, InvariantViolation
from .triangulation import Skeleton, Triangulation, require_compact

LOG = logging.getLogger(__name__)

TRACE_COLUMNS = ("stage", "vertex", "position", "listSize", "peak", "micros")


class TraceRow(NamedTuple):
    stage: str
    vertex: int
    position: Optional[int]
    size: int
    peak: int
    micros: int


class ConversionTrace(BaseModel):
    rows: list[TraceRow] = []
    stage_sizes: list[int] = []
    stage_secs: list[float] = []
    peak: int = 0

    @property
    def final(self) -> int:
        return self.stage_sizes[-1] if self.stage_sizes else 0

    @property
    def ratio(self) -> Optional[float]:
        if not self.final:
            return None
        return self.peak / self.final

    def write_csv(self, stream: IO[str]):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in self.rows:
            writer.writerow(
                ["" if value is None else value for value in row]
            )


class PositionSet:
    def __init__(self, size: int):
        self.mask = 0
        for p in quad_positions(Space.STANDARD, size):
            self.mask |= 1 << p

    def add(self, position: int):
        self.mask |= 1 << position

    def __contains__(self, position: int) -> bool:
        return bool(self.mask >> position & 1)

    def __iter__(self):
        mask, p = self.mask, 0
        while mask:
            if mask & 1:
                yield p
            mask >>= 1
            p += 1

    def with_position(self, position: int) -> int:
        return self.mask | 1 << position


def std_to_quad(std_set: SolutionSet) -> SolutionSet:
    if std_set.space is not Space.STANDARD:
        raise DimensionError(f"expected a standard solution set, got {std_set.space.value}")
    projected = [reduce(project_entries(ray)) for ray in std_set.rays]
    projected = [q for q in projected if any(q)]
    supports = [support_mask(q) for q in projected]
    kept = [
        q
        for i, q in enumerate(projected)
        if not any(j != i and s & ~supports[i] == 0 for j, s in enumerate(supports))
    ]
    LOG.info("std to quad: %d rays, %d projections, %d kept", len(std_set), len(projected), len(kept))
    return SolutionSet(space=Space.QUAD, size=std_set.size, rays=tuple(kept))


def compatible_pair(u: NormalVector, w: NormalVector) -> bool:
    if u.space is not w.space or len(u.entries) != len(w.entries):
        raise DimensionError("vectors of different dimension")
    return compatible_support(
        support_mask(u.entries) | support_mask(w.entries), quad_groups(u.space, u.size)
    )


def adjacency_witness_test(
    u: Sequence[int],
    w: Sequence[int],
    working: Iterable[Sequence[int]],
    positions: Iterable[int],
) -> bool:
    """
    True when no vector of ``working`` other than ``u`` and ``w`` vanishes at
    every position of ``positions`` where both ``u`` and ``w`` vanish
    """
    u, w = tuple(u), tuple(w)
    common = [i for i in positions if u[i] == 0 and w[i] == 0]
    for z in working:
        z = tuple(z)
        if z == u or z == w:
            continue
        if all(z[i] == 0 for i in common):
            return False
    return True


def _dedupe(vectors: Iterable[Vector]) -> list[Vector]:
    return sorted(set(vectors))


class _Tracer:
    def __init__(self):
        self.trace = ConversionTrace()
        self.__last = time.perf_counter_ns()

    def record(self, stage: str, vertex: int, position: Optional[int], size: int):
        now = time.perf_counter_ns()
        self.trace.peak = max(self.trace.peak, size)
        self.trace.rows.append(
            TraceRow(stage, vertex, position, size, self.trace.peak, (now - self.__last) // 1000)
        )
        self.__last = now


def _check_working_list(
    working: list[Vector],
    system: MatchingSystem,
    groups: list[int],
    vertex_positions: Sequence[int],
    vertex: int,
):
    for x in working:
        equation = system.residual(x)
        if equation is not None:
            raise InvariantViolation(
                f"vertex {vertex}: working vector breaks matching equation {equation}"
            )
        if not compatible_support(support_mask(x), groups):
            raise InvariantViolation(
                f"vertex {vertex}: working vector breaks the quadrilateral constraints"
            )
        if all(x[p] > 0 for p in vertex_positions):
            raise InvariantViolation(
                f"vertex {vertex}: working vector is positive on every triangle around the vertex"
            )


def quad_to_std(
    quad_set: SolutionSet,
    skeleton: Skeleton,
    system: MatchingSystem,
    *,
    deadline: Deadline = NEVER,
    check_invariants: bool = False,
    vertex_order: Optional[Sequence[int]] = None,
    position_orders: Optional[Mapping[int, Sequence[int]]] = None,
) -> tuple[SolutionSet, ConversionTrace]:
    """
    Compute the standard solution set from the quadrilateral solution set.

    Starting from the canonical extensions of the quad rays, each vertex
    class in turn has its partial canonical part taken, its negative link
    inserted, and one double description step run per triangle position
    around it (restricted to pairs that satisfy the quadrilateral
    constraints together), before the positive link is added back.

    ``vertex_order`` and ``position_orders`` override the default ascending
    processing orders; the resulting set does not depend on them.
    """
    if quad_set.space is not Space.QUAD or system.space is not Space.STANDARD:
        raise DimensionError("quad_to_std needs a quad set and a standard system")
    if quad_set.size != system.size:
        raise DimensionError(
            f"quad set for {quad_set.size} tetrahedra, system for {system.size}"
        )
    n = system.size
    groups = quad_groups(Space.STANDARD, n)
    full = (1 << 7 * n) - 1
    tracer = _Tracer()

    working = _dedupe(
        canonical_extension(q, system, skeleton).entries for q in quad_set.vectors()
    )
    tracer.record("extend", 0, None, len(working))
    tracer.trace.stage_sizes.append(len(working))
    processed = PositionSet(n)

    vertices = vertex_order or range(1, skeleton.vertex_count + 1)
    if sorted(vertices) != list(range(1, skeleton.vertex_count + 1)):
        raise ValueError(f"{list(vertices)!r} is not an order of the vertex classes")
    for vertex in vertices:
        started = time.perf_counter()
        around = skeleton.positions_of(vertex)
        positions = (position_orders or {}).get(vertex, around)
        if sorted(positions) != list(around):
            raise ValueError(f"{list(positions)!r} is not an order of the triangles around {vertex}")

        seeded = []
        for x in working:
            low = min(x[p] for p in around)
            if low:
                x = list(x)
                for p in around:
                    x[p] -= low
            if any(x):
                seeded.append(reduce(x))
        link = [0] * (7 * n)
        for p in around:
            link[p] = 1
        seeded.append(tuple(-x for x in link))
        working = _dedupe(seeded)
        tracer.record("seed", vertex, None, len(working))

        for p in positions:
            deadline.check()
            supports = [support_mask(x) for x in working]
            zeros = [s ^ full for s in supports]
            within = processed.with_position(p)
            positive = [i for i, x in enumerate(working) if x[p] > 0]
            below = [i for i, x in enumerate(working) if x[p] < 0]
            result = [x for x in working if x[p] >= 0]
            for i in positive:
                deadline.check()
                u = working[i]
                for j in below:
                    if not compatible_support(supports[i] | supports[j], groups):
                        continue
                    if not adjacent(zeros, i, j, within):
                        continue
                    w = working[j]
                    result.append(reduce([u[p] * b - w[p] * a for a, b in zip(u, w)]))
            working = _dedupe(result)
            processed.add(p)
            tracer.record("position", vertex, p, len(working))
            if check_invariants:
                _check_working_list(working, system, groups, around, vertex)

        working = _dedupe(working + [tuple(link)])
        tracer.record("link", vertex, None, len(working))
        tracer.trace.stage_sizes.append(len(working))
        tracer.trace.stage_secs.append(time.perf_counter() - started)
        LOG.debug("vertex %d: %d vectors, peak %d", vertex, len(working), tracer.trace.peak)

    result = SolutionSet(space=Space.STANDARD, size=n, rays=tuple(working))
    LOG.info(
        "quad to std: %d quad rays, %d standard rays, peak list %d",
        len(quad_set),
        len(result),
        tracer.trace.peak,
    )
    return result, tracer.trace


def enumerate_std_via_quad(
    tri: Triangulation,
    *,
    deadline: Deadline = NEVER,
    check_invariants: bool = False,
) -> tuple[SolutionSet, ConversionTrace]:
    skeleton = require_compact(tri)
    quad_set = DoubleDescription(quad_matching_system(tri, skeleton), deadline=deadline).run()
    return quad_to_std(
        quad_set,
        skeleton,
        standard_matching_system(tri, skeleton),
        deadline=deadline,
        check_invariants=check_invariants,
    )
