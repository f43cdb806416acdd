import logging
import math
import re
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import (
    DimensionError,
    NotAdmissibleError,
    VectorFormatError,
    VertexIndexError,
)
from .triangulation import Skeleton, Triangulation

LOG = logging.getLogger(__name__)

Vector = tuple[int, ...]


class Space(str, Enum):
    STANDARD = "std"
    QUAD = "quad"

    @property
    def width(self) -> int:
        return 7 if self is Space.STANDARD else 3

    @property
    def quad_offset(self) -> int:
        return 4 if self is Space.STANDARD else 0

    def dimension(self, size: int) -> int:
        return self.width * size


class NormalVector(NamedTuple):
    space: Space
    entries: Vector

    @property
    def size(self) -> int:
        return len(self.entries) // self.space.width

    def __str__(self) -> str:
        return " ".join(map(str, self.entries))


AnyVector = Union[NormalVector, Sequence[int]]


def _entries(w: AnyVector) -> Vector:
    if isinstance(w, NormalVector):
        return w.entries
    return tuple(w)


def quad_type(a: int, b: int) -> int:
    """
    The quad type separating vertices ``a, b`` from the other two
    """
    if a == 0:
        return b
    if b == 0:
        return a
    return 6 - a - b


# standard: triangle (t, v) at 7t+v, quad type k (1..3) at 7t+3+k; quad: 3t+k-1
def triangle_position(tet: int, vertex: int) -> int:
    return 7 * tet + vertex


def quad_position(tet: int, kind: int, space: Space = Space.STANDARD) -> int:
    return space.width * tet + space.quad_offset + kind - 1


def quad_positions(space: Space, size: int) -> list[int]:
    return [quad_position(t, k, space) for t in range(size) for k in (1, 2, 3)]


def triangle_positions(size: int) -> list[int]:
    return [triangle_position(t, v) for t in range(size) for v in range(4)]


def quad_groups(space: Space, size: int) -> list[int]:
    first = space.quad_offset
    return [0b111 << (space.width * t + first) for t in range(size)]


def support_mask(entries: Sequence[int]) -> int:
    mask = 0
    for i, x in enumerate(entries):
        if x:
            mask |= 1 << i
    return mask


def compatible_support(support: int, groups: Iterable[int]) -> bool:
    return all((support & group).bit_count() <= 1 for group in groups)


def reduce(entries: Sequence[int]) -> Vector:
    g = math.gcd(*entries)
    if g <= 1:
        return tuple(entries)
    return tuple(x // g for x in entries)


def primitive(w: AnyVector) -> AnyVector:
    if isinstance(w, NormalVector):
        return w._replace(entries=reduce(w.entries))
    return reduce(_entries(w))


def _same_dimension(x: Vector, y: Vector):
    if len(x) != len(y):
        raise DimensionError(f"dimension mismatch: {len(x)} and {len(y)}")


def dominates(x: AnyVector, y: AnyVector) -> bool:
    x, y = _entries(x), _entries(y)
    _same_dimension(x, y)
    return all(b == 0 for a, b in zip(x, y) if a == 0)


def strictly_dominates(x: AnyVector, y: AnyVector) -> bool:
    x, y = _entries(x), _entries(y)
    return dominates(x, y) and any(a != 0 and b == 0 for a, b in zip(x, y))


def satisfies_quad_constraints(w: NormalVector) -> bool:
    return compatible_support(
        support_mask(w.entries), quad_groups(w.space, w.size)
    )


class TriangleLink(NamedTuple):
    """
    One standard matching equation seen from one of its two triangles:
    ``t[here] + q[own_quad] = t[neighbour] + q[neighbour_quad]``
    """

    neighbour: int
    own_quad: int
    neighbour_quad: int
    equation: int


class MatchingSystem(BaseModel):
    model_config = ConfigDict(frozen=True)

    space: Space
    size: int
    equations: list[Vector]
    links: dict[int, list[TriangleLink]] = {}

    @model_validator(mode="after")
    def check_rows(self) -> "MatchingSystem":
        for row in self.equations:
            if len(row) != self.dimension:
                raise DimensionError(
                    f"equation of length {len(row)} in a system of dimension {self.dimension}"
                )
        return self

    @property
    def dimension(self) -> int:
        return self.space.dimension(self.size)

    @property
    def quad_positions(self) -> list[int]:
        return quad_positions(self.space, self.size)

    @property
    def triangle_positions(self) -> list[int]:
        if self.space is Space.QUAD:
            return []
        return triangle_positions(self.size)

    def residual(self, entries: Sequence[int]) -> Optional[int]:
        for index, row in enumerate(self.equations):
            if sum(a * x for a, x in zip(row, entries) if a):
                return index
        return None


def standard_matching_system(tri: Triangulation, skeleton: Skeleton) -> MatchingSystem:
    dim = 7 * tri.size
    equations = []
    links: dict[int, list[TriangleLink]] = {}
    for tet, face, other, other_face, perm in tri.orbits():
        corners = [v for v in range(4) if v != face]
        for x in corners:
            a, b = (v for v in corners if v != x)
            row = [0] * dim
            here = triangle_position(tet, x)
            there = triangle_position(other, perm[x])
            own_quad = quad_position(tet, quad_type(a, b))
            far_quad = quad_position(other, quad_type(perm[a], perm[b]))
            row[here] += 1
            row[own_quad] += 1
            row[there] -= 1
            row[far_quad] -= 1
            index = len(equations)
            equations.append(tuple(row))
            links.setdefault(here, []).append(TriangleLink(there, own_quad, far_quad, index))
            links.setdefault(there, []).append(TriangleLink(here, far_quad, own_quad, index))
    LOG.debug("standard system: %d equations in dimension %d", len(equations), dim)
    return MatchingSystem(
        space=Space.STANDARD, size=tri.size, equations=equations, links=links
    )


def quad_matching_system(tri: Triangulation, skeleton: Skeleton) -> MatchingSystem:
    dim = 3 * tri.size
    equations = []
    for edge in skeleton.edges:
        if edge.boundary:
            continue
        row = [0] * dim
        for emb in edge.embeddings:
            up = quad_type(emb.lower, emb.exit)
            down = quad_type(emb.lower, emb.enter)
            row[quad_position(emb.tet, up, Space.QUAD)] += 1
            row[quad_position(emb.tet, down, Space.QUAD)] -= 1
        equations.append(tuple(row))
    LOG.debug("quad system: %d equations in dimension %d", len(equations), dim)
    return MatchingSystem(space=Space.QUAD, size=tri.size, equations=equations)


def is_admissible(w: NormalVector, system: MatchingSystem) -> bool:
    if w.space is not system.space or len(w.entries) != system.dimension:
        raise DimensionError(
            f"{w.space.value} vector of length {len(w.entries)} does not fit "
            f"a {system.space.value} system of dimension {system.dimension}"
        )
    return (
        all(x >= 0 for x in w.entries)
        and system.residual(w.entries) is None
        and satisfies_quad_constraints(w)
    )


def _vertex_range(skeleton: Skeleton, vertex: int, low: int = 1):
    if not low <= vertex <= skeleton.vertex_count:
        raise VertexIndexError(
            f"vertex class {vertex} out of range {low}..{skeleton.vertex_count}"
        )


def vertex_link(skeleton: Skeleton, vertex: int) -> NormalVector:
    _vertex_range(skeleton, vertex)
    entries = [0] * (7 * skeleton.size)
    for p in skeleton.positions_of(vertex):
        entries[p] = 1
    return NormalVector(Space.STANDARD, tuple(entries))


def vertex_links(skeleton: Skeleton) -> list[NormalVector]:
    return [vertex_link(skeleton, r) for r in range(1, skeleton.vertex_count + 1)]


def _require_space(w: NormalVector, space: Space):
    if w.space is not space:
        raise DimensionError(f"expected a {space.value} vector, got {w.space.value}")


def project_entries(entries: Sequence[int]) -> Vector:
    return tuple(entries[7 * t + 4 + k] for t in range(len(entries) // 7) for k in range(3))


def project(w: NormalVector) -> NormalVector:
    _require_space(w, Space.STANDARD)
    return NormalVector(Space.QUAD, reduce(project_entries(w.entries)))


def canonical_extension(
    w: NormalVector,
    system: MatchingSystem,
    skeleton: Skeleton,
    seeds: Optional[Mapping[int, int]] = None,
) -> NormalVector:
    """
    Extend an admissible quad vector to the unique canonical standard vector
    projecting onto it.

    Triangle coordinates are filled in by a depth-first search over the
    triangle types around each vertex class, starting from a seed triangle
    set to zero (``seeds`` maps a vertex class to its seed position), and
    the resulting minimum around the vertex is subtracted.
    """
    _require_space(w, Space.QUAD)
    if system.space is not Space.STANDARD or w.size != system.size:
        raise DimensionError(
            f"quad vector for {w.size} tetrahedra does not fit a "
            f"{system.space.value} system for {system.size}"
        )
    for p, x in enumerate(w.entries):
        if x < 0:
            raise NotAdmissibleError(f"negative entry {x} at position {p}", position=p)
    if not satisfies_quad_constraints(w):
        raise NotAdmissibleError("quadrilateral constraints violated")

    entries = [0] * system.dimension
    for t in range(system.size):
        for k in range(3):
            entries[7 * t + 4 + k] = w.entries[3 * t + k]

    seeds = seeds or {}
    for vertex in range(1, skeleton.vertex_count + 1):
        positions = skeleton.positions_of(vertex)
        start = seeds.get(vertex, positions[0])
        if start not in positions:
            raise VertexIndexError(f"seed {start} does not surround vertex class {vertex}")
        values = {start: 0}
        stack = [start]
        while stack:
            here = stack.pop()
            for link in system.links.get(here, ()):
                value = values[here] + entries[link.own_quad] - entries[link.neighbour_quad]
                seen = values.get(link.neighbour)
                if seen is None:
                    values[link.neighbour] = value
                    stack.append(link.neighbour)
                elif seen != value:
                    raise NotAdmissibleError(
                        f"quad vector fails standard matching equation {link.equation}",
                        equation=link.equation,
                    )
        low = min(values.values())
        for p in positions:
            entries[p] = values[p] - low
    return NormalVector(Space.STANDARD, reduce(entries))


def _subtract_links(entries: list[int], skeleton: Skeleton, vertices: Iterable[int]):
    for vertex in vertices:
        positions = skeleton.positions_of(vertex)
        low = min(entries[p] for p in positions)
        for p in positions:
            entries[p] -= low


def canonical_part(w: NormalVector, skeleton: Skeleton) -> NormalVector:
    _require_space(w, Space.STANDARD)
    entries = list(w.entries)
    _subtract_links(entries, skeleton, range(1, skeleton.vertex_count + 1))
    return w._replace(entries=tuple(entries))


def partial_canonical_part(w: NormalVector, vertex: int, skeleton: Skeleton) -> NormalVector:
    _require_space(w, Space.STANDARD)
    _vertex_range(skeleton, vertex)
    entries = list(w.entries)
    _subtract_links(entries, skeleton, (vertex,))
    return w._replace(entries=tuple(entries))


def truncate(w: NormalVector, i: int, skeleton: Skeleton) -> NormalVector:
    _require_space(w, Space.STANDARD)
    _vertex_range(skeleton, i, low=0)
    entries = list(w.entries)
    for vertex in range(i + 1, skeleton.vertex_count + 1):
        for p in skeleton.positions_of(vertex):
            entries[p] = 0
    return w._replace(entries=tuple(entries))


class SolutionSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    space: Space
    size: int
    rays: tuple[Vector, ...] = ()

    @field_validator("rays")
    @classmethod
    def canonical_rays(cls, rays: tuple[Vector, ...]) -> tuple[Vector, ...]:
        return tuple(sorted({reduce(r) for r in rays if any(r)}))

    @model_validator(mode="after")
    def check_dimension(self) -> "SolutionSet":
        for ray in self.rays:
            if len(ray) != self.dimension:
                raise DimensionError(
                    f"ray of length {len(ray)} in a {self.space.value} set "
                    f"of dimension {self.dimension}"
                )
        return self

    @property
    def dimension(self) -> int:
        return self.space.dimension(self.size)

    def __len__(self) -> int:
        return len(self.rays)

    def __contains__(self, w: AnyVector) -> bool:
        return reduce(_entries(w)) in self.rays

    def vectors(self) -> list[NormalVector]:
        return [NormalVector(self.space, r) for r in self.rays]

    def check(self, system: MatchingSystem):
        for index, ray in enumerate(self.rays):
            if not is_admissible(NormalVector(self.space, ray), system):
                raise NotAdmissibleError(f"ray {index} is not admissible: {' '.join(map(str, ray))}")


HEADER = re.compile(r"(coords|tets)\s*:\s*(\S+)\s*$")


def format_solution_set(solutions: SolutionSet) -> str:
    lines = [f"coords: {solutions.space.value}", f"tets: {solutions.size}"]
    lines += [" ".join(map(str, ray)) for ray in solutions.rays]
    return "\n".join(lines) + "\n"


def parse_solution_set(text: str) -> SolutionSet:
    header: dict[str, str] = {}
    rays: list[Vector] = []
    dimension = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        match = HEADER.match(stripped)
        if match:
            key, value = match.groups()
            if rays or key in header:
                raise VectorFormatError(f"unexpected '{key}:' header", lineno)
            header[key] = value
            continue
        if dimension is None:
            space, size = _read_header(header, lineno)
            dimension = space.dimension(size)
        try:
            ray = tuple(int(token) for token in stripped.split())
        except ValueError:
            raise VectorFormatError("expected integers", lineno)
        if len(ray) != dimension:
            raise VectorFormatError(f"expected {dimension} entries, found {len(ray)}", lineno)
        rays.append(ray)
    space, size = _read_header(header, 1)
    return SolutionSet(space=space, size=size, rays=tuple(rays))


def _read_header(header: dict[str, str], lineno: int) -> tuple[Space, int]:
    if "coords" not in header or "tets" not in header:
        raise VectorFormatError("missing 'coords:' or 'tets:' header", lineno)
    try:
        space = Space(header["coords"])
    except ValueError:
        raise VectorFormatError(f"unknown coordinates {header['coords']!r}", lineno)
    if not header["tets"].isdigit():
        raise VectorFormatError(f"bad tetrahedron count {header['tets']!r}", lineno)
    return space, int(header["tets"])


def read_solution_set(path: Union[str, Path]) -> SolutionSet:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise VectorFormatError("file is not valid UTF-8", data[: e.start].count(b"\n") + 1) from e
    return parse_solution_set(text)
