import logging
import re
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Union

from pydantic import BaseModel, ConfigDict, model_validator

from .errors import (
    FaceReuseError,
    GluingSyntaxError,
    IndexRangeError,
    InvalidEdgeError,
    InvolutionError,
    NotCompactError,
    PermutationError,
    TriangulationError,
)

LOG = logging.getLogger(__name__)

# face i is opposite vertex i; a gluing perm sends vertex v to vertex p[v] across the face
Perm = tuple[int, int, int, int]
IDENTITY: Perm = (0, 1, 2, 3)

EDGES: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def invert(perm: Perm) -> Perm:
    inv = [0, 0, 0, 0]
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)


def is_permutation(perm: Iterable[int]) -> bool:
    return sorted(perm) == [0, 1, 2, 3]


class Gluing(NamedTuple):
    tet: int
    face: int
    perm: Perm


class Triangulation(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: int
    gluings: dict[tuple[int, int], Gluing] = {}

    @model_validator(mode="after")
    def check_involution(self) -> "Triangulation":
        if self.size < 0:
            raise IndexRangeError(f"negative tetrahedron count {self.size}")
        for (tet, face), dest in self.gluings.items():
            where = f"gluing of tetrahedron {tet} face {face}"
            _check_gluing(self.size, tet, face, dest.tet, dest.face, dest.perm, where)
            back = self.gluings.get((dest.tet, dest.face))
            if back != Gluing(tet, face, invert(dest.perm)):
                raise InvolutionError(f"{where} has no matching reverse gluing")
        return self

    @classmethod
    def from_pairs(
        cls, size: int, pairs: Iterable[tuple[int, int, int, int, Perm]]
    ) -> "Triangulation":
        gluings: dict[tuple[int, int], Gluing] = {}
        for t1, f1, t2, f2, perm in pairs:
            _add_gluing(gluings, size, t1, f1, t2, f2, tuple(perm), "gluing")
        return cls(size=size, gluings=gluings)

    def orbits(self) -> list[tuple[int, int, int, int, Perm]]:
        return sorted(
            (tet, face, dest.tet, dest.face, dest.perm)
            for (tet, face), dest in self.gluings.items()
            if (tet, face) < (dest.tet, dest.face)
        )

    @property
    def boundary_faces(self) -> list[tuple[int, int]]:
        return [
            (tet, face)
            for tet in range(self.size)
            for face in range(4)
            if (tet, face) not in self.gluings
        ]

    def relabel(
        self, order: list[int], vertices: Optional[list[Perm]] = None
    ) -> "Triangulation":
        """
        Renumber tetrahedra so that tetrahedron ``i`` becomes ``order[i]``,
        and its vertex ``v`` becomes ``vertices[i][v]``
        """
        if sorted(order) != list(range(self.size)):
            raise IndexRangeError(f"{order!r} is not a relabelling of {self.size}")
        vertices = vertices or [IDENTITY] * self.size
        if len(vertices) != self.size or not all(map(is_permutation, vertices)):
            raise PermutationError(f"{vertices!r} are not {self.size} vertex permutations")

        gluings = {}
        for (tet, face), dest in self.gluings.items():
            here, there = vertices[tet], vertices[dest.tet]
            perm = [0, 0, 0, 0]
            for v in range(4):
                perm[here[v]] = there[dest.perm[v]]
            gluings[(order[tet], here[face])] = Gluing(
                order[dest.tet], there[dest.face], tuple(perm)
            )
        return Triangulation(size=self.size, gluings=gluings)


def _check_gluing(
    size: int, t1: int, f1: int, t2: int, f2: int, perm: Perm, where: str
):
    for tet in (t1, t2):
        if not 0 <= tet < size:
            raise IndexRangeError(f"{where}: tetrahedron {tet} out of range 0..{size - 1}")
    for face in (f1, f2):
        if not 0 <= face <= 3:
            raise IndexRangeError(f"{where}: face {face} out of range 0..3")
    if len(perm) != 4 or not is_permutation(perm):
        raise PermutationError(f"{where}: {perm!r} is not a permutation of 0..3")
    if perm[f1] != f2:
        raise PermutationError(f"{where}: permutation sends face {f1} to {perm[f1]}, not {f2}")
    if (t1, f1) == (t2, f2):
        raise InvolutionError(f"{where}: face {f1} of tetrahedron {t1} glued to itself")


def _add_gluing(
    gluings: dict[tuple[int, int], Gluing],
    size: int,
    t1: int,
    f1: int,
    t2: int,
    f2: int,
    perm: Perm,
    where: str,
):
    _check_gluing(size, t1, f1, t2, f2, perm, where)
    forward = Gluing(t2, f2, perm)
    existing = gluings.get((t1, f1))
    if existing is not None:
        if existing == forward:
            return
        if (existing.tet, existing.face) == (t2, f2):
            raise InvolutionError(f"{where}: inconsistent with the reverse gluing")
        raise FaceReuseError(f"{where}: face {f1} of tetrahedron {t1} is already glued")
    if (t2, f2) in gluings:
        raise FaceReuseError(f"{where}: face {f2} of tetrahedron {t2} is already glued")
    gluings[(t1, f1)] = forward
    gluings[(t2, f2)] = Gluing(t1, f1, invert(perm))


TOKEN = re.compile(r":|[^\s:]+")
NUMBER = re.compile(r"\d+")


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in TOKEN.finditer(line)]


def _expect(tokens, index: int, lineno: int, line: str, what: str) -> str:
    if index >= len(tokens):
        raise GluingSyntaxError(f"expected {what}", lineno, len(line) + 1)
    token, column = tokens[index]
    if what == "':'":
        if token != ":":
            raise GluingSyntaxError(f"expected ':' but found {token!r}", lineno, column)
    elif not NUMBER.fullmatch(token):
        raise GluingSyntaxError(f"expected {what} but found {token!r}", lineno, column)
    return token


def _finish(tokens, count: int, lineno: int):
    if len(tokens) > count:
        token, column = tokens[count]
        raise GluingSyntaxError(f"unexpected trailing {token!r}", lineno, column)


def parse_triangulation(text: str) -> Triangulation:
    size: Optional[int] = None
    gluings: dict[tuple[int, int], Gluing] = {}
    lineno = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        tokens = _tokens(line)
        keyword, column = tokens[0]
        if keyword == "tetrahedra":
            if size is not None:
                raise GluingSyntaxError("duplicate 'tetrahedra:' header", lineno, column)
            _expect(tokens, 1, lineno, line, "':'")
            size = int(_expect(tokens, 2, lineno, line, "a tetrahedron count"))
            _finish(tokens, 3, lineno)
        elif keyword == "glue":
            if size is None:
                raise GluingSyntaxError("gluing before 'tetrahedra:' header", lineno, column)
            shape = ["tetrahedron", "face", "':'", "tetrahedron", "face", "':'"]
            shape += ["permutation entry"] * 4
            values = [
                _expect(tokens, i + 1, lineno, line, what)
                for i, what in enumerate(shape)
            ]
            _finish(tokens, len(shape) + 1, lineno)
            t1, f1, _, t2, f2, _, *perm = values
            _add_gluing(
                gluings,
                size,
                int(t1),
                int(f1),
                int(t2),
                int(f2),
                tuple(int(p) for p in perm),
                f"line {lineno}",
            )
        else:
            raise GluingSyntaxError(f"unexpected {keyword!r}", lineno, column)
    if size is None:
        raise GluingSyntaxError("missing 'tetrahedra:' header", max(lineno, 1))
    return Triangulation(size=size, gluings=gluings)


def decode_gluing_file(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        before = data[: e.start]
        line = before.count(b"\n") + 1
        column = e.start - (before.rfind(b"\n") + 1) + 1
        raise GluingSyntaxError(f"byte {data[e.start]:#04x} is not valid UTF-8", line, column) from e


def read_triangulation(path: Union[str, Path]) -> Triangulation:
    return parse_triangulation(decode_gluing_file(Path(path).read_bytes()))


def serialize_triangulation(tri: Triangulation) -> str:
    lines = [f"tetrahedra: {tri.size}"]
    for t1, f1, t2, f2, perm in tri.orbits():
        lines.append(f"glue {t1} {f1} : {t2} {f2} : {' '.join(map(str, perm))}")
    return "\n".join(lines) + "\n"


class EdgeEmbedding(NamedTuple):
    tet: int
    lower: int
    upper: int
    enter: int
    exit: int

    def reversed(self) -> "EdgeEmbedding":
        return self._replace(enter=self.exit, exit=self.enter)


class EdgeClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    embeddings: list[EdgeEmbedding]
    boundary: bool

    @property
    def degree(self) -> int:
        return len(self.embeddings)


# vertex classes count from 1 in first-appearance order, edges and faces from 0
class Skeleton(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: int
    vertex_class: dict[tuple[int, int], int]
    edge_class: dict[tuple[int, tuple[int, int]], int]
    face_class: dict[tuple[int, int], int]
    boundary_faces: list[tuple[int, int]]
    edges: list[EdgeClass]
    vertex_positions: list[tuple[int, ...]]

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_positions)

    @property
    def face_count(self) -> int:
        return len(set(self.face_class.values()))

    @property
    def internal_face_count(self) -> int:
        return self.face_count - len(self.boundary_faces)

    def positions_of(self, vertex: int) -> tuple[int, ...]:
        return self.vertex_positions[vertex - 1]


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}
        self.parity = {x: 0 for x in self.parent}

    def find(self, x) -> tuple[object, int]:
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        acc = 0
        for node in reversed(path):
            acc ^= self.parity[node]
            self.parent[node] = x
            self.parity[node] = acc
        return x, (self.parity[path[0]] if path else 0)

    def union(self, a, b, relation: int = 0) -> bool:
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            return pa ^ pb == relation
        self.parent[rb] = ra
        self.parity[rb] = pa ^ pb ^ relation
        return True


def _number(keys: Iterable, uf: _UnionFind, start: int) -> dict:
    index: dict = {}
    out = {}
    for key in keys:
        root, _ = uf.find(key)
        if root not in index:
            index[root] = start + len(index)
        out[key] = index[root]
    return out


def _walk(tri: Triangulation, start: EdgeEmbedding) -> tuple[list[EdgeEmbedding], bool]:
    walk = [start]
    emb = start
    while True:
        dest = tri.gluings.get((emb.tet, emb.exit))
        if dest is None:
            return walk, False
        p = dest.perm
        lower, upper = p[emb.lower], p[emb.upper]
        emb = EdgeEmbedding(dest.tet, lower, upper, dest.face, 6 - lower - upper - dest.face)
        if (emb.tet, emb.lower, emb.upper) == (start.tet, start.lower, start.upper):
            if emb.enter != start.enter:
                raise InvalidEdgeError(start.tet, start.lower, start.upper)
            return walk, True
        if len(walk) > 6 * tri.size:
            raise TriangulationError(
                f"edge walk from tetrahedron {start.tet} does not close"
            )
        walk.append(emb)


def _edge_cycle(tri: Triangulation, tet: int, lower: int, upper: int) -> EdgeClass:
    c, d = (v for v in range(4) if v not in (lower, upper))
    start = EdgeEmbedding(tet, lower, upper, c, d)
    forward, closed = _walk(tri, start)
    if closed:
        return EdgeClass(embeddings=forward, boundary=False)
    backward, _ = _walk(tri, start.reversed())
    arc = [emb.reversed() for emb in reversed(backward[1:])] + forward
    return EdgeClass(embeddings=arc, boundary=True)


def build_skeleton(tri: Triangulation) -> Skeleton:
    n = tri.size
    corners = [(t, v) for t in range(n) for v in range(4)]
    tet_edges = [(t, e) for t in range(n) for e in EDGES]
    faces = [(t, f) for t in range(n) for f in range(4)]

    vertices = _UnionFind(corners)
    edges = _UnionFind(tet_edges)
    face_uf = _UnionFind(faces)
    for (tet, face), dest in tri.gluings.items():
        p = dest.perm
        face_uf.union((tet, face), (dest.tet, dest.face))
        for v in range(4):
            if v != face:
                vertices.union((tet, v), (dest.tet, p[v]))
        for a, b in EDGES:
            if face in (a, b):
                continue
            image = (min(p[a], p[b]), max(p[a], p[b]))
            if not edges.union((tet, (a, b)), (dest.tet, image), int(p[a] > p[b])):
                raise InvalidEdgeError(tet, a, b)

    vertex_class = _number(corners, vertices, 1)
    edge_class = _number(tet_edges, edges, 0)
    face_class = _number(faces, face_uf, 0)

    first: dict[int, tuple[int, tuple[int, int]]] = {}
    for key, index in edge_class.items():
        first.setdefault(index, key)
    edge_classes = [
        _edge_cycle(tri, tet, a, b) for tet, (a, b) in (first[i] for i in sorted(first))
    ]

    m = max(vertex_class.values(), default=0)
    positions: list[list[int]] = [[] for _ in range(m)]
    for (tet, v), r in vertex_class.items():
        positions[r - 1].append(7 * tet + v)

    LOG.debug(
        "skeleton: %d tetrahedra, %d vertices, %d edges, %d boundary faces",
        n,
        m,
        len(edge_classes),
        len(tri.boundary_faces),
    )
    return Skeleton(
        size=n,
        vertex_class=vertex_class,
        edge_class=edge_class,
        face_class=face_class,
        boundary_faces=tri.boundary_faces,
        edges=edge_classes,
        vertex_positions=[tuple(sorted(p)) for p in positions],
    )


class VertexLinkReport(BaseModel):
    vertex: int
    triangles: int
    euler: int
    boundary: bool

    @property
    def expected_euler(self) -> int:
        return 1 if self.boundary else 2

    @property
    def ok(self) -> bool:
        return self.euler == self.expected_euler


class ValidationReport(BaseModel):
    is_compact: bool
    vertices: list[VertexLinkReport]
    failures: list[str]


def validate_compact(tri: Triangulation, skeleton: Skeleton) -> ValidationReport:
    """
    Assemble every vertex link from corner triangles and check it is a
    2-sphere (closed vertex) or a disc (boundary vertex)
    """
    m = skeleton.vertex_count
    link_vertices = [0] * (m + 1)
    link_edges = [0] * (m + 1)
    link_triangles = [0] * (m + 1)
    boundary = [False] * (m + 1)

    for (tet, v), r in skeleton.vertex_class.items():
        link_triangles[r] += 1

    for edge in skeleton.edges:
        emb = edge.embeddings[0]
        link_vertices[skeleton.vertex_class[(emb.tet, emb.lower)]] += 1
        link_vertices[skeleton.vertex_class[(emb.tet, emb.upper)]] += 1

    seen: set[int] = set()
    for (tet, face), index in skeleton.face_class.items():
        if index in seen:
            continue
        seen.add(index)
        glued = (tet, face) in tri.gluings
        for v in range(4):
            if v == face:
                continue
            r = skeleton.vertex_class[(tet, v)]
            link_edges[r] += 1
            if not glued:
                boundary[r] = True

    reports = []
    failures = []
    for r in range(1, m + 1):
        report = VertexLinkReport(
            vertex=r,
            triangles=link_triangles[r],
            euler=link_vertices[r] - link_edges[r] + link_triangles[r],
            boundary=boundary[r],
        )
        reports.append(report)
        if not report.ok:
            kind = "disc" if report.boundary else "2-sphere"
            failures.append(
                f"vertex {r}: link has Euler characteristic {report.euler}, "
                f"expected {report.expected_euler} for a {kind}"
            )
    for failure in failures:
        LOG.info(failure)
    return ValidationReport(is_compact=not failures, vertices=reports, failures=failures)


def require_compact(tri: Triangulation) -> Skeleton:
    skeleton = build_skeleton(tri)
    report = validate_compact(tri, skeleton)
    if not report.is_compact:
        raise NotCompactError("; ".join(report.failures))
    return skeleton
