import random
from collections import defaultdict

import pytest

from conftest import (
    ALL_CORPUS_FILES,
    CORPUS,
    RANDOM_THREE_TET,
    TWO_TET_CATALOG,
    TWO_TET_SAMPLE,
    VALID_ONE_TET,
    canonical_key,
    corpus_params,
    doubled_chain,
    is_valid,
    load,
    one_tet_catalog,
)
from normsurf.errors import (
    FaceReuseError,
    GluingSyntaxError,
    IndexRangeError,
    InvalidEdgeError,
    InvolutionError,
    NotCompactError,
    PermutationError,
)
from normsurf.triangulation import (
    EDGES,
    IDENTITY,
    Gluing,
    Triangulation,
    build_skeleton,
    invert,
    parse_triangulation,
    read_triangulation,
    require_compact,
    serialize_triangulation,
    validate_compact,
)


def test_parse_one_tet_closed():
    tri = load("one_tet_closed.tri")
    assert tri.size == 1
    assert tri.orbits() == [(0, 0, 0, 1, (1, 2, 3, 0)), (0, 2, 0, 3, (0, 1, 3, 2))]
    assert tri.boundary_faces == []
    assert tri.gluings[(0, 1)] == Gluing(0, 0, invert((1, 2, 3, 0)))


def test_parse_ignores_comments_and_blank_lines():
    tri = parse_triangulation("% a comment\n\ntetrahedra: 2\n\n% nothing glued\n")
    assert tri.size == 2
    assert len(tri.boundary_faces) == 8


@pytest.mark.parametrize("path", corpus_params())
def test_serialize_round_trip(path):
    tri = parse_triangulation(path.read_text())
    assert parse_triangulation(serialize_triangulation(tri)) == tri


def test_serialize_empty():
    assert serialize_triangulation(Triangulation(size=0)) == "tetrahedra: 0\n"


def test_repeated_listing_is_accepted():
    text = "tetrahedra: 1\nglue 0 0 : 0 1 : 1 2 3 0\nglue 0 1 : 0 0 : 3 0 1 2\n"
    assert len(parse_triangulation(text).orbits()) == 1


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("glue 0 0 : 0 1 : 1 2 3 0\n", 1, 1),
        ("tetrahedra: 1\nglue 0 x : 0 1 : 1 2 3 0\n", 2, 8),
        ("tetrahedra: 1\nglue 0 0 : 0 1 : 1 2 3\n", 2, 23),
        ("tetrahedra: 1\nglue 0 0 0 1 : 1 2 3 0\n", 2, 10),
        ("tetrahedra 1\n", 1, 12),
        ("tetrahedra: 1\ntetrahedra: 1\n", 2, 1),
        ("tetrahedra: 1\nfold 0 0\n", 2, 1),
        ("% only a comment\n", 1, 1),
    ],
)
def test_syntax_errors(text, line, column):
    with pytest.raises(GluingSyntaxError) as info:
        parse_triangulation(text)
    assert info.value.line == line
    assert info.value.column == column
    assert info.value.exit_code == 1


def test_read_triangulation(tmp_path):
    path = tmp_path / "s3.tri"
    path.write_bytes((CORPUS / "s3_double.tri").read_bytes())
    assert read_triangulation(path) == load("s3_double.tri")


def test_undecodable_bytes_are_a_syntax_error(tmp_path):
    path = tmp_path / "bad.tri"
    path.write_bytes(b"tetrahedra: 1\nglue 0 0 : 0 1 : 1 2 3 \xff\n")
    with pytest.raises(GluingSyntaxError) as info:
        read_triangulation(path)
    assert (info.value.line, info.value.column) == (2, 24)
    assert "0xff" in info.value.format_message()

    path.write_bytes(b"\xff\xfe")
    with pytest.raises(GluingSyntaxError) as info:
        read_triangulation(path)
    assert (info.value.line, info.value.column) == (1, 1)


@pytest.mark.parametrize(
    "gluing, error",
    [
        ("glue 0 0 : 1 0 : 0 1 2 3", IndexRangeError),
        ("glue 0 4 : 0 1 : 1 2 3 0", IndexRangeError),
        ("glue 0 0 : 0 1 : 0 1 2 3", PermutationError),
        ("glue 0 0 : 0 1 : 1 1 2 3", PermutationError),
        ("glue 0 0 : 0 0 : 0 1 2 3", InvolutionError),
    ],
)
def test_gluing_errors(gluing, error):
    with pytest.raises(error):
        parse_triangulation(f"tetrahedra: 1\n{gluing}\n")


def test_face_reuse():
    with pytest.raises(FaceReuseError):
        parse_triangulation(
            "tetrahedra: 1\nglue 0 0 : 0 1 : 1 2 3 0\nglue 0 0 : 0 2 : 2 1 0 3\n"
        )
    with pytest.raises(FaceReuseError):
        parse_triangulation(
            "tetrahedra: 1\nglue 0 0 : 0 1 : 1 2 3 0\nglue 0 2 : 0 1 : 0 2 1 3\n"
        )


def test_inconsistent_reverse_listing():
    with pytest.raises(InvolutionError):
        parse_triangulation(
            "tetrahedra: 1\nglue 0 0 : 0 1 : 1 2 3 0\nglue 0 1 : 0 0 : 1 0 2 3\n"
        )


def test_model_requires_reverse_gluing():
    with pytest.raises(InvolutionError):
        Triangulation(size=1, gluings={(0, 0): Gluing(0, 1, (1, 2, 3, 0))})


def test_relabel():
    tri = load("two_tet_one_vertex.tri")
    swapped = tri.relabel([1, 0])
    assert swapped.relabel([1, 0]) == tri
    assert (1, 0) in swapped.gluings
    assert swapped.gluings[(1, 0)] == Gluing(1, 1, (1, 2, 3, 0))
    degrees = sorted(e.degree for e in build_skeleton(tri).edges)
    assert sorted(e.degree for e in build_skeleton(swapped).edges) == degrees
    with pytest.raises(IndexRangeError):
        tri.relabel([0, 0])


def test_relabel_vertices():
    tri = load("two_tet_one_vertex.tri")
    vertices = [(1, 0, 2, 3), (3, 2, 1, 0)]
    moved = tri.relabel([1, 0], vertices)
    for (tet, face), dest in tri.gluings.items():
        here, there = vertices[tet], vertices[dest.tet]
        image = moved.gluings[(1 - tet, here[face])]
        assert image.tet == 1 - dest.tet
        assert image.face == there[dest.face]
        for v in range(4):
            assert image.perm[here[v]] == there[dest.perm[v]]
    back = moved.relabel([1, 0], [invert(vertices[1]), invert(vertices[0])])
    assert back == tri
    with pytest.raises(PermutationError):
        tri.relabel([0, 1], [IDENTITY])
    with pytest.raises(PermutationError):
        tri.relabel([0, 1], [IDENTITY, (0, 0, 1, 2)])


def test_skeleton_one_tet_closed():
    skeleton = build_skeleton(load("one_tet_closed.tri"))
    assert skeleton.vertex_count == 1
    assert skeleton.vertex_positions == [(0, 1, 2, 3)]
    assert sorted(e.degree for e in skeleton.edges) == [1, 5]
    assert not any(e.boundary for e in skeleton.edges)
    assert skeleton.face_count == 2
    assert skeleton.internal_face_count == 2


def test_skeleton_single_tet():
    skeleton = build_skeleton(load("single_tet.tri"))
    assert skeleton.vertex_count == 4
    assert skeleton.vertex_positions == [(0,), (1,), (2,), (3,)]
    assert len(skeleton.edges) == 6
    assert all(e.boundary and e.degree == 1 for e in skeleton.edges)
    assert skeleton.internal_face_count == 0


def test_skeleton_s3_double():
    skeleton = build_skeleton(load("s3_double.tri"))
    assert skeleton.vertex_count == 4
    assert skeleton.vertex_positions == [(0, 7), (1, 8), (2, 9), (3, 10)]
    assert [e.degree for e in skeleton.edges] == [2] * 6
    assert skeleton.internal_face_count == 4


def test_edge_cycles_walk_through_gluings():
    tri = load("two_tet_one_vertex.tri")
    skeleton = build_skeleton(tri)
    assert sorted(e.degree for e in skeleton.edges) == [2, 4, 6]
    for edge in skeleton.edges:
        cycle = edge.embeddings
        for here, there in zip(cycle, cycle[1:] + cycle[:1]):
            dest = tri.gluings[(here.tet, here.exit)]
            assert dest.tet == there.tet
            assert dest.face == there.enter
            assert dest.perm[here.lower] == there.lower
            assert dest.perm[here.upper] == there.upper


def test_boundary_edge_arc_starts_and_ends_on_boundary():
    tri = Triangulation.from_pairs(2, [(0, 0, 1, 3, (3, 1, 2, 0))])
    skeleton = build_skeleton(tri)
    assert sorted(e.degree for e in skeleton.edges) == [1] * 6 + [2] * 3
    boundary = set(tri.boundary_faces)
    for edge in skeleton.edges:
        assert edge.boundary
        assert (edge.embeddings[0].tet, edge.embeddings[0].enter) in boundary
        assert (edge.embeddings[-1].tet, edge.embeddings[-1].exit) in boundary


@pytest.mark.parametrize("tri", VALID_ONE_TET + TWO_TET_SAMPLE + RANDOM_THREE_TET + [doubled_chain(3)])
def test_degrees_sum_to_six_per_tetrahedron(tri):
    skeleton = build_skeleton(tri)
    assert sum(e.degree for e in skeleton.edges) == 6 * tri.size
    assert sum(len(p) for p in skeleton.vertex_positions) == 4 * tri.size


def test_reversed_edge_is_rejected():
    tri = parse_triangulation("tetrahedra: 1\nglue 0 2 : 0 3 : 1 0 3 2\n")
    with pytest.raises(InvalidEdgeError) as info:
        build_skeleton(tri)
    assert info.value.exit_code == 2


def test_figure_eight_is_not_compact():
    tri = parse_triangulation((CORPUS / "ideal" / "figure_eight.tri").read_text())
    skeleton = build_skeleton(tri)
    assert sorted(e.degree for e in skeleton.edges) == [6, 6]
    report = validate_compact(tri, skeleton)
    assert not report.is_compact
    assert [v.euler for v in report.vertices] == [0]
    assert len(report.failures) == 1
    with pytest.raises(NotCompactError):
        require_compact(tri)


@pytest.mark.parametrize("path", corpus_params(ALL_CORPUS_FILES))
def test_corpus_is_compact(path):
    tri = parse_triangulation(path.read_text())
    report = validate_compact(tri, build_skeleton(tri))
    assert report.is_compact
    assert all(v.ok for v in report.vertices)


def test_boundary_links_are_discs():
    report = validate_compact(load("single_tet.tri"), build_skeleton(load("single_tet.tri")))
    assert [(v.boundary, v.euler) for v in report.vertices] == [(True, 1)] * 4


def test_one_tet_catalog():
    catalog = one_tet_catalog()
    assert len(catalog) == 145
    assert 0 < len(VALID_ONE_TET) < len(catalog)
    closed = [t for t in VALID_ONE_TET if not t.boundary_faces]
    assert closed


def _flood(items, neighbours) -> set[frozenset]:
    unseen = set(items)
    classes = set()
    while unseen:
        start = unseen.pop()
        group, stack = {start}, [start]
        while stack:
            for other in neighbours(stack.pop()):
                if other not in group:
                    group.add(other)
                    stack.append(other)
        unseen -= group
        classes.add(frozenset(group))
    return classes


def _classes(numbering: dict) -> set[frozenset]:
    groups = defaultdict(set)
    for item, index in numbering.items():
        groups[index].add(item)
    return {frozenset(g) for g in groups.values()}


SKELETON_CASES = (
    VALID_ONE_TET
    + TWO_TET_CATALOG
    + RANDOM_THREE_TET
    + [doubled_chain(3)]
    + [load(p.name) for p in ALL_CORPUS_FILES]
)


@pytest.mark.parametrize("tri", SKELETON_CASES)
def test_skeleton_matches_flood_fill(tri):
    skeleton = build_skeleton(tri)
    glued = tri.gluings

    def corners(item):
        tet, v = item
        for f in range(4):
            if f != v and (tet, f) in glued:
                dest = glued[(tet, f)]
                yield dest.tet, dest.perm[v]

    def edges(item):
        tet, (a, b) = item
        for f in range(4):
            if f not in (a, b) and (tet, f) in glued:
                dest = glued[(tet, f)]
                yield dest.tet, tuple(sorted((dest.perm[a], dest.perm[b])))

    def faces(item):
        if item in glued:
            yield glued[item].tet, glued[item].face

    n = tri.size
    assert _classes(skeleton.vertex_class) == _flood(
        [(t, v) for t in range(n) for v in range(4)], corners
    )
    edge_classes = _flood([(t, e) for t in range(n) for e in EDGES], edges)
    assert _classes(skeleton.edge_class) == edge_classes
    assert sorted(e.degree for e in skeleton.edges) == sorted(map(len, edge_classes))
    assert _classes(skeleton.face_class) == _flood(
        [(t, f) for t in range(n) for f in range(4)], faces
    )
    assert 2 * skeleton.internal_face_count + len(skeleton.boundary_faces) == 4 * n


def test_two_tet_catalog():
    keys = [canonical_key(t.orbits()) for t in TWO_TET_CATALOG]
    assert len(set(keys)) == len(keys) > len(TWO_TET_SAMPLE)
    assert all(is_valid(t) for t in TWO_TET_CATALOG)
    assert any(not t.boundary_faces for t in TWO_TET_CATALOG)
    for name in ("s3_double.tri", "two_tet_one_vertex.tri", "chain2.tri", "chain2_twisted.tri"):
        assert canonical_key(load(name).orbits()) in keys


@pytest.mark.parametrize("tri", TWO_TET_SAMPLE)
def test_catalog_key_ignores_labels(tri):
    rng = random.Random(13)
    key = canonical_key(tri.orbits())
    for _ in range(5):
        order = rng.sample(range(2), 2)
        vertices = [tuple(rng.sample(range(4), 4)) for _ in range(2)]
        assert canonical_key(tri.relabel(order, vertices).orbits()) == key
