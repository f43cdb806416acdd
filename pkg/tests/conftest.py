import random
from itertools import permutations, product
from pathlib import Path

import pytest

from normsurf import context
from normsurf.coords import (
    SolutionSet,
    Space,
    quad_matching_system,
    quad_type,
    standard_matching_system,
)
from normsurf.errors import TriangulationError
from normsurf.triangulation import (
    IDENTITY,
    Triangulation,
    build_skeleton,
    invert,
    parse_triangulation,
    validate_compact,
)

CORPUS = Path(__file__).parent.parent / "corpus"
# only the bench acceptance run uses these
BENCH_ONLY = {"chain4_double", "chain5_double", "chain6_double"}
SLOW = {"chain3_double", "star3_double"}
ALL_CORPUS_FILES = sorted(CORPUS.glob("*.tri"))
CORPUS_FILES = [p for p in ALL_CORPUS_FILES if p.stem not in BENCH_ONLY]
SMALL_CORPUS = [p for p in CORPUS_FILES if p.stem not in SLOW]


def load(name: str) -> Triangulation:
    return parse_triangulation((CORPUS / name).read_text())


ORACLE_CORPUS = [p for p in SMALL_CORPUS if load(p.name).size <= 2]


def corpus_params(files=CORPUS_FILES):
    return [
        pytest.param(p, id=p.stem, marks=[pytest.mark.slow] if p.stem in SLOW else [])
        for p in files
    ]


def perms_sending(f1: int, f2: int) -> list[tuple[int, ...]]:
    return [p for p in permutations(range(4)) if p[f1] == f2]


def _matchings(faces: list):
    if not faces:
        yield []
        return
    first, rest = faces[0], faces[1:]
    yield from _matchings(rest)
    for i, other in enumerate(rest):
        for matching in _matchings(rest[:i] + rest[i + 1 :]):
            yield [(first, other)] + matching


def one_tet_catalog() -> list[Triangulation]:
    """
    Every gluing of the faces of one tetrahedron
    """
    catalog = []
    for matching in _matchings([(0, f) for f in range(4)]):
        choices = [perms_sending(a[1], b[1]) for a, b in matching]
        for perms in product(*choices):
            pairs = [(a[0], a[1], b[0], b[1], p) for (a, b), p in zip(matching, perms)]
            catalog.append(Triangulation.from_pairs(1, pairs))
    return catalog


def is_valid(tri: Triangulation) -> bool:
    try:
        skeleton = build_skeleton(tri)
    except TriangulationError:
        return False
    return validate_compact(tri, skeleton).is_compact


def _relabelled_key(glued: dict, start: tuple, sigma: tuple) -> tuple:
    """
    Gluing table after moving the tetrahedron of ``start`` to 0 and relabelling
    its vertices by ``sigma``, chosen so that the ``start`` gluing becomes face 3
    of tetrahedron 0 glued to face 3 of tetrahedron 1 by the identity
    """
    x, _ = start
    y, _, p = glued[start]
    inv = invert(p)
    label = {x: 0, y: 1}
    perms = {x: sigma, y: tuple(sigma[inv[v]] for v in range(4))}
    rows = []
    for (t, f), (u, g, q) in glued.items():
        moved = [0, 0, 0, 0]
        for v in range(4):
            moved[perms[t][v]] = perms[u][q[v]]
        rows.append((label[t], perms[t][f], label[u], perms[u][g], tuple(moved)))
    return tuple(sorted(rows))


def canonical_key(pairs) -> tuple:
    """
    Smallest gluing table over the relabellings of a connected two-tetrahedron
    triangulation that normalise one gluing between the two tetrahedra
    """
    glued = {}
    for t1, f1, t2, f2, p in pairs:
        glued[(t1, f1)] = (t2, f2, tuple(p))
        glued[(t2, f2)] = (t1, f1, invert(p))
    return min(
        _relabelled_key(glued, (t, f), sigma)
        for (t, f), (u, _, _) in glued.items()
        if t != u
        for sigma in perms_sending(f, 3)
    )


def two_tet_catalog() -> list[Triangulation]:
    """
    Every valid connected gluing of two tetrahedra, one per relabelling class
    """
    # any connected one can be relabelled to glue face 3 to face 3 by the identity
    fixed = (0, 3, 1, 3, IDENTITY)
    seen = set()
    catalog = []
    for matching in _matchings([(t, f) for t in range(2) for f in range(3)]):
        choices = [perms_sending(a[1], b[1]) for a, b in matching]
        for perms in product(*choices):
            pairs = [fixed] + [(a[0], a[1], b[0], b[1], p) for (a, b), p in zip(matching, perms)]
            key = canonical_key(pairs)
            if key in seen:
                continue
            seen.add(key)
            tri = Triangulation.from_pairs(2, pairs)
            if is_valid(tri):
                catalog.append(tri)
    return catalog

def random_triangulations(n: int, count: int, seed: int, closed: bool = False):
    rng = random.Random(seed)
    found = []
    for _ in range(5000):
        if len(found) >= count:
            break
        faces = [(t, f) for t in range(n) for f in range(4)]
        rng.shuffle(faces)
        orbits = 2 * n if closed else rng.randint(n - 1, 2 * n)
        pairs = []
        for i in range(orbits):
            (t1, f1), (t2, f2) = faces[2 * i], faces[2 * i + 1]
            pairs.append((t1, f1, t2, f2, rng.choice(perms_sending(f1, f2))))
        tri = Triangulation.from_pairs(n, pairs)
        if is_valid(tri):
            found.append(tri)
    return found


def doubled_chain(k: int) -> Triangulation:
    """
    A chain of ``k`` tetrahedra doubled along its boundary: a 3-sphere with 2k tetrahedra
    """
    swap = (3, 1, 2, 0)
    identity = (0, 1, 2, 3)
    pairs = []
    for copy in (0, k):
        for i in range(k - 1):
            pairs.append((copy + i, 0, copy + i + 1, 3, swap))
    for i in range(k):
        for f in range(4):
            if (f == 0 and i < k - 1) or (f == 3 and i > 0):
                continue
            pairs.append((i, f, k + i, f, identity))
    return Triangulation.from_pairs(2 * k, pairs)


VALID_ONE_TET = [t for t in one_tet_catalog() if is_valid(t)]
TWO_TET_CATALOG = two_tet_catalog()
TWO_TET_SAMPLE = TWO_TET_CATALOG[:: max(1, len(TWO_TET_CATALOG) // 12)]
RANDOM_THREE_TET = random_triangulations(3, 6, seed=7)


def slow_params(tris: list[Triangulation]):
    return [pytest.param(t, marks=pytest.mark.slow) for t in tris]


def random_relabelling(rng: random.Random, n: int):
    return rng.sample(range(n), n), [tuple(rng.sample(range(4), 4)) for _ in range(n)]


def relabel_solutions(solutions: SolutionSet, order, vertices) -> SolutionSet:
    """
    Move every ray to the coordinates of ``Triangulation.relabel(order, vertices)``
    """
    std = solutions.space is Space.STANDARD
    moved = []
    for ray in solutions.rays:
        entries = [0] * len(ray)
        for t, new in enumerate(order):
            sigma = vertices[t]
            if std:
                for v in range(4):
                    entries[7 * new + sigma[v]] = ray[7 * t + v]
            for k in (1, 2, 3):
                kind = quad_type(sigma[0], sigma[k])
                if std:
                    entries[7 * new + 3 + kind] = ray[7 * t + 3 + k]
                else:
                    entries[3 * new + kind - 1] = ray[3 * t + k - 1]
        moved.append(tuple(entries))
    return SolutionSet(space=solutions.space, size=solutions.size, rays=tuple(moved))


class Prepared:
    def __init__(self, tri: Triangulation):
        self.tri = tri
        self.skeleton = build_skeleton(tri)
        self.std = standard_matching_system(tri, self.skeleton)
        self.quad = quad_matching_system(tri, self.skeleton)


@pytest.fixture(autouse=True)
def detached_context():
    context.reset()
    yield
    context.reset()


@pytest.fixture
def one_tet_closed() -> Prepared:
    return Prepared(load("one_tet_closed.tri"))


@pytest.fixture
def s3_double() -> Prepared:
    return Prepared(load("s3_double.tri"))


@pytest.fixture
def single_tet() -> Prepared:
    return Prepared(load("single_tet.tri"))
