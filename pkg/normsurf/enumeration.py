import logging
from typing import Iterable, Optional, Sequence

from .coords import (
    MatchingSystem,
    NormalVector,
    SolutionSet,
    Vector,
    compatible_support,
    quad_groups,
    reduce,
    satisfies_quad_constraints,
)
from .deadline import NEVER, Deadline
from .errors import DimensionError

LOG = logging.getLogger(__name__)


class RayList:
    def __init__(self, dimension: int, rays: Iterable[Sequence[int]] = ()):
        self.dimension = dimension
        self.full = (1 << dimension) - 1
        self.rays: list[Vector] = []
        self.zeros: list[int] = []
        self.__seen: set[Vector] = set()
        for ray in rays:
            self.add(ray)

    @classmethod
    def orthant(cls, dimension: int) -> "RayList":
        return cls(
            dimension,
            (tuple(int(i == j) for j in range(dimension)) for i in range(dimension)),
        )

    def add(self, ray: Sequence[int]) -> bool:
        ray = tuple(ray)
        if len(ray) != self.dimension:
            raise DimensionError(f"ray of length {len(ray)} in a list of dimension {self.dimension}")
        if ray in self.__seen:
            return False
        self.__seen.add(ray)
        self.rays.append(ray)
        mask = 0
        for i, x in enumerate(ray):
            if x == 0:
                mask |= 1 << i
        self.zeros.append(mask)
        return True

    def __len__(self) -> int:
        return len(self.rays)

    def __iter__(self):
        return iter(self.rays)


def adjacent(zeros: Sequence[int], i: int, j: int, within: int = -1) -> bool:
    """
    Combinatorial adjacency: no third ray vanishes everywhere rays ``i`` and
    ``j`` both vanish (zero sets compared inside the ``within`` mask)
    """
    common = zeros[i] & zeros[j] & within
    for k, z in enumerate(zeros):
        if k != i and k != j and common & ~z == 0:
            return False
    return True


def dd_step(
    rays: RayList,
    h: Sequence[int],
    prune: bool = False,
    *,
    groups: Optional[Sequence[int]] = None,
    deadline: Deadline = NEVER,
) -> RayList:
    """
    Intersect the cone spanned by ``rays`` with the hyperplane ``h . x = 0``.

    With ``prune`` set, new rays whose support breaks the quadrilateral
    constraints described by ``groups`` are never created.
    """
    if len(h) != rays.dimension:
        raise DimensionError(f"hyperplane of length {len(h)} for rays of dimension {rays.dimension}")
    if prune and groups is None:
        raise ValueError("pruning needs the quad position groups")
    terms = [(i, a) for i, a in enumerate(h) if a]
    signs = [sum(a * ray[i] for i, a in terms) for ray in rays.rays]
    positive = [i for i, s in enumerate(signs) if s > 0]
    negative = [i for i, s in enumerate(signs) if s < 0]

    out = [ray for ray, s in zip(rays.rays, signs) if s == 0]
    for i in positive:
        deadline.check()
        u, su, zu = rays.rays[i], signs[i], rays.zeros[i]
        for j in negative:
            common = zu & rays.zeros[j]
            if prune and not compatible_support(rays.full & ~common, groups):
                continue
            if not adjacent(rays.zeros, i, j):
                continue
            w, sw = rays.rays[j], signs[j]
            out.append(reduce([su * b - sw * a for a, b in zip(u, w)]))
    return RayList(rays.dimension, sorted(out))


class DoubleDescription:
    def __init__(
        self,
        system: MatchingSystem,
        prune: bool = True,
        deadline: Deadline = NEVER,
    ):
        self.system = system
        self.prune = prune
        self.deadline = deadline
        self.groups = quad_groups(system.space, system.size)
        self.peak = 0
        self.sizes: list[int] = []
        self.final = 0

    def run(self, order: Optional[Sequence[int]] = None) -> SolutionSet:
        equations = self.system.equations
        if order is not None:
            equations = [equations[i] for i in order]
        rays = RayList.orthant(self.system.dimension)
        self.peak = len(rays)
        for index, row in enumerate(equations):
            self.deadline.check()
            rays = dd_step(rays, row, self.prune, groups=self.groups, deadline=self.deadline)
            self.sizes.append(len(rays))
            self.peak = max(self.peak, len(rays))
            LOG.debug("equation %d/%d: %d rays", index + 1, len(equations), len(rays))
        space = self.system.space
        final = [r for r in rays if satisfies_quad_constraints(NormalVector(space, r))]
        self.final = len(final)
        LOG.info(
            "%s enumeration: %d rays, peak list %d", space.value, len(final), self.peak
        )
        return SolutionSet(space=space, size=self.system.size, rays=tuple(final))

    @property
    def ratio(self) -> Optional[float]:
        if not self.final:
            return None
        return self.peak / self.final


def enumerate_solution_set(
    system: MatchingSystem, deadline: Optional[Deadline] = None
) -> SolutionSet:
    return DoubleDescription(system, deadline=deadline or NEVER).run()
