import logging
import math
from itertools import product
from typing import NamedTuple, Sequence

from .coords import (
    MatchingSystem,
    SolutionSet,
    Vector,
    reduce,
)
from .errors import OracleTooLargeError

LOG = logging.getLogger(__name__)

MAX_DIMENSION = 24


class SupportPattern(NamedTuple):
    support: int
    dimension: int

    @property
    def positions(self) -> list[int]:
        return [i for i in range(self.dimension) if self.support >> i & 1]

    @property
    def zero_positions(self) -> list[int]:
        return [i for i in range(self.dimension) if not self.support >> i & 1]


def integer_kernel(matrix: Sequence[Sequence[int]], columns: int) -> list[Vector]:
    rows = [list(row) for row in matrix if any(row)]
    pivots: list[int] = []
    for c in range(columns):
        r = len(pivots)
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        a = rows[r][c]
        for i in range(len(rows)):
            b = rows[i][c]
            if i == r or not b:
                continue
            g = math.gcd(a, b)
            rows[i] = list(reduce([(a // g) * x - (b // g) * y for x, y in zip(rows[i], rows[r])]))
        pivots.append(c)

    scale = math.lcm(*(abs(rows[i][c]) for i, c in enumerate(pivots)))
    basis = []
    for free in range(columns):
        if free in pivots:
            continue
        x = [0] * columns
        x[free] = scale
        for i, c in enumerate(pivots):
            x[c] = -rows[i][free] * scale // rows[i][c]
        basis.append(reduce(x))
    return basis


def _supports(system: MatchingSystem, constrained: bool) -> list[SupportPattern]:
    if not constrained:
        masks = list(range(1, 1 << system.dimension))
        masks.sort(key=lambda m: (m.bit_count(), m))
        return [SupportPattern(m, system.dimension) for m in masks]
    space = system.space
    width = space.width
    triangles = width - 3
    options = []
    for t in range(system.size):
        base = width * t
        choices = []
        for tri_bits in range(1 << triangles):
            for quad in (None, 0, 1, 2):
                mask = tri_bits << base
                if quad is not None:
                    mask |= 1 << (base + triangles + quad)
                choices.append(mask)
        options.append(choices)
    masks = [sum(combo) for combo in product(*options)]
    masks = [m for m in masks if m]
    masks.sort(key=lambda m: (m.bit_count(), m))
    return [SupportPattern(m, system.dimension) for m in masks]


def brute_force_rays(
    system: MatchingSystem,
    limit: int = MAX_DIMENSION,
    *,
    quad_constraints: bool = True,
) -> SolutionSet:
    if system.dimension > limit:
        raise OracleTooLargeError(
            f"dimension {system.dimension} is beyond the brute force limit of {limit}"
        )
    found: list[int] = []
    rays: list[Vector] = []
    for pattern in _supports(system, quad_constraints):
        if any(f & ~pattern.support == 0 for f in found):
            continue
        positions = pattern.positions
        restricted = [[row[c] for c in positions] for row in system.equations]
        kernel = integer_kernel(restricted, len(positions))
        if len(kernel) != 1:
            continue
        v = kernel[0]
        if not (all(x > 0 for x in v) or all(x < 0 for x in v)):
            continue
        ray = [0] * system.dimension
        for c, x in zip(positions, v):
            ray[c] = abs(x)
        found.append(pattern.support)
        rays.append(tuple(ray))

    LOG.debug("oracle: %d rays in dimension %d", len(rays), system.dimension)
    return SolutionSet(space=system.space, size=system.size, rays=tuple(rays))
