"""Survey-grid discretization and multi-agent coverage routing.

The aerial planner discretizes a GPS rectangle into a lattice of grid points
and assigns every point to exactly one agent with a greedy rule: repeatedly
extend the agent whose route is currently shortest by the unvisited point
nearest its endpoint. Tie-breaks (lowest agent id, then lowest (row, col))
are fixed so plans are fully deterministic.

Ground vehicles get a separate minimum-cost path planner over the semantic
terrain cost map (4-connected A*).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

from .geo import EnuPoint, GeoPoint, distance, to_enu
from .world import IMPASSABLE, TerrainGrid


class RegionError(ValueError):
    """Survey region is not (nearly) a rectangle."""


class NoPathError(ValueError):
    """No traversable ground path between the given cells."""


# Opposite sides / diagonals may differ by this relative tolerance before a
# corner set stops counting as a rectangle.
RECT_TOL = 0.01

_DEGENERATE_M = 1e-9


@dataclass(frozen=True)
class SurveyRegion:
    corners: tuple[GeoPoint, GeoPoint, GeoPoint, GeoPoint]
    spacing_m: float
    altitude_m: float


@dataclass(frozen=True)
class GridPoint:
    index: tuple[int, int]  # (row, col)
    position: EnuPoint


@dataclass(frozen=True)
class RoutePlan:
    routes: tuple[tuple[GridPoint, ...], ...]  # one ordered route per agent
    starts: tuple[EnuPoint, ...]
    lengths_m: tuple[float, ...]
    makespan_m: float


def route_length(start: EnuPoint, route: list[GridPoint] | tuple[GridPoint, ...]) -> float:
    """Total Euclidean length of start -> p1 -> ... -> pn; 0 for an empty route."""
    total = 0.0
    at = start
    for p in route:
        total += distance(at, p.position)
        at = p.position
    return total


def _side_lengths(c: list[EnuPoint]) -> tuple[float, float, float, float, float, float]:
    d = lambda a, b: distance(a, b)  # noqa: E731
    return d(c[0], c[1]), d(c[3], c[2]), d(c[1], c[2]), d(c[0], c[3]), d(c[0], c[2]), d(c[1], c[3])


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= RECT_TOL * max(a, b, _DEGENERATE_M)


def discretize_region(region: SurveyRegion, origin: GeoPoint) -> list[GridPoint]:
    """Lattice the region with pitch ``spacing_m``, row-major from corner 0.

    Columns run along the corner-0 -> corner-1 edge, rows along
    corner-0 -> corner-3. A zero-area region collapses to a single point at
    corner 0; a corner set that is not a rectangle (opposite sides or
    diagonals off by more than 1%) raises :class:`RegionError`.
    """
    if region.spacing_m <= 0.0:
        raise RegionError(f"spacing_m must be > 0, got {region.spacing_m}")
    if len(region.corners) != 4:
        raise RegionError(f"expected exactly 4 corners, got {len(region.corners)}")

    c = [to_enu(origin, g) for g in region.corners]
    w01, w32, h12, h03, diag02, diag13 = _side_lengths(c)
    if not (_near(w01, w32) and _near(h12, h03) and _near(diag02, diag13)):
        raise RegionError(
            "corners do not form a rectangle "
            f"(sides {w01:.3f}/{w32:.3f} and {h03:.3f}/{h12:.3f}, "
            f"diagonals {diag02:.3f}/{diag13:.3f})"
        )

    width, height = w01, h03
    c0 = c[0]
    if width < _DEGENERATE_M and height < _DEGENERATE_M:
        return [GridPoint((0, 0), EnuPoint(c0.east_m, c0.north_m, region.altitude_m))]
    if width < _DEGENERATE_M or height < _DEGENERATE_M:
        # Zero area: a line or point collapses to corner 0.
        return [GridPoint((0, 0), EnuPoint(c0.east_m, c0.north_m, region.altitude_m))]

    u = ((c[1].east_m - c0.east_m) / width, (c[1].north_m - c0.north_m) / width)
    v = ((c[3].east_m - c0.east_m) / height, (c[3].north_m - c0.north_m) / height)
    # The GPS round trip perturbs side lengths by up to ~1e-9 m (the projection
    # identity tolerance); keep exact multiples of the spacing on the grid.
    cols = math.floor(width / region.spacing_m + 1e-9) + 1
    rows = math.floor(height / region.spacing_m + 1e-9) + 1

    points = []
    for r in range(rows):
        for col in range(cols):
            e = c0.east_m + u[0] * col * region.spacing_m + v[0] * r * region.spacing_m
            n = c0.north_m + u[1] * col * region.spacing_m + v[1] * r * region.spacing_m
            points.append(GridPoint((r, col), EnuPoint(e, n, region.altitude_m)))
    return points


def plan_greedy_routes(points: list[GridPoint], starts: list[EnuPoint]) -> RoutePlan:
    """Assign every grid point to exactly one agent by the greedy rule.

    Until no unvisited points remain: pick the agent with the minimum current
    route length (ties: lowest agent id), then append the unvisited point
    nearest that agent's current endpoint (ties: lowest (row, col) index).
    """
    if not starts:
        raise ValueError("at least one agent start position is required")

    n_agents = len(starts)
    routes: list[list[GridPoint]] = [[] for _ in range(n_agents)]
    lengths = [0.0] * n_agents
    endpoints = list(starts)
    unvisited = list(points)

    while unvisited:
        agent = min(range(n_agents), key=lambda i: (lengths[i], i))
        best = min(
            range(len(unvisited)),
            key=lambda j: (distance(endpoints[agent], unvisited[j].position),
                           unvisited[j].index),
        )
        point = unvisited.pop(best)
        lengths[agent] += distance(endpoints[agent], point.position)
        endpoints[agent] = point.position
        routes[agent].append(point)

    return RoutePlan(
        routes=tuple(tuple(r) for r in routes),
        starts=tuple(starts),
        lengths_m=tuple(lengths),
        makespan_m=max(lengths) if lengths else 0.0,
    )


# ---------------------------------------------------------------------------
# Exhaustive oracle for small instances
# ---------------------------------------------------------------------------

BRUTEFORCE_MAX_POINTS = 8


def _best_order(start: EnuPoint, subset: tuple[int, ...], points: list[GridPoint]) -> tuple[float, tuple[int, ...]]:
    """Cheapest visiting order for one agent; ties pick the smallest index sequence."""
    best_len = math.inf
    best_perm: tuple[int, ...] = ()
    for perm in itertools.permutations(subset):
        total = 0.0
        at = start
        for idx in perm:
            total += distance(at, points[idx].position)
            at = points[idx].position
        if total < best_len or (total == best_len and perm < best_perm):
            best_len, best_perm = total, perm
    if not subset:
        return 0.0, ()
    return best_len, best_perm


def optimal_routes_bruteforce(points: list[GridPoint], starts: list[EnuPoint]) -> RoutePlan:
    """Minimum-makespan plan by exhaustive enumeration (test oracle).

    Enumerates every assignment of points to agents; within an assignment each
    agent's visiting order is optimized independently (orders do not interact
    under the makespan objective). Ties go to the lexicographically smallest
    assignment vector. Limited to ``BRUTEFORCE_MAX_POINTS`` points.
    """
    if not starts:
        raise ValueError("at least one agent start position is required")
    if len(points) > BRUTEFORCE_MAX_POINTS:
        raise ValueError(
            f"instance too large for brute force: {len(points)} points "
            f"(max {BRUTEFORCE_MAX_POINTS})"
        )

    n_agents = len(starts)
    n = len(points)
    order_cache: dict[tuple[int, tuple[int, ...]], tuple[float, tuple[int, ...]]] = {}

    def solved(agent: int, subset: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
        key = (agent, subset)
        if key not in order_cache:
            order_cache[key] = _best_order(starts[agent], subset, points)
        return order_cache[key]

    best_makespan = math.inf
    best_assignment: tuple[int, ...] | None = None
    for assignment in itertools.product(range(n_agents), repeat=n):
        subsets: list[list[int]] = [[] for _ in range(n_agents)]
        for point_idx, agent in enumerate(assignment):
            subsets[agent].append(point_idx)
        makespan = 0.0
        for agent in range(n_agents):
            length, _ = solved(agent, tuple(subsets[agent]))
            makespan = max(makespan, length)
            if makespan >= best_makespan:
                break
        if makespan < best_makespan:
            best_makespan = makespan
            best_assignment = assignment

    assert best_assignment is not None
    routes = []
    lengths = []
    for agent in range(n_agents):
        subset = tuple(i for i, a in enumerate(best_assignment) if a == agent)
        length, perm = solved(agent, subset)
        routes.append(tuple(points[i] for i in perm))
        lengths.append(length)
    return RoutePlan(
        routes=tuple(routes),
        starts=tuple(starts),
        lengths_m=tuple(lengths),
        makespan_m=best_makespan if n else 0.0,
    )


# ---------------------------------------------------------------------------
# Ground-vehicle pathfinding over the terrain cost map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundPath:
    cells: tuple[tuple[int, int], ...]  # start cell through goal cell inclusive
    total_cost: float


def _passable(terrain: TerrainGrid, cell: tuple[int, int]) -> bool:
    r, c = cell
    if not (0 <= r < terrain.height_cells and 0 <= c < terrain.width_cells):
        return False
    return terrain.cost_of(terrain.classes[r][c]) != IMPASSABLE


def plan_ground_path(
    terrain: TerrainGrid, start_cell: tuple[int, int], goal_cell: tuple[int, int]
) -> GroundPath:
    """Minimum-cost 4-connected path; the cost of a move is the entered cell's cost.

    A* with an admissible manhattan-distance-times-cheapest-cell heuristic;
    among equal-cost frontier entries the smaller (row, col) expands first.
    """
    for name, cell in (("start", start_cell), ("goal", goal_cell)):
        if not _passable(terrain, cell):
            raise NoPathError(f"{name} cell {cell} is outside the grid or impassable")

    min_cost = min(
        (terrain.cost_of(cls) for row in terrain.classes for cls in row
         if terrain.cost_of(cls) != IMPASSABLE),
        default=1.0,
    )

    def h(cell: tuple[int, int]) -> float:
        return (abs(cell[0] - goal_cell[0]) + abs(cell[1] - goal_cell[1])) * min_cost

    best_g: dict[tuple[int, int], float] = {start_cell: 0.0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    frontier: list[tuple[float, int, int]] = [(h(start_cell), start_cell[0], start_cell[1])]
    done: set[tuple[int, int]] = set()

    while frontier:
        f, r, c = heapq.heappop(frontier)
        cell = (r, c)
        if cell in done:
            continue
        done.add(cell)
        if cell == goal_cell:
            path = [cell]
            while path[-1] != start_cell:
                path.append(parent[path[-1]])
            path.reverse()
            return GroundPath(cells=tuple(path), total_cost=best_g[goal_cell])
        g = best_g[cell]
        for nbr in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if not _passable(terrain, nbr):
                continue
            ng = g + terrain.cost_of(terrain.classes[nbr[0]][nbr[1]])
            if ng < best_g.get(nbr, math.inf):
                best_g[nbr] = ng
                parent[nbr] = cell
                heapq.heappush(frontier, (ng + h(nbr), nbr[0], nbr[1]))

    raise NoPathError(f"goal cell {goal_cell} is unreachable from {start_cell}")
