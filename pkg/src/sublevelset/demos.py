"""Application pipelines: attractor point-cloud fitting and C-space planning.

Two demo families live here, both consuming the core pipeline through
:func:`sublevelset.setapprox.approximate`:

- the Lorenz flow is integrated with fixed-step RK4 from a seeded cloud of
  initial conditions; the terminal points are fitted with the outer
  point-cloud program, producing a one-class decision boundary;
- a Dubins vehicle plans shortest input sequences through a workspace whose
  obstacles are inflated by the vehicle's disk via the Minkowski program,
  using breadth-first dynamic programming on a snapped (x, y, heading) grid.

Scene definitions for the narrative examples (union of disks, disk plus
polytope, polytope eroded by a disk) are also provided so the CLI and the
gallery scripts share one source of truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .moments import Box, Domain
from .polyalg import Polynomial
from .sdp import SolverOptions
from .setapprox import (
    ApproxResult,
    Intersection,
    MinkowskiSum,
    PointCloud,
    PontryaginDiff,
    Union,
    approximate,
)


# ---------------------------------------------------------------------------
# ODE simulation


@dataclass(frozen=True)
class OdeSystem:
    dimension: int
    name: str
    parameters: tuple

    def __post_init__(self):
        if self.name != "lorenz":
            raise ValueError(f"unknown system {self.name!r}")
        if not all(np.isfinite(self.parameters)):
            raise ValueError("parameters must be finite")


def lorenz_system(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> OdeSystem:
    return OdeSystem(dimension=3, name="lorenz", parameters=(sigma, rho, beta))


def _lorenz_rhs(state: np.ndarray, params) -> np.ndarray:
    sigma, rho, beta = params
    x, y, z = state[:, 0], state[:, 1], state[:, 2]
    return np.stack(
        [sigma * (y - x), rho * x - y - x * z, x * y - beta * z], axis=1
    )


@dataclass
class SimulationResult:
    points: np.ndarray
    dropped: int


def simulate_terminal_points(
    system: OdeSystem,
    initial_conditions: Sequence[Sequence[float]],
    t_end: float,
    dt: float,
) -> SimulationResult:
    """Fixed-step RK4 endpoints for a batch of initial conditions.

    Trajectories that leave the representable range are dropped and counted.
    Deterministic: no adaptivity, no randomness.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 10 * dt:
        raise ValueError("t_end must cover at least ten steps")
    state = np.atleast_2d(np.asarray(initial_conditions, dtype=float)).copy()
    if state.size == 0:
        return SimulationResult(points=np.zeros((0, system.dimension)), dropped=0)
    if state.shape[1] != system.dimension:
        raise ValueError("initial conditions have the wrong dimension")
    steps = int(round(t_end / dt))
    params = system.parameters
    alive = np.ones(len(state), dtype=bool)
    for _ in range(steps):
        k1 = _lorenz_rhs(state, params)
        k2 = _lorenz_rhs(state + 0.5 * dt * k1, params)
        k3 = _lorenz_rhs(state + 0.5 * dt * k2, params)
        k4 = _lorenz_rhs(state + dt * k3, params)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        good = np.all(np.isfinite(state), axis=1) & (np.abs(state).max(axis=1) < 1e6)
        if not good.all():
            alive &= good
            state[~good] = 0.0
    return SimulationResult(points=state[alive], dropped=int((~alive).sum()))


# ---------------------------------------------------------------------------
# Lorenz one-class fit


@dataclass
class CoordinateMap:
    """Affine normalisation y = (x - center) / half_width, recorded so fitted
    polynomials can be taken back to raw coordinates."""

    center: np.ndarray
    half_width: np.ndarray

    def normalize(self, pts: np.ndarray) -> np.ndarray:
        return (pts - self.center) / self.half_width

    def denormalize(self, pts: np.ndarray) -> np.ndarray:
        return pts * self.half_width + self.center


@dataclass
class LorenzFit:
    result: ApproxResult
    raw_points: np.ndarray
    normalized_points: np.ndarray
    coordinates: CoordinateMap
    simulation: SimulationResult
    metadata: dict


#: bounding box the attractor settles into; endpoint sanity check
LORENZ_ATTRACTOR_BOX = ((-25.0, -30.0, 0.0), (25.0, 30.0, 55.0))


def lorenz_point_fit(
    num_points: int = 500,
    degree: int = 8,
    t_end: float = 30.0,
    dt: float = 2e-3,
    seed: int = 42,
    inflate: float = 1.1,
    solver_options: SolverOptions | None = None,
) -> LorenzFit:
    """Simulate the Lorenz flow and fit its terminal cloud.

    Coordinates are normalised to the cloud's bounding box inflated by 10%,
    so the integration region is the unit box and the constraint ball its
    circumradius; the affine map is recorded in the metadata.  The fit runs
    the outer point-cloud program at the given degree.  Its guarantees
    (points strictly inside, bounded above by one) rest on feasibility, so
    the default solve accepts a slightly relaxed relative gap.
    """
    if solver_options is None:
        solver_options = SolverOptions(tol=2e-6)
    rng = np.random.default_rng(seed)
    inits = rng.uniform((-15, -20, 0), (15, 20, 40), size=(num_points, 3))
    sim = simulate_terminal_points(lorenz_system(), inits, t_end, dt)
    raw = sim.points
    lo, hi = LORENZ_ATTRACTOR_BOX
    inside = np.all((raw >= lo) & (raw <= hi), axis=1)
    raw = raw[inside]

    center = 0.5 * (raw.min(axis=0) + raw.max(axis=0))
    half_width = 0.5 * (raw.max(axis=0) - raw.min(axis=0)) * inflate
    coords = CoordinateMap(center=center, half_width=half_width)
    normalized = coords.normalize(raw)

    n = 3
    dom = Domain(math.sqrt(n), Box((-1.0,) * n, (1.0,) * n))
    result = approximate(
        PointCloud(tuple(map(tuple, normalized))),
        dom,
        degree,
        "volume",
        solver_options,
    )
    metadata = {
        "seed": seed,
        "t_end": t_end,
        "dt": dt,
        "dropped_trajectories": sim.dropped,
        "outside_attractor_box": int((~inside).sum()),
        "center": center.tolist(),
        "half_width": half_width.tolist(),
        "ball_radius": dom.ball_radius,
    }
    return LorenzFit(
        result=result,
        raw_points=raw,
        normalized_points=normalized,
        coordinates=coords,
        simulation=sim,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Dubins planning


def _default_steering() -> tuple:
    return tuple(np.linspace(-0.6, 0.6, 9))


@dataclass(frozen=True)
class DubinsModel:
    speed: float = 0.05
    wheelbase: float = 0.05
    steering_angles: tuple = field(default_factory=_default_steering)
    horizon: int = 400
    position_resolution: float = 0.02
    heading_bins: int = 36

    def __post_init__(self):
        if self.speed <= 0 or self.wheelbase <= 0:
            raise ValueError("speed and wheelbase must be positive")


def dubins_step(state: np.ndarray, steering: float, model: DubinsModel) -> np.ndarray:
    """One step of the unicycle-with-steering map (batched over rows)."""
    x, y, theta = state[:, 0], state[:, 1], state[:, 2]
    return np.stack(
        [
            x + model.speed * np.cos(theta),
            y + model.speed * np.sin(theta),
            theta + (model.speed / model.wheelbase) * math.tan(steering),
        ],
        axis=1,
    )


@dataclass
class Plan:
    input_indices: list
    steering_angles: list
    states: np.ndarray  # snapped rollout, shape (steps + 1, 3)

    def __len__(self):
        return len(self.input_indices)


class _Grid:
    def __init__(self, model: DubinsModel, workspace: Box):
        self.lo = np.array(workspace.lo)
        self.hi = np.array(workspace.hi)
        res = model.position_resolution
        self.res = res
        self.nx = int(round((self.hi[0] - self.lo[0]) / res)) + 1
        self.ny = int(round((self.hi[1] - self.lo[1]) / res)) + 1
        self.nh = model.heading_bins
        self.dtheta = 2 * math.pi / self.nh

    def snap(self, states: np.ndarray) -> np.ndarray:
        ix = np.round((states[:, 0] - self.lo[0]) / self.res).astype(np.int64)
        iy = np.round((states[:, 1] - self.lo[1]) / self.res).astype(np.int64)
        ih = np.round(states[:, 2] / self.dtheta).astype(np.int64) % self.nh
        return np.stack([ix, iy, ih], axis=1)

    def decode(self, cells: np.ndarray) -> np.ndarray:
        return np.stack(
            [
                self.lo[0] + cells[:, 0] * self.res,
                self.lo[1] + cells[:, 1] * self.res,
                cells[:, 2] * self.dtheta,
            ],
            axis=1,
        )

    def inside(self, cells: np.ndarray) -> np.ndarray:
        return (
            (cells[:, 0] >= 0)
            & (cells[:, 0] < self.nx)
            & (cells[:, 1] >= 0)
            & (cells[:, 1] < self.ny)
        )

    def flat(self, cells: np.ndarray) -> np.ndarray:
        return (cells[:, 0] * self.ny + cells[:, 1]) * self.nh + cells[:, 2]

    def unflat(self, flat: np.ndarray) -> np.ndarray:
        ih = flat % self.nh
        rest = flat // self.nh
        iy = rest % self.ny
        ix = rest // self.ny
        return np.stack([ix, iy, ih], axis=1)


def dubins_plan(
    model: DubinsModel,
    cspace_J: Polynomial,
    start: Sequence[float],
    target_box: Box,
    workspace: Box | None = None,
) -> Plan | None:
    """Fewest-steps input sequence avoiding the inflated obstacle set.

    The configuration-space obstacle is {(x, y) : cspace_J(x, y) <= 0}; the
    planner snaps states to a (position, heading) grid after every step and
    runs breadth-first search over the resulting graph, expanding steering
    inputs in index order so ties resolve to the smallest input.  Returns
    None when the target box is unreachable within the model's horizon.
    """
    workspace = workspace or Box((-1.0, -1.0), (1.0, 1.0))
    grid = _Grid(model, workspace)

    xs = np.linspace(workspace.lo[0], workspace.hi[0], grid.nx)
    ys = np.linspace(workspace.lo[1], workspace.hi[1], grid.ny)
    mesh = np.meshgrid(xs, ys, indexing="ij")
    positions = np.stack([g.ravel() for g in mesh], axis=1)
    blocked = (cspace_J.eval_many(positions) <= 0.0).reshape(grid.nx, grid.ny)

    start_arr = np.asarray(start, dtype=float)[None, :]
    start_cell = grid.snap(start_arr)
    if not grid.inside(start_cell)[0]:
        raise ValueError("start lies outside the workspace")
    if blocked[start_cell[0, 0], start_cell[0, 1]]:
        raise ValueError("start lies inside the inflated obstacle set")

    in_target = (
        lambda cells: (xs[cells[:, 0]] >= target_box.lo[0])
        & (xs[cells[:, 0]] <= target_box.hi[0])
        & (ys[cells[:, 1]] >= target_box.lo[1])
        & (ys[cells[:, 1]] <= target_box.hi[1])
    )

    total = grid.nx * grid.ny * grid.nh
    parent = np.full(total, -1, dtype=np.int64)
    parent_input = np.full(total, -1, dtype=np.int8)
    visited = np.zeros(total, dtype=bool)

    start_flat = grid.flat(start_cell)
    visited[start_flat] = True
    frontier = start_flat

    if in_target(start_cell)[0]:
        return Plan([], [], grid.decode(start_cell))

    for _ in range(model.horizon):
        if len(frontier) == 0:
            return None
        cells = grid.unflat(frontier)
        states = grid.decode(cells)
        cand_flat = []
        cand_parent = []
        cand_input = []
        for k, steer in enumerate(model.steering_angles):
            nxt = grid.snap(dubins_step(states, steer, model))
            ok = grid.inside(nxt)
            nxt_ok = nxt[ok]
            keep = ~blocked[nxt_ok[:, 0], nxt_ok[:, 1]]
            nxt_ok = nxt_ok[keep]
            cand_flat.append(grid.flat(nxt_ok))
            cand_parent.append(frontier[ok][keep])
            cand_input.append(np.full(len(nxt_ok), k, dtype=np.int8))
        flat = np.concatenate(cand_flat)
        pars = np.concatenate(cand_parent)
        inputs = np.concatenate(cand_input)
        # first occurrence wins: smallest input index, then frontier order
        uniq, first = np.unique(flat, return_index=True)
        new_mask = ~visited[uniq]
        uniq, first = uniq[new_mask], first[new_mask]
        if len(uniq) == 0:
            return None
        visited[uniq] = True
        parent[uniq] = pars[first]
        parent_input[uniq] = inputs[first]
        hit = in_target(grid.unflat(uniq))
        if hit.any():
            # among same-level hits take the first in expansion order
            order = np.argsort(first[hit], kind="stable")
            goal = uniq[hit][order[0]]
            indices = []
            node = goal
            while parent[node] >= 0:
                indices.append(int(parent_input[node]))
                node = parent[node]
            indices.reverse()
            states = rollout(model, grid.decode(start_cell)[0], indices, workspace)
            return Plan(
                input_indices=indices,
                steering_angles=[model.steering_angles[i] for i in indices],
                states=states,
            )
        frontier = uniq
    return None


def rollout(
    model: DubinsModel,
    start: Sequence[float],
    input_indices: Sequence[int],
    workspace: Box | None = None,
) -> np.ndarray:
    """Replay a plan through the planner's snapped dynamics."""
    workspace = workspace or Box((-1.0, -1.0), (1.0, 1.0))
    grid = _Grid(model, workspace)
    cell = grid.snap(np.asarray(start, dtype=float)[None, :])
    states = [grid.decode(cell)[0]]
    for k in input_indices:
        nxt = dubins_step(states[-1][None, :], model.steering_angles[k], model)
        cell = grid.snap(nxt)
        states.append(grid.decode(cell)[0])
    return np.array(states)


# ---------------------------------------------------------------------------
# narrative scenes


def two_vars(terms):
    return Polynomial(2, terms)


def union_of_disks_scene():
    """Three disks of very different sizes inside the 0.57-ball."""
    g1 = two_vars({(2, 0): 1.0, (0, 2): 1.0, (0, 0): -0.075})
    g2 = two_vars(
        {(2, 0): 1.0, (0, 2): 1.0, (1, 0): -0.3, (0, 1): -0.3, (0, 0): 0.045 - 0.025}
    )
    g3 = two_vars(
        {(2, 0): 1.0, (0, 2): 1.0, (1, 0): 0.5, (0, 1): 0.5, (0, 0): 0.125 - 0.001}
    )
    dom = Domain(0.57, Box((-0.4, -0.4), (0.4, 0.4)))
    return (g1, g2, g3), dom


def pentagon_polys():
    """Five half-plane constraints of the pentagon operand."""
    return (
        two_vars({(1, 0): 1.0, (0, 0): -0.5}),            # x1 <= 0.5
        two_vars({(1, 0): -1.0, (0, 0): -0.5}),           # x1 >= -0.5
        two_vars({(0, 1): -1.0, (0, 0): -0.5}),           # x2 >= -0.5
        two_vars({(0, 1): 1.0, (1, 0): -1.0, (0, 0): -0.5}),  # x2 - x1 <= 0.5
        two_vars({(1, 0): 1.0, (0, 1): 1.0, (0, 0): -0.5}),   # x1 + x2 <= 0.5
    )


def disk_poly(radius_sq: float, cx: float = 0.0, cy: float = 0.0) -> Polynomial:
    return two_vars(
        {
            (2, 0): 1.0,
            (0, 2): 1.0,
            (1, 0): -2 * cx,
            (0, 1): -2 * cy,
            (0, 0): cx * cx + cy * cy - radius_sq,
        }
    )


def minkowski_scene():
    """Disk of radius 0.25 summed with the pentagon."""
    spec = MinkowskiSum(
        Union((disk_poly(0.0625),), strict=False),
        Intersection(pentagon_polys(), strict=False),
    )
    dom = Domain(1.77, Box((-1.25, -1.25), (1.25, 1.25)))
    return spec, dom


def pontryagin_scene():
    """Pentagon eroded by the disk of radius 0.25.

    Eroding the disk by the pentagon would be empty (the pentagon strictly
    contains the disk), so the erosion runs the other way around; the
    integration region stays at the quarter-scale box with the constraint
    ball at its circumradius.
    """
    spec = PontryaginDiff(
        Intersection(pentagon_polys(), strict=True),
        Intersection((disk_poly(0.0625),), strict=False),
    )
    dom = Domain(math.hypot(0.75, 0.75), Box((-0.75, -0.75), (0.75, 0.75)))
    return spec, dom


def _sup_normalized(p: Polynomial, region: Box) -> Polynomial:
    """Scale a defining polynomial to unit sup-norm over the region.

    Sublevel sets are scale-invariant; normalising by the value range (not
    the coefficient range) keeps the free-space margin comparable across
    obstacles of different degrees, which the integral program needs.
    """
    xs = np.linspace(region.lo[0], region.hi[0], 101)
    ys = np.linspace(region.lo[1], region.hi[1], 101)
    X1, X2 = np.meshgrid(xs, ys, indexing="ij")
    sample = np.stack([X1.ravel(), X2.ravel()], axis=1)
    return p.scale(1.0 / float(np.abs(p.eval_many(sample)).max()))


def dubins_scene():
    """Workspace obstacles, the robot disk, and the start/target of the demo.

    Obstacles are single-polynomial sublevel sets: a four-petal rose in the
    upper-left plus two disks, leaving a corridor along the bottom and the
    right edge.  The robot is the disk of radius 0.1; its Minkowski
    inflation of the obstacle union is the configuration-space obstacle.
    """
    workspace = Box((-1.0, -1.0), (1.0, 1.0))

    def rose(cx, cy, size_sq):
        x2 = {(2, 0): 1.0, (1, 0): -2 * cx, (0, 0): cx * cx}
        y2 = {(0, 2): 1.0, (0, 1): -2 * cy, (0, 0): cy * cy}
        r2 = two_vars(x2) + two_vars(y2)
        diff = two_vars(x2) - two_vars(y2)
        return r2 * r2 * r2 - Polynomial.constant(size_sq, 2) * diff * diff

    obstacles = (
        _sup_normalized(rose(-0.45, 0.45, 0.0625), workspace),
        disk_poly(0.04, 0.5, -0.45),
        disk_poly(0.0324, 0.0, 0.0),
    )
    robot = disk_poly(0.01)
    spec = MinkowskiSum(
        Union(obstacles, strict=False), Intersection((robot,), strict=False)
    )
    dom = Domain(1.42, workspace)
    start = (-0.8, -0.8, 0.0)
    target = Box((0.7, 0.7), (0.85, 0.85))
    return spec, dom, start, target


@dataclass
class DubinsDemo:
    cspace: ApproxResult
    plan: Plan | None
    model: DubinsModel
    start: tuple
    target: Box
    scene: MinkowskiSum
    domain: Domain


def dubins_demo(
    degree: int = 8,
    model: DubinsModel | None = None,
    solver_options: SolverOptions | None = None,
) -> DubinsDemo:
    """Inflate the obstacles by the robot disk and plan through the corridor.

    The degree-8 inflation program stalls near a 1e-6 relative gap (flat
    optimal face); avoidance soundness only needs feasibility, so the solve
    runs at that tolerance by default.
    """
    spec, dom, start, target = dubins_scene()
    model = model or DubinsModel()
    cspace = approximate(
        spec, dom, degree, "volume", solver_options or SolverOptions(tol=2e-6)
    )
    plan = dubins_plan(model, cspace.J, start, target)
    return DubinsDemo(
        cspace=cspace,
        plan=plan,
        model=model,
        start=start,
        target=target,
        scene=spec,
        domain=dom,
    )
