"""Integer particle swarm optimizer over phase-level matrices.

Positions are integer level matrices, velocities are real matrices clamped to
``[-1, 1]``. Two "discard" masks randomly zero entries of the cognitive and
social pulls so that a useful fraction of elements still moves by a whole
level after rounding. Coefficients follow a four-stage schedule and the swarm
can be seeded with the superposition profile ("knowledge").
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .farfield import FarFieldPattern, MaskSet, get_engine, sll_objective
from .geometry import ArrayGeometry, BeamSpec, level_phases
from .synthesis import PhaseProfile, superpose_profiles


class Knowledge(str, enum.Enum):
    ZERO = "zero"
    PARTIAL = "partial"
    FULL = "full"


class BoundMode(str, enum.Enum):
    CLAMP = "clamp"
    WRAP = "wrap"


@dataclass(frozen=True)
class StageParams:
    d1: float
    d2: float
    c1: float
    c2: float
    w: float

    def __post_init__(self):
        for name in ("d1", "d2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ConfigError(f"discard rate {name} must lie in [0, 1], got {val}")
        for name in ("c1", "c2", "w"):
            val = getattr(self, name)
            if not val >= 0.0:
                raise ConfigError(f"coefficient {name} must be >= 0, got {val}")


DEFAULT_STAGES = (
    StageParams(d1=0.8, d2=0.8, c1=1.0, c2=1.0, w=0.6),
    StageParams(d1=0.4, d2=0.6, c1=1.2, c2=0.8, w=0.4),
    StageParams(d1=0.2, d2=0.2, c1=1.0, c2=1.0, w=0.2),
    StageParams(d1=0.0, d2=0.0, c1=0.9, c2=1.1, w=0.0),
)


@dataclass(frozen=True)
class StageSchedule:
    """Coefficient rows and the last iteration (1-based) of each stage.

    ``ends[-1]`` is the run length. Empty stages (equal consecutive ends) are
    allowed, which happens when splitting very short runs.
    """

    stages: tuple[StageParams, ...]
    ends: tuple[int, ...]

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("schedule needs at least one stage")
        if len(self.ends) != len(self.stages):
            raise ConfigError(
                f"{len(self.stages)} stages but {len(self.ends)} stage boundaries")
        prev = 0
        for e in self.ends:
            if int(e) != e or e < prev:
                raise ConfigError(f"stage boundaries must be non-decreasing integers: {self.ends}")
            prev = e
        if self.ends[-1] < 1:
            raise ConfigError("schedule must cover at least one iteration")

    @classmethod
    def equal(cls, iterations: int, stages: Sequence[StageParams] = DEFAULT_STAGES) -> "StageSchedule":
        """Split ``iterations`` into ``len(stages)`` near-equal contiguous blocks."""
        n = len(stages)
        return cls(tuple(stages), tuple((i + 1) * iterations // n for i in range(n)))

    @property
    def iterations(self) -> int:
        return self.ends[-1]


def stage_params(schedule: StageSchedule, iteration: int) -> StageParams:
    """Coefficient row in force at 1-based ``iteration``."""
    if not 1 <= iteration <= schedule.iterations:
        raise DomainError(
            f"iteration {iteration} outside [1, {schedule.iterations}]")
    for row, end in zip(schedule.stages, schedule.ends):
        if iteration <= end:
            return row
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 100
    iterations: int = 100
    knowledge: Knowledge = Knowledge.FULL
    schedule: Optional[StageSchedule] = None
    rng_seed: int = 0
    position_bound_mode: BoundMode = BoundMode.CLAMP

    def __post_init__(self):
        if int(self.particles) != self.particles or self.particles < 1:
            raise ConfigError(f"particles must be >= 1, got {self.particles}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise ConfigError(f"rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}")
        object.__setattr__(self, "knowledge", Knowledge(self.knowledge))
        object.__setattr__(self, "position_bound_mode", BoundMode(self.position_bound_mode))
        if self.schedule is None:
            object.__setattr__(self, "schedule", StageSchedule.equal(self.iterations))
        elif self.schedule.iterations != self.iterations:
            raise ConfigError(
                f"schedule covers {self.schedule.iterations} iterations, "
                f"config asks for {self.iterations}")


@dataclass
class SwarmState:
    positions: np.ndarray            # (P, M, N) int levels
    velocities: np.ndarray           # (P, M, N) in [-1, 1]
    values: np.ndarray               # (P,) objective of current positions
    personal_best_positions: np.ndarray
    personal_best_values: np.ndarray
    global_best_position: np.ndarray
    global_best_value: float
    n_levels: int
    iteration: int = 0


@dataclass
class OptimizationResult:
    best_profile: PhaseProfile
    best_value: float
    initial_value: float
    suppression_history: np.ndarray
    fitness_history: np.ndarray
    wall_time: float
    evaluations: int
    final_state: SwarmState = field(repr=False, default=None)


class SidelobeObjective:
    """Sidelobe suppression (dB) of a level matrix; lower is better.

    Evaluates exactly ``sll_objective(compute_pattern(...), masks)``.
    """

    def __init__(self, geometry: ArrayGeometry, masks: MaskSet):
        self.geometry = geometry
        self.masks = masks
        self._engine = get_engine(geometry, masks.grid)
        self._table = level_phases(geometry.resolution_bits)

    def __call__(self, levels: np.ndarray) -> float:
        db = self._engine.magnitude_db(self._table[np.asarray(levels) - 1])
        return sll_objective(FarFieldPattern(self.masks.grid, db), self.masks)


def particle_streams(seed: int, particles: int) -> list[np.random.Generator]:
    """One independent generator per particle, spawned from a master seed."""
    children = np.random.SeedSequence(int(seed)).spawn(particles)
    return [np.random.default_rng(s) for s in children]


def random_levels(rng: np.random.Generator, shape, n_levels: int) -> np.ndarray:
    """Uniform integer levels via ``round(L * u + 0.5)``, values above L remapped to L."""
    u = rng.random(shape)
    lv = np.floor(n_levels * u + 1.0).astype(np.int64)  # round-half-up of L*u + 0.5
    return np.minimum(lv, n_levels)


def discard_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """0/1 matrix with P(0) = rate."""
    return (rng.random(shape) >= rate).astype(float)


def _evaluate(objective, positions, workers: int) -> np.ndarray:
    def one(p):
        try:
            return objective(positions[p])
        except Exception as exc:
            raise RuntimeError(f"objective failed for particle {p}: {exc}") from exc

    idx = range(len(positions))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(one, idx))
    else:
        vals = [one(p) for p in idx]
    return np.asarray(vals, dtype=float)


def init_swarm(config: PsoConfig, geometry: ArrayGeometry,
               knowledge_profile: Optional[PhaseProfile],
               objective: Callable[[np.ndarray], float],
               streams: Optional[list[np.random.Generator]] = None,
               workers: int = 1) -> SwarmState:
    """Initial positions/velocities per knowledge mode, evaluated once."""
    if config.knowledge is Knowledge.ZERO:
        if knowledge_profile is not None:
            raise ConfigError("zero-knowledge run must not be given a knowledge profile")
    elif knowledge_profile is None:
        raise ConfigError(f"{config.knowledge.value}-knowledge run needs a knowledge profile")
    else:
        knowledge_profile.check_geometry(geometry)

    P, shape, L = config.particles, geometry.shape, geometry.levels
    streams = streams if streams is not None else particle_streams(config.rng_seed, P)
    positions = np.empty((P, *shape), dtype=np.int64)
    velocities = np.empty((P, *shape))
    for p, rng in enumerate(streams):
        # both draws always happen so streams stay aligned across knowledge modes
        velocities[p] = 2.0 * rng.random(shape) - 1.0
        positions[p] = random_levels(rng, shape, L)
        if config.knowledge is Knowledge.FULL or (
                config.knowledge is Knowledge.PARTIAL and p == 0):
            positions[p] = knowledge_profile.levels

    values = _evaluate(objective, positions, workers)
    best = int(np.argmin(values))
    return SwarmState(
        positions=positions,
        velocities=velocities,
        values=values,
        personal_best_positions=positions.copy(),
        personal_best_values=values.copy(),
        global_best_position=positions[best].copy(),
        global_best_value=float(values[best]),
        n_levels=L,
    )


def step(state: SwarmState, params: StageParams,
         objective: Callable[[np.ndarray], float],
         streams: list[np.random.Generator],
         bound_mode: BoundMode = BoundMode.CLAMP,
         workers: int = 1) -> SwarmState:
    """Advance every particle by one iteration and return the new state."""
    x = state.positions
    P, shape = x.shape[0], x.shape[1:]
    L = state.n_levels
    gbest = state.global_best_position

    velocities = np.empty_like(state.velocities)
    for p, rng in enumerate(streams):
        r1, r2 = rng.random(2)
        keep1 = discard_mask(rng, shape, params.d1)
        keep2 = discard_mask(rng, shape, params.d2)
        v = (params.w * state.velocities[p]
             + params.c1 * r1 * keep1 * (state.personal_best_positions[p] - x[p])
             + params.c2 * r2 * keep2 * (gbest - x[p]))
        velocities[p] = np.clip(v, -1.0, 1.0)

    moved = np.floor(x + velocities + 0.5).astype(np.int64)
    if BoundMode(bound_mode) is BoundMode.WRAP:
        positions = np.mod(moved - 1, L) + 1
    else:
        positions = np.clip(moved, 1, L)

    values = _evaluate(objective, positions, workers)

    pbest_pos = state.personal_best_positions.copy()
    pbest_val = state.personal_best_values.copy()
    gbest_pos = state.global_best_position
    gbest_val = state.global_best_value
    for p in range(P):
        if values[p] < pbest_val[p]:
            pbest_val[p] = values[p]
            pbest_pos[p] = positions[p]
        if values[p] < gbest_val:
            gbest_val = float(values[p])
            gbest_pos = positions[p].copy()

    return replace(state, positions=positions, velocities=velocities, values=values,
                   personal_best_positions=pbest_pos, personal_best_values=pbest_val,
                   global_best_position=gbest_pos, global_best_value=gbest_val,
                   iteration=state.iteration + 1)


def run(config: PsoConfig, geometry: ArrayGeometry, beams: Sequence[BeamSpec],
        masks: MaskSet, workers: int = 1, until: Optional[int] = None,
        callback: Optional[Callable[[SwarmState], None]] = None) -> OptimizationResult:
    """Optimize the level matrix to minimize the sidelobe objective.

    ``until`` stops early after that iteration while keeping the schedule of
    the full run; histories then hold ``until`` entries.
    """
    if tuple(beams) != masks.beams:
        raise DomainError("masks were built for a different beam list")
    t0 = time.perf_counter()
    objective = SidelobeObjective(geometry, masks)
    knowledge = None
    if config.knowledge is not Knowledge.ZERO:
        knowledge = superpose_profiles(geometry, beams)
    streams = particle_streams(config.rng_seed, config.particles)
    state = init_swarm(config, geometry, knowledge, objective, streams, workers)
    initial = state.global_best_value

    T = config.iterations if until is None else min(int(until), config.iterations)
    suppression = np.empty(T)
    fitness = np.empty(T)
    for t in range(1, T + 1):
        params = stage_params(config.schedule, t)
        state = step(state, params, objective, streams, config.position_bound_mode, workers)
        suppression[t - 1] = state.global_best_value
        fitness[t - 1] = float(np.sum(state.values))
        if callback is not None:
            callback(state)

    return OptimizationResult(
        best_profile=PhaseProfile(state.global_best_position, geometry.resolution_bits),
        best_value=state.global_best_value,
        initial_value=initial,
        suppression_history=suppression,
        fitness_history=fitness,
        wall_time=time.perf_counter() - t0,
        evaluations=config.particles * (T + 1),
        final_state=state,
    )
