"""Fleet parameters and the closed-form goal partition of the cycle.

A fleet of n robots with speeds v_i and communication radii r_i shares a
cycle of length L.  The goal configuration assigns each robot a region it
can traverse (between boundary-contact positions) in the same common time

    t_star = (L - 2*sum(r)) / sum(v)

with region lengths d_i = v_i*t_star + 2*r_i and boundaries y_i the running
sums of the d_i (y_n = L).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

REL_TOL = 1e-9  # relative tolerance for closed-form identity checks


class StaticallyCoverableError(ValueError):
    """The cycle is covered by the radii alone; the protocol premise fails."""


@dataclass(frozen=True)
class RobotParams:
    id: int
    v: float  # maximum speed, m/s
    r: float  # communication radius, m

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"robot {self.id}: speed must be positive, got {self.v}")
        if self.r < 0:
            raise ValueError(f"robot {self.id}: radius must be non-negative, got {self.r}")


@dataclass(frozen=True)
class FleetConfig:
    """Robots in cycle order (index = position order) plus cycle length."""

    robots: tuple[RobotParams, ...]
    L: float

    def __post_init__(self):
        object.__setattr__(self, "robots", tuple(self.robots))
        if len(self.robots) < 2:
            raise ValueError("a fleet needs at least 2 robots")
        if self.L <= 0:
            raise ValueError("cycle length must be positive")
        if self.free_length <= 0:
            raise StaticallyCoverableError(
                f"L - 2*sum(r) = {self.free_length} <= 0: cycle is statically coverable"
            )

    @property
    def n(self) -> int:
        return len(self.robots)

    @property
    def speeds(self) -> tuple[float, ...]:
        return tuple(rb.v for rb in self.robots)

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(rb.r for rb in self.robots)

    @property
    def free_length(self) -> float:
        return self.L - 2.0 * sum(self.radii)


@dataclass(frozen=True)
class GoalPartition:
    t_star: float
    d_star: tuple[float, ...]
    y_star: tuple[float, ...]


def compute_t_star(cfg: FleetConfig) -> float:
    """Common traversing time: free cycle length split by total speed."""
    return cfg.free_length / sum(cfg.speeds)


def compute_goal_partition(cfg: FleetConfig) -> GoalPartition:
    t_star = compute_t_star(cfg)
    d_star = tuple(rb.v * t_star + 2.0 * rb.r for rb in cfg.robots)
    y_star = []
    acc = 0.0
    for d in d_star:
        acc += d
        y_star.append(acc)
    # the running sum must close the cycle exactly (up to float roundoff)
    if abs(y_star[-1] - cfg.L) > REL_TOL * max(abs(cfg.L), 1.0):
        raise AssertionError(f"partition does not close: {y_star[-1]} vs L={cfg.L}")
    y_star[-1] = cfg.L
    return GoalPartition(t_star=t_star, d_star=d_star, y_star=tuple(y_star))


def traversing_time(d: float, robot: RobotParams) -> float:
    """Time to cross a region of length d between contact configurations.

    Total function: negative when d < 2r (region narrower than the
    communication zone), which transient simulator states can produce.
    """
    return (d - 2.0 * robot.r) / robot.v


@dataclass
class FleetScenario:
    """A fleet plus the optional initial state / scheduled changes from JSON."""

    config: FleetConfig
    positions: list[float] | None = None
    orientations: list[int] | None = None
    changes: list[dict] = field(default_factory=list)


def fleet_from_dict(doc: dict) -> FleetScenario:
    robots = []
    positions = []
    orientations = []
    have_state = True
    for entry in doc["robots"]:
        robots.append(RobotParams(id=int(entry["id"]), v=float(entry["v"]), r=float(entry["r"])))
        if "p0" in entry and "o0" in entry:
            positions.append(float(entry["p0"]))
            orientations.append(int(entry["o0"]))
        else:
            have_state = False
    cfg = FleetConfig(robots=tuple(robots), L=float(doc["L"]))
    changes = [dict(ev) for ev in doc.get("events", [])]
    return FleetScenario(
        config=cfg,
        positions=positions if have_state else None,
        orientations=orientations if have_state else None,
        changes=changes,
    )


def load_fleet_json(path) -> FleetScenario:
    with open(path) as fh:
        return fleet_from_dict(json.load(fh))
