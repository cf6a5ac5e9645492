"""Exact continuous-time, event-driven execution of the patrolling protocol.

Robots move at constant speed between events, so every event time has a
closed form; nothing is time-stepped.  The four event kinds:

* discovery - two approaching robots with opposite orientations touch
  communication zones and initialize their common boundary, reversing.
* catch - same-orientation contact; the chasing robot parks at the new
  boundary, the caught robot keeps going.
* arrival - a robot's zone touches a boundary it knows; it parks there
  unless the neighbor is already waiting.
* meeting - both robots of a pair are at their common boundary; the
  boundary moves by the pairwise weighted average (skipped for the fixed
  seam boundary), and both reverse reactivated.

The seam at position 0 == L is a fixed boundary between the last and
first robots (it is never averaged); each of the two learns it by
arriving there, and the pair never produces discovery or catch events
across it.

At a meeting both positions re-pin to the *updated* boundary's contact
points, so the following traversal takes exactly the updated traversing
time.  This is the discrete-asynchronous reading of the protocol and is
what makes the event times reproducible by the matrix oracle and the
round model to tight tolerances.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .fleet import FleetConfig, GoalPartition, RobotParams, StaticallyCoverableError, compute_t_star

NAN = float("nan")

TIME_EPS = 1e-9  # events closer than this are simultaneous
CONVERGENCE_RTOL = 1e-3  # tooling threshold recorded in trace metadata


class AssumptionError(ValueError):
    """An initial state violating A1/A2/A3 (message names the assumption)."""


class DeadlockError(RuntimeError):
    """No future event exists; unreachable when A2 holds."""


def boundary_consensus_update(y_prev: float, y_next: float,
                              v_left: float, v_right: float,
                              r_left: float, r_right: float) -> float:
    """Pairwise weighted-average boundary update at a meeting."""
    return (v_right * (y_prev + 2.0 * r_left) + v_left * (y_next - 2.0 * r_right)) / (
        v_left + v_right
    )


@dataclass(frozen=True)
class TraceEvent:
    time: float
    kind: str  # discovery | catch | arrival | meeting
    robot_a: int  # 0-based index of first participant (left robot for pair events)
    robot_b: int | None
    boundary: int  # 0-based boundary index; n-1 is the seam
    y_value: float
    e_a: float
    e_b: float
    updated: bool
    y_snapshot: tuple[float, ...]
    e_snapshot: tuple[float, ...]
    # post-event kinematic state of the participants: (robot, p, o, a)
    states: tuple[tuple[int, float, int, int], ...]


@dataclass
class Trace:
    fleet: FleetConfig
    t_star: float
    initial_positions: tuple[float, ...]
    initial_orientations: tuple[int, ...]
    events: list[TraceEvent] = field(default_factory=list)
    converged_at: float | None = None
    convergence_rtol: float = CONVERGENCE_RTOL
    parameter_changes: list[dict] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.fleet.n

    def meetings(self) -> list[TraceEvent]:
        return [ev for ev in self.events if ev.kind == "meeting"]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("time,kind,robot_a,robot_b,boundary_index,y_value,e_a,e_b\n")
            for ev in self.events:
                rb = "" if ev.robot_b is None else str(ev.robot_b + 1)
                fh.write(
                    f"{ev.time:.9f},{ev.kind},{ev.robot_a + 1},{rb},"
                    f"{ev.boundary + 1},{ev.y_value:.9f},{_fmt(ev.e_a)},{_fmt(ev.e_b)}\n"
                )


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.9f}"


@dataclass(frozen=True)
class _Candidate:
    time: float
    boundary: int
    robot: int  # arriving robot, or left robot of a pair contact
    pair: bool  # True: discovery/catch contact, False: arrival


class Simulation:
    """Event-driven simulation of one fleet on the cycle.

    Strictly sequential; deterministic given the initial state.  All
    positions are pinned to exact contact values at events, so repeated
    runs produce bit-identical traces.
    """

    def __init__(self, fleet: FleetConfig, positions, orientations, record_trace: bool = True):
        n = fleet.n
        if len(positions) != n or len(orientations) != n:
            raise ValueError("positions/orientations must match fleet size")
        self.fleet = fleet
        self.L = fleet.L
        self.n = n
        self.v = [rb.v for rb in fleet.robots]
        self.r = [rb.r for rb in fleet.robots]
        self._validate_initial(positions, orientations)

        self.t = 0.0
        self.p_pin = [float(p) for p in positions]
        self.t_pin = [0.0] * n
        self.o = [int(x) for x in orientations]
        self.act = [1] * n
        self.waiting_at: list[int | None] = [None] * n
        # boundary j sits between robots j and j+1; the seam (j = n-1) is fixed
        self.y: list[float | None] = [None] * (n - 1) + [self.L]
        self.seam_known_left = False   # robot 0 has recorded the seam
        self.seam_known_right = False  # robot n-1 has recorded the seam
        self.t_star = compute_t_star(fleet)
        self._pending_changes: list[dict] = []
        self.trace = Trace(
            fleet=fleet,
            t_star=self.t_star,
            initial_positions=tuple(self.p_pin),
            initial_orientations=tuple(self.o),
        ) if record_trace else None
        self._converged_at: float | None = None

    # -- validation ---------------------------------------------------

    def _validate_initial(self, positions, orientations):
        n = self.n
        if any(o not in (-1, 1) for o in orientations):
            raise AssumptionError("orientations must be -1 or +1")
        if len(set(orientations)) < 2:
            raise AssumptionError("A2 violated: all robots share one orientation")
        for i in range(n - 1):
            if positions[i] > positions[i + 1]:
                raise AssumptionError(
                    "A3 violated: initial positions must be sorted by robot index"
                )
        for i in range(n):
            if positions[i] - self.r[i] < 0 or positions[i] + self.r[i] > self.L:
                raise AssumptionError(
                    f"A3 violated: robot {i + 1} communication zone leaves [0, L]"
                )
        for i in range(n - 1):
            if positions[i] + self.r[i] > positions[i + 1] - self.r[i + 1]:
                raise AssumptionError(
                    f"A3 violated: zones overlap: {positions[i]}+{self.r[i]} > "
                    f"{positions[i + 1]}-{self.r[i + 1]}"
                )

    # -- geometry helpers ---------------------------------------------

    def position(self, i: int, t: float | None = None) -> float:
        t = self.t if t is None else t
        return self.p_pin[i] + self.v[i] * self.act[i] * self.o[i] * (t - self.t_pin[i])

    def left_value(self, i: int) -> float | None:
        return 0.0 if i == 0 else self.y[i - 1]

    def right_value(self, i: int) -> float | None:
        return self.y[i]  # y[n-1] == L

    def left_known(self, i: int) -> bool:
        return self.seam_known_left if i == 0 else self.y[i - 1] is not None

    def right_known(self, i: int) -> bool:
        return self.seam_known_right if i == self.n - 1 else self.y[i] is not None

    def patrolling(self, i: int) -> bool:
        return self.left_known(i) and self.right_known(i)

    def phase(self, i: int) -> str:
        return "patrolling" if self.patrolling(i) else "discovering"

    def all_boundaries_known(self) -> bool:
        return all(y is not None for y in self.y)

    def e_values(self) -> list[float]:
        """Traversing times per robot; nan while a boundary is undefined."""
        out = []
        for i in range(self.n):
            lo, hi = self.left_value(i), self.right_value(i)
            if lo is None or hi is None:
                out.append(NAN)
            else:
                out.append((hi - lo - 2.0 * self.r[i]) / self.v[i])
        return out

    def y_snapshot(self) -> tuple[float, ...]:
        return tuple(NAN if y is None else y for y in self.y)

    def max_deviation(self) -> float:
        """max_i |e_i - t_star| / t_star, or inf while boundaries are missing."""
        if not self.all_boundaries_known():
            return math.inf
        return max(abs(e - self.t_star) for e in self.e_values()) / self.t_star

    @property
    def converged_at(self) -> float | None:
        return self._converged_at

    # -- scheduling ----------------------------------------------------

    def _arrival_candidate(self, i: int) -> _Candidate | None:
        if not self.act[i]:
            return None
        if self.o[i] > 0:
            boundary = i
            target_val = self.L if i == self.n - 1 else self.y[i]
            if target_val is None:
                return None
            dist = (target_val - self.r[i]) - self.position(i)
        else:
            boundary = (i - 1) % self.n
            target_val = 0.0 if i == 0 else self.y[i - 1]
            if target_val is None:
                return None
            dist = self.position(i) - (target_val + self.r[i])
        t_hit = self.t + max(dist, 0.0) / self.v[i]
        return _Candidate(time=t_hit, boundary=boundary, robot=i, pair=False)

    def _contact_candidate(self, j: int) -> _Candidate | None:
        # only inner boundaries are discoverable; the seam is fixed
        if self.y[j] is not None:
            return None
        a, b = j, j + 1
        ua = self.v[a] * self.act[a] * self.o[a]
        ub = self.v[b] * self.act[b] * self.o[b]
        closing = ua - ub
        if closing <= 0.0:
            return None
        gap = (self.position(b) - self.r[b]) - (self.position(a) + self.r[a])
        t_hit = self.t + max(gap, 0.0) / closing
        return _Candidate(time=t_hit, boundary=j, robot=a, pair=True)

    def next_candidate(self) -> _Candidate | None:
        cands = []
        for i in range(self.n):
            c = self._arrival_candidate(i)
            if c is not None:
                cands.append(c)
        for j in range(self.n - 1):
            c = self._contact_candidate(j)
            if c is not None:
                cands.append(c)
        if not cands:
            return None
        t_min = min(c.time for c in cands)
        group = [c for c in cands if c.time <= t_min + TIME_EPS]
        # simultaneous events resolve in ascending boundary order
        return min(group, key=lambda c: (c.boundary, c.robot, not c.pair))

    def next_event_time(self) -> float | None:
        c = self.next_candidate()
        return None if c is None else max(c.time, self.t)

    # -- event application ----------------------------------------------

    def _pin(self, i: int, p: float, t: float) -> None:
        self.p_pin[i] = p
        self.t_pin[i] = t

    def _record(self, t, kind, a, b, boundary, y_value, updated=False):
        if self.trace is None:
            self._update_convergence(t)
            return
        e = self.e_values()
        states = [(a, self.p_pin[a], self.o[a], self.act[a])]
        if b is not None:
            states.append((b, self.p_pin[b], self.o[b], self.act[b]))
        ev = TraceEvent(
            time=t,
            kind=kind,
            robot_a=a,
            robot_b=b,
            boundary=boundary,
            y_value=y_value,
            e_a=e[a],
            e_b=e[b] if b is not None else NAN,
            updated=updated,
            y_snapshot=self.y_snapshot(),
            e_snapshot=tuple(e),
            states=tuple(states),
        )
        if self.trace.events and ev.time < self.trace.events[-1].time:
            raise AssertionError("event times must be non-decreasing")
        self.trace.events.append(ev)
        self._update_convergence(t)

    def _update_convergence(self, t: float) -> None:
        if self._converged_at is None and self.max_deviation() < CONVERGENCE_RTOL:
            self._converged_at = t
            if self.trace is not None:
                self.trace.converged_at = t

    def _apply_arrival(self, c: _Candidate) -> None:
        i, j = c.robot, c.boundary
        t_e = max(c.time, self.t)
        self.t = t_e
        if self.o[i] > 0:
            contact = (self.L if j == self.n - 1 else self.y[j]) - self.r[i]
        else:
            contact = (0.0 if i == 0 else self.y[j]) + self.r[i]
        self._pin(i, contact, t_e)
        if j == self.n - 1:
            if i == 0:
                self.seam_known_left = True
            else:
                self.seam_known_right = True
        left, right = j, (j + 1) % self.n
        partner = right if i == left else left
        if self.waiting_at[partner] == j:
            self._apply_meeting(j, t_e)
        else:
            self.act[i] = 0
            self.waiting_at[i] = j
            y_val = self.L if j == self.n - 1 else self.y[j]
            self._record(t_e, "arrival", i, None, j, y_val)

    def _apply_meeting(self, j: int, t_e: float) -> None:
        left = j
        right = (j + 1) % self.n
        assert self.o[left] == 1 and self.o[right] == -1, "meeting orientations out of order"
        updated = False
        if j < self.n - 1 and self.left_known(left) and self.right_known(right):
            y_new = boundary_consensus_update(
                self.left_value(left), self.right_value(right),
                self.v[left], self.v[right], self.r[left], self.r[right],
            )
            self.y[j] = y_new
            updated = True
        y_val = self.L if j == self.n - 1 else self.y[j]
        # re-pin both to the (possibly moved) boundary's contact points
        self._pin(left, y_val - self.r[left], t_e)
        self._pin(right, (0.0 if right == 0 else y_val) + self.r[right], t_e)
        self.o[left] = -1
        self.o[right] = 1
        self.act[left] = self.act[right] = 1
        self.waiting_at[left] = self.waiting_at[right] = None
        self._record(t_e, "meeting", left, right, j, y_val, updated=updated)

    def _apply_contact(self, c: _Candidate) -> None:
        j = c.boundary
        a, b = j, j + 1
        t_e = max(c.time, self.t)
        self.t = t_e
        # contact point from the left robot's zone edge
        contact = self.position(a, t_e) + self.r[a]
        self._pin(a, contact - self.r[a], t_e)
        self._pin(b, contact + self.r[b], t_e)
        if self.o[a] == 1 and self.o[b] == -1:
            assert self.act[a] and self.act[b], "discovery requires both robots moving"
            self.y[j] = contact
            self.o[a] = -1
            self.o[b] = 1
            self._record(t_e, "discovery", a, b, j, contact)
        elif self.o[a] == self.o[b]:
            self.y[j] = contact
            if self.o[a] == 1:
                catcher, caught = a, b
            else:
                catcher, caught = b, a
            assert self.act[catcher], "catcher must be moving"
            self.act[catcher] = 0
            self.waiting_at[catcher] = j
            self.act[caught] = 1
            self.waiting_at[caught] = None
            self._record(t_e, "catch", a, b, j, contact)
        else:
            raise AssertionError("contact between receding robots")

    # -- running ---------------------------------------------------------

    def step(self) -> TraceEvent | None:
        """Advance to and apply the next event; None if a parameter change
        was due first."""
        cand = self.next_candidate()
        if self._pending_changes and (
            cand is None or self._pending_changes[0]["t"] <= max(cand.time, self.t)
        ):
            self._apply_due_change()
            return None
        if cand is None:
            raise DeadlockError(
                "no future event: all robots waiting (impossible under A2)"
            )
        before = len(self.trace.events) if self.trace is not None else 0
        if cand.pair:
            self._apply_contact(cand)
        else:
            self._apply_arrival(cand)
        if self.trace is not None:
            return self.trace.events[-1] if len(self.trace.events) > before else None
        return None

    def run_until(self, t_end: float | None = None, max_events: int | None = None) -> Trace:
        processed = 0
        while True:
            if max_events is not None and processed >= max_events:
                break
            cand = self.next_candidate()
            if self._pending_changes and (
                cand is None or self._pending_changes[0]["t"] <= max(cand.time, self.t)
            ):
                if t_end is not None and self._pending_changes[0]["t"] > t_end:
                    self.t = t_end
                    break
                self._apply_due_change()
                continue
            if cand is None:
                raise DeadlockError(
                    "no future event: all robots waiting (impossible under A2)"
                )
            t_next = max(cand.time, self.t)
            if t_end is not None and t_next > t_end:
                self.t = t_end
                break
            if cand.pair:
                self._apply_contact(cand)
            else:
                self._apply_arrival(cand)
            processed += 1
        return self.trace

    def run_until_converged(self, rtol: float = CONVERGENCE_RTOL,
                            max_events: int = 2_000_000) -> Trace:
        for _ in range(max_events):
            if self.max_deviation() < rtol:
                return self.trace
            self.step()
        raise RuntimeError(f"not converged to rtol={rtol} after {max_events} events")

    # -- parameter changes -------------------------------------------------

    def schedule_parameter_change(self, t: float, robot_id: int,
                                  v: float | None = None, r: float | None = None) -> None:
        """Queue a speed/radius change for the robot with the given 1-based id."""
        if t < self.t:
            raise ValueError("cannot schedule a change in the past")
        self._pending_changes.append({"t": t, "robot_id": robot_id, "v": v, "r": r})
        self._pending_changes.sort(key=lambda ch: ch["t"])

    def _apply_due_change(self) -> None:
        ch = self._pending_changes.pop(0)
        self.apply_parameter_change(ch["robot_id"], v=ch["v"], r=ch["r"], at=ch["t"])

    def apply_parameter_change(self, robot_id: int, v: float | None = None,
                               r: float | None = None, at: float | None = None) -> None:
        idx = next((k for k, rb in enumerate(self.fleet.robots) if rb.id == robot_id), None)
        if idx is None:
            raise ValueError(f"no robot with id {robot_id}")
        new_v = self.v[idx] if v is None else float(v)
        new_r = self.r[idx] if r is None else float(r)
        RobotParams(id=robot_id, v=new_v, r=new_r)  # re-validate invariants
        radii = list(self.r)
        radii[idx] = new_r
        if self.L - 2.0 * sum(radii) <= 0:
            raise StaticallyCoverableError(
                "parameter change rejected: cycle would be statically coverable"
            )
        t_change = self.t if at is None else at
        if t_change < self.t:
            raise ValueError("cannot apply a change in the past")
        if new_v == self.v[idx] and new_r == self.r[idx]:
            # literal no-op: leave the state (and hence the trace) untouched
            if self.trace is not None:
                self.trace.parameter_changes.append(
                    {"t": t_change, "robot_id": robot_id, "v": new_v, "r": new_r}
                )
            return
        # pin everyone at the change time so past motion keeps old speeds
        for i in range(self.n):
            self._pin(i, self.position(i, t_change), t_change)
        self.t = t_change
        self.v[idx] = new_v
        self.r[idx] = new_r
        # parked robots re-pin to the boundary contact with the new radius
        if self.waiting_at[idx] is not None:
            j = self.waiting_at[idx]
            if idx == j:  # waiting at its right boundary
                val = self.L if j == self.n - 1 else self.y[j]
                self._pin(idx, val - new_r, t_change)
            else:
                val = 0.0 if idx == 0 else self.y[j]
                self._pin(idx, val + new_r, t_change)
        self.t_star = (self.L - 2.0 * sum(self.r)) / sum(self.v)
        self._converged_at = None
        if self.trace is not None:
            self.trace.converged_at = None
            self.trace.t_star = self.t_star
            self.trace.parameter_changes.append(
                {"t": t_change, "robot_id": robot_id, "v": new_v, "r": new_r}
            )

    # -- snapshots -----------------------------------------------------------

    def state_snapshot(self) -> dict:
        return {
            "t": self.t,
            "p": [self.position(i) for i in range(self.n)],
            "o": list(self.o),
            "a": list(self.act),
            "waiting_at": list(self.waiting_at),
            "y": list(self.y),
            "v": list(self.v),
            "r": list(self.r),
        }


def random_initial_state(cfg: FleetConfig, rng: random.Random,
                         n_minus: int | None = None,
                         orientations: list[int] | None = None):
    """Random sorted positions with disjoint zones, plus orientations.

    Slack between zones is drawn from a uniform Dirichlet split, so zones
    never overlap or straddle the seam.  Orientation signs: explicit list,
    or a random subset of ``n_minus`` robots oriented backward (default
    n // 2).
    """
    n = cfg.n
    slack = cfg.free_length
    weights = [-math.log(rng.random()) for _ in range(n + 1)]
    total = sum(weights)
    gaps = [slack * w / total for w in weights]
    positions = []
    x = 0.0
    for i, rb in enumerate(cfg.robots):
        x += gaps[i] + rb.r
        positions.append(x)
        x += rb.r
    if orientations is None:
        k = n // 2 if n_minus is None else n_minus
        if not 1 <= k <= n - 1:
            raise AssumptionError("A2 violated: need both orientations present")
        backward = set(rng.sample(range(n), k))
        orientations = [-1 if i in backward else 1 for i in range(n)]
    return positions, orientations
