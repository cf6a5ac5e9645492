"""Discrete synchronous round model layered on a converged simulation.

Once the fleet has converged to a common traversing time, the protocol
advances in rounds of that duration: in each round the cyclically
adjacent (+, -) pairs meet, the meeting time is the later of the two
boundary arrivals, and the pair re-arrives at the opposite boundaries one
traversing time later.  Lifting a converged trace into this model and
stepping it must reproduce the engine's meetings.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace

from . import words
from .engine import Trace


class NotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class RoundState:
    k: int
    t0: float
    t_round: float  # realized common traversing time used as round width
    te: tuple[float, ...]  # latest boundary-arrival time per robot
    pos: tuple[float, ...]  # position at that arrival (a contact point)
    ori: tuple[int, ...]
    y: tuple[float, ...]  # boundary values frozen at t0 (y[n-1] = L)
    radii: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.te)

    def round_start(self) -> float:
        return self.t0 + self.k * self.t_round


@dataclass(frozen=True)
class MeetingSet:
    meetings: tuple[tuple[int, float], ...]  # (boundary index, meeting time)


def _reconstruct_states_at(trace: Trace, t0: float):
    """Kinematic state of every robot at time t0 from its last trace event."""
    n = trace.n
    state = {}
    for i in range(n):
        state[i] = {
            "t": 0.0,
            "p": trace.initial_positions[i],
            "o": trace.initial_orientations[i],
            "a": 1,
        }
    for ev in trace.events:
        if ev.time > t0:
            break
        for (i, p, o, a) in ev.states:
            state[i] = {"t": ev.time, "p": p, "o": o, "a": a}
    speeds = [rb.v for rb in trace.fleet.robots]
    out = []
    for i in range(n):
        s = state[i]
        p = s["p"] + speeds[i] * s["a"] * s["o"] * (t0 - s["t"])
        out.append({"p": p, "o": s["o"], "a": s["a"]})
    return out


def _boundaries_at(trace: Trace, t0: float):
    last = None
    for ev in trace.events:
        if ev.time > t0:
            break
        last = ev
    if last is None:
        raise NotConvergedError("no events before t0")
    return list(last.y_snapshot), list(last.e_snapshot)


def choose_t0(trace: Trace, search_rounds: float = 4.0,
              after: float | None = None) -> float:
    """Midpoint of the largest event-free gap shortly after convergence.

    The search is capped to a few round-widths past ``after`` (default:
    the convergence time) so the lifted model has trace left to compare
    against; callers that converged deeper pass a later ``after``.
    """
    if trace.converged_at is None:
        raise NotConvergedError("trace never reached the convergence criterion")
    t_c = trace.converged_at if after is None else after
    horizon = t_c + search_rounds * trace.t_star
    times = [ev.time for ev in trace.events if t_c <= ev.time <= horizon]
    if len(times) < 2:
        raise NotConvergedError("not enough post-convergence events to place t0")
    best_gap, best_mid = -1.0, None
    for a, b in zip(times, times[1:]):
        if b - a > best_gap:
            best_gap, best_mid = b - a, 0.5 * (a + b)
    if best_gap <= 0.0:
        raise NotConvergedError("no event-free gap after convergence")
    return best_mid


def lift_from_trace(trace: Trace, tolerance: float = 1e-3,
                    t0: float | None = None, after: float | None = None) -> RoundState:
    """Initial round state from a converged trace.

    Waiting robots carry te = t0; moving robots the exact time their zone
    reaches the boundary ahead.  Boundary values are frozen at t0 and the
    round width is the realized common traversing time (median of the e
    snapshot, within numerical noise of the closed form).
    """
    if trace.converged_at is None:
        raise NotConvergedError("trace never reached the convergence criterion")
    if t0 is None:
        t0 = choose_t0(trace, after=after)
    y_vals, e_vals = _boundaries_at(trace, t0)
    dev = max(abs(e - trace.t_star) for e in e_vals) / trace.t_star
    if dev > tolerance:
        raise NotConvergedError(f"deviation {dev} above tolerance {tolerance} at t0")
    t_round = statistics.median(e_vals)
    n = trace.n
    radii = [rb.r for rb in trace.fleet.robots]
    speeds = [rb.v for rb in trace.fleet.robots]
    kin = _reconstruct_states_at(trace, t0)
    te, pos, ori = [], [], []
    for i in range(n):
        s = kin[i]
        left = 0.0 if i == 0 else y_vals[i - 1]
        right = trace.fleet.L if i == n - 1 else y_vals[i]
        if s["a"] == 0:
            te.append(t0)
            pos.append(s["p"])
        elif s["o"] > 0:
            contact = right - radii[i]
            te.append(t0 + (contact - s["p"]) / speeds[i])
            pos.append(contact)
        else:
            contact = left + radii[i]
            te.append(t0 + (s["p"] - contact) / speeds[i])
            pos.append(contact)
        ori.append(s["o"])
    return RoundState(
        k=0, t0=t0, t_round=t_round,
        te=tuple(te), pos=tuple(pos), ori=tuple(ori),
        y=tuple(y_vals), radii=tuple(radii),
    )


def meeting_pairs(state: RoundState) -> list[int]:
    w = words.Word(tuple(state.ori))
    return words.meeting_pairs(w)


def is_interlaced(state: RoundState) -> tuple[bool, list[int]]:
    return words.is_interlaced(words.Word(tuple(state.ori)))


def step_round(state: RoundState) -> tuple[RoundState, MeetingSet]:
    """One round: adjacent (+,-) pairs meet and swap to opposite contacts."""
    n = state.n
    te = list(state.te)
    pos = list(state.pos)
    ori = list(state.ori)
    meetings = []
    for j in meeting_pairs(state):
        left, right = j, (j + 1) % n
        m = max(state.te[left], state.te[right])
        meetings.append((j, m))
        te[left] = te[right] = m + state.t_round
        ori[left], ori[right] = -1, 1
        left_val = 0.0 if left == 0 else state.y[left - 1]
        right_val = state.y[right]  # y[n-1] = L; right robot heads to its right bound
        pos[left] = left_val + state.radii[left]
        pos[right] = right_val - state.radii[right]
    nxt = replace(state, k=state.k + 1, te=tuple(te), pos=tuple(pos), ori=tuple(ori))
    return nxt, MeetingSet(meetings=tuple(sorted(meetings)))


def run_rounds(state: RoundState, count: int) -> tuple[list[RoundState], list[MeetingSet]]:
    states = [state]
    meetings = []
    for _ in range(count):
        state, ms = step_round(state)
        states.append(state)
        meetings.append(ms)
    return states, meetings


@dataclass
class SyncReport:
    ok: bool
    k0: int | None
    sync_round: int | None
    target: float | None
    first_violation: tuple[int, int, float] | None  # (robot, round, |error|)

    def __bool__(self) -> bool:
        return self.ok


def check_synchronization(states: list[RoundState], atol: float = 1e-9) -> SyncReport:
    """Balanced interlaced fleets synchronize all event times within n/2
    rounds of reaching the interlaced configuration."""
    k0 = None
    for s in states:
        n = s.n
        if min(s.ori.count(1), s.ori.count(-1)) * 2 != n:
            continue
        if is_interlaced(s)[0]:
            k0 = s.k
            break
    if k0 is None:
        return SyncReport(ok=False, k0=None, sync_round=None, target=None,
                          first_violation=None)
    base = next(s for s in states if s.k == k0)
    m0 = max(base.te)
    sync_round = k0 + base.n // 2
    for s in states:
        if s.k < sync_round:
            continue
        expect = (s.k - k0) * s.t_round + m0
        for i, t in enumerate(s.te):
            if abs(t - expect) > atol:
                return SyncReport(ok=False, k0=k0, sync_round=sync_round,
                                  target=expect, first_violation=(i, s.k, abs(t - expect)))
    return SyncReport(ok=True, k0=k0, sync_round=sync_round,
                      target=(states[-1].k - k0) * base.t_round + m0,
                      first_violation=None)


@dataclass
class EquivalenceReport:
    ok: bool
    rounds: int
    model_meetings: int
    engine_meetings: int
    max_time_err: float
    max_pos_err: float
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def compare_with_engine(trace: Trace, n_rounds: int = 100,
                        tol: float = 1e-6, t0: float | None = None,
                        after: float | None = None) -> EquivalenceReport:
    """Step the round model and match it meeting-for-meeting against the
    engine trace over the same window."""
    state = lift_from_trace(trace, t0=t0, after=after)
    t_end = state.t0 + n_rounds * state.t_round
    model = []  # (time, boundary, left contact, right contact)
    for _ in range(n_rounds):
        nxt, ms = step_round(state)
        for j, m in ms.meetings:
            left, right = j, (j + 1) % state.n
            bound = trace.fleet.L if j == state.n - 1 else state.y[j]
            model.append((m, j, bound - state.radii[left],
                          (0.0 if right == 0 else bound) + state.radii[right]))
        state = nxt
    engine = []
    for ev in trace.events:
        if ev.kind == "meeting" and state.t0 < ev.time <= t_end:
            engine.append((ev.time, ev.boundary, ev.states[0][1], ev.states[1][1]))
    if trace.events and trace.events[-1].time < t_end:
        return EquivalenceReport(False, n_rounds, len(model), len(engine), 0.0, 0.0,
                                 detail="trace ends before the comparison window")
    # boundary-major order: near-simultaneous meetings may sort either way
    # by time alone, but per boundary the meeting sequence is unambiguous
    model.sort(key=lambda m: (m[1], m[0]))
    engine.sort(key=lambda m: (m[1], m[0]))
    if len(model) != len(engine):
        return EquivalenceReport(False, n_rounds, len(model), len(engine), 0.0, 0.0,
                                 detail="meeting counts differ")
    max_dt = 0.0
    max_dp = 0.0
    for (tm, jm, la, ra), (te_, je, lb, rb) in zip(model, engine):
        if jm != je:
            return EquivalenceReport(False, n_rounds, len(model), len(engine),
                                     max_dt, max_dp,
                                     detail=f"pair mismatch at t={te_}: {jm} vs {je}")
        max_dt = max(max_dt, abs(tm - te_))
        max_dp = max(max_dp, abs(la - lb), abs(ra - rb))
    ok = max_dt <= tol and max_dp <= tol
    return EquivalenceReport(ok, n_rounds, len(model), len(engine), max_dt, max_dp)


def round_report_rows(states: list[RoundState],
                      meeting_sets: list[MeetingSet]) -> list[str]:
    """`round,meetings,n_bal,interlaced,max_event_offset` CSV rows."""
    rows = []
    for s, ms in zip(states, meeting_sets):
        n_bal = min(s.ori.count(1), s.ori.count(-1))
        inter = is_interlaced(s)[0]
        start = s.round_start()
        offs = [t - start for t in s.te if t >= start]
        max_off = max(offs) if offs else 0.0
        rows.append(f"{s.k},{len(ms.meetings)},{n_bal},{int(inter)},{max_off:.9f}")
    return rows
