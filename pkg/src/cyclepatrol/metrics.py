"""Performance quantities from traces: traversing times, inter-meeting
times, windowed revisit averages, and theorem-conformance verdicts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .engine import Trace
from .fleet import compute_t_star

PASS_REL_TOL = 0.01  # absorbs the asymptotic-convergence residual


def meetings_by_boundary(trace: Trace) -> dict[int, list[float]]:
    out: dict[int, list[float]] = {}
    for ev in trace.events:
        if ev.kind == "meeting":
            out.setdefault(ev.boundary, []).append(ev.time)
    return out


def inter_meeting_times(trace: Trace) -> dict[int, list[float]]:
    """Successive differences of meeting timestamps per boundary; fewer
    than two meetings give an empty series."""
    return {
        j: [b - a for a, b in zip(ts, ts[1:])]
        for j, ts in meetings_by_boundary(trace).items()
    }


def windowed_revisit(series: list[float], n_bal: int) -> list[float]:
    """Sliding mean over n_bal consecutive inter-meeting times."""
    if n_bal < 1:
        raise ValueError("n_bal must be at least 1")
    if len(series) < n_bal:
        return []
    return [sum(series[k:k + n_bal]) / n_bal for k in range(len(series) - n_bal + 1)]


def n_bal_of(trace: Trace) -> int:
    plus = sum(1 for o in trace.initial_orientations if o > 0)
    return min(plus, trace.n - plus)


@dataclass
class Verdict:
    name: str
    status: str  # PASS | FAIL | INCONCLUSIVE
    predicted: float | None = None
    measured: float | None = None
    rel_err: float | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "predicted": self.predicted,
            "measured": self.measured,
            "rel_err": self.rel_err,
        }


@dataclass
class PerformanceReport:
    t_star: float
    n_bal: int
    balanced: bool
    t_rev_predicted: float
    converged_at: float | None
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(v.status == "PASS" for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "n_bal": self.n_bal,
            "balanced": self.balanced,
            "t_rev_predicted": self.t_rev_predicted,
            "converged_at": self.converged_at,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "all_pass": self.all_pass,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def theorem_verdicts(trace: Trace, rel_tol: float = PASS_REL_TOL) -> PerformanceReport:
    """PASS/FAIL verdicts against the convergence and revisit-time claims.

    Verdicts come from the post-convergence tail only; a trace that never
    converged is INCONCLUSIVE, not FAIL.
    """
    t_star = compute_t_star(trace.fleet)
    n = trace.n
    n_bal = n_bal_of(trace)
    balanced = (2 * n_bal == n)
    t_rev = t_star * n / n_bal if n_bal else math.inf
    report = PerformanceReport(
        t_star=t_star,
        n_bal=n_bal,
        balanced=balanced,
        t_rev_predicted=t_rev,
        converged_at=trace.converged_at,
    )
    if trace.converged_at is None:
        report.verdicts = [
            Verdict("common_traversing_time", "INCONCLUSIVE"),
            Verdict("revisit_time", "INCONCLUSIVE"),
        ]
        return report

    final_e = trace.events[-1].e_snapshot
    dev = max(abs(e - t_star) for e in final_e) / t_star
    report.verdicts.append(
        Verdict(
            "common_traversing_time",
            "PASS" if dev <= rel_tol else "FAIL",
            predicted=t_star,
            measured=max(final_e, key=lambda e: abs(e - t_star)),
            rel_err=dev,
        )
    )

    # steady-state inter-meeting behavior, measured from the trailing window
    worst = 0.0
    measured = None
    enough = True
    for j, series in inter_meeting_times(trace).items():
        wins = windowed_revisit(series, max(n_bal, 1))
        take = wins[-3:]
        if not take:
            enough = False
            continue
        for wv in take:
            err = abs(wv - t_rev) / t_rev
            if err >= worst:
                worst, measured = err, wv
    name = "revisit_time_balanced" if balanced else "revisit_time_windowed"
    if measured is None or not enough:
        report.verdicts.append(Verdict(name, "INCONCLUSIVE", predicted=t_rev))
    else:
        report.verdicts.append(
            Verdict(
                name,
                "PASS" if worst <= rel_tol else "FAIL",
                predicted=t_rev,
                measured=measured,
                rel_err=worst,
            )
        )
    return report


def plot_data_rows(trace: Trace) -> list[str]:
    """`time,robot,e_i,f_i,windowed_f_i` rows, one per meeting."""
    n_bal = max(n_bal_of(trace), 1)
    rows = []
    last_meeting: dict[int, float] = {}
    history: dict[int, list[float]] = {}
    for ev in trace.events:
        if ev.kind != "meeting":
            continue
        j = ev.boundary
        f = ev.time - last_meeting[j] if j in last_meeting else math.nan
        last_meeting[j] = ev.time
        if not math.isnan(f):
            history.setdefault(j, []).append(f)
        tail = history.get(j, [])
        wf = sum(tail[-n_bal:]) / n_bal if len(tail) >= n_bal else math.nan
        rows.append(
            f"{ev.time:.9f},{ev.robot_a + 1},{_fmt(ev.e_a)},{_fmt(f)},{_fmt(wf)}"
        )
    return rows


def write_plot_data(trace: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("time,robot,e_i,f_i,windowed_f_i\n")
        for row in plot_data_rows(trace):
            fh.write(row + "\n")


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.9f}"


def point_passes(trace: Trace, point: float) -> list[tuple[float, int, int]]:
    """(time, robot, orientation) every time a robot's position crosses the
    point, reconstructed from the piecewise-linear trajectories."""
    n = trace.n
    speeds = [rb.v for rb in trace.fleet.robots]
    segs: dict[int, list[tuple[float, float, int, int]]] = {i: [] for i in range(n)}
    cur = {
        i: (0.0, trace.initial_positions[i], trace.initial_orientations[i], 1)
        for i in range(n)
    }
    for ev in trace.events:
        for (i, p, o, a) in ev.states:
            t0, p0, o0, a0 = cur[i]
            segs[i].append((t0, ev.time, p0, speeds[i] * a0 * o0))
            cur[i] = (ev.time, p, o, a)
    passes = []
    for i in range(n):
        for (t0, t1, p0, u) in segs[i]:
            if u == 0 or t1 <= t0:
                continue
            tc = t0 + (point - p0) / u
            if t0 < tc <= t1:
                passes.append((tc, i, 1 if u > 0 else -1))
    passes.sort()
    return passes


def point_revisit_times(trace: Trace, point: float) -> list[float]:
    """Intervals between same-robot, same-orientation passes over a point,
    in chronological order of the completing pass."""
    by_key: dict[tuple[int, int], list[float]] = {}
    for t, i, o in point_passes(trace, point):
        by_key.setdefault((i, o), []).append(t)
    out = []
    for ts in by_key.values():
        out.extend((b, b - a) for a, b in zip(ts, ts[1:]))
    out.sort()
    return [d for _, d in out]
