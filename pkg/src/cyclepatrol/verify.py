"""Machine-checkable property suites over the consensus matrices, the
word calculus, the round model, and the simulator's conservation laws.

Each suite returns a SuiteResult with per-check outcomes; the CLI maps a
failing suite to exit code 3.  The suites are sized so the full set runs
in well under a few minutes; the acceptance tests call them at the sizes
the criteria demand.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import consensus, metrics, rounds, words
from .engine import Simulation, random_initial_state
from .fleet import FleetConfig, RobotParams, compute_t_star


@dataclass
class SuiteResult:
    name: str
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    def summary_lines(self) -> list[str]:
        return [
            f"[{'PASS' if ok else 'FAIL'}] {self.name}: {name}"
            + (f" ({detail})" if detail else "")
            for name, ok, detail in self.checks
        ]


def random_fleet(rng: random.Random, n: int | None = None,
                 v_max: float = 10.0, with_radii: bool = True) -> FleetConfig:
    n = n if n is not None else rng.randint(2, 32)
    speeds = [rng.uniform(0.5, v_max) for _ in range(n)]
    L = rng.uniform(500.0, 2000.0)
    if with_radii:
        budget = 0.25 * L / (2 * n)
        radii = [rng.uniform(0.0, budget) for _ in range(n)]
    else:
        radii = [0.0] * n
    robots = tuple(
        RobotParams(id=i + 1, v=speeds[i], r=radii[i]) for i in range(n)
    )
    return FleetConfig(robots=robots, L=L)


def run_to_deep_convergence(sim: Simulation, rtol: float = 1e-11,
                            floor_rtol: float = 1e-8,
                            max_events: int = 400_000) -> float:
    """Step until max|e - t_star|/t_star drops below rtol, accepting the
    float fixed point if the deviation stops improving above it."""
    chunk = max(8, 4 * sim.n)
    best = math.inf
    done = 0
    while done < max_events:
        dev = sim.max_deviation()
        if dev < rtol:
            return dev
        if dev < best * (1.0 - 1e-6):
            best = dev
        elif dev < floor_rtol:
            return dev  # stalled at the arithmetic floor, good enough
        for _ in range(chunk):
            sim.step()
        done += chunk
    raise RuntimeError(f"no convergence to {rtol} within {max_events} events")


def converged_simulation(cfg: FleetConfig, seed: int, n_minus: int | None = None,
                         rtol: float = 1e-11, tail_rounds: float = 0.0) -> Simulation:
    rng = random.Random(seed)
    positions, orientations = random_initial_state(cfg, rng, n_minus=n_minus)
    sim = Simulation(cfg, positions, orientations)
    run_to_deep_convergence(sim, rtol=rtol)
    if tail_rounds:
        sim.run_until(t_end=sim.t + tail_rounds * sim.t_star)
    return sim


# -- consensus suite ------------------------------------------------------

def consensus_suite(n_fleets: int = 200, seed: int = 7,
                    engine_crosschecks: int = 3) -> SuiteResult:
    res = SuiteResult("consensus")
    rng = random.Random(seed)
    bad_spectrum = 0
    slow = 0
    worst_sweeps = 0
    for _ in range(n_fleets):
        n = rng.randint(2, 32)
        speeds = [rng.uniform(0.2, 10.0) for _ in range(n)]
        m = consensus.build_matrices(speeds)
        rep = consensus.check_spectrum(m)
        if not rep.ok:
            bad_spectrum += 1
        # traversing times of a random boundary partition of an L=1000 cycle
        cuts = sorted(rng.uniform(0.0, 1000.0) for _ in range(n - 1))
        ys = [0.0] + cuts + [1000.0]
        e0 = [(ys[i + 1] - ys[i]) / speeds[i] for i in range(n)]
        _, sweeps, converged = consensus.iterate_consensus(m, e0)
        worst_sweeps = max(worst_sweeps, sweeps)
        if not converged:
            slow += 1
    res.add("spectra_in_unit_interval", bad_spectrum == 0,
            f"{n_fleets} fleets, {bad_spectrum} violations")
    res.add("round_robin_reaches_weighted_mean", slow == 0,
            f"worst case {worst_sweeps} sweeps")
    worst_err = 0.0
    checked = 0
    for k in range(engine_crosschecks):
        cfg = random_fleet(rng, n=rng.randint(3, 8))
        inner = random.Random(seed + 100 + k)
        positions, orientations = random_initial_state(
            cfg, inner, n_minus=inner.randint(1, cfg.n - 1))
        sim = Simulation(cfg, positions, orientations)
        sim.run_until(max_events=3000)
        ok, err, count = consensus.replay_trace(sim.trace)
        worst_err = max(worst_err, err)
        checked += count
    res.add("engine_replay_matches", worst_err <= 1e-9,
            f"{checked} updates, max err {worst_err:.3g}")
    return res


# -- word-calculus suite ---------------------------------------------------

def _word_checks(w: words.Word, res_counters: dict) -> None:
    """Evolve one word to its interlaced configuration, checking every
    lemma-level property along the way."""
    n = w.n
    ev = words.TrackedEvolution(w)
    rounds_taken = 0
    while not words.is_interlaced(ev.word)[0]:
        if rounds_taken >= n:
            raise words.CalculusViolation(f"{w} did not interlace within {n} rounds")
        prev_count = len(ev.ids)
        prev_spans = dict(ev.ids)
        ev.step()
        rounds_taken += 1
        if len(ev.ids) > prev_count:
            raise words.CalculusViolation(f"{w}: sequence count grew")
        # speed limit: spans move at most one position per round (a merged
        # span's start comes from the absorbed partner, so skip those)
        for sid, (st, ln) in ev.ids.items():
            if (sid in prev_spans and ln < n
                    and ev.rules[-1].get(sid) != words.Rule.MERGE):
                pst, _pln = prev_spans[sid]
                moves = {(pst - 1) % n, pst % n, (pst + 1) % n}
                if st not in moves:
                    raise words.CalculusViolation(f"{w}: sequence {sid} jumped")
    if rounds_taken >= max(w.n_bal, 1):
        raise words.CalculusViolation(
            f"{w} took {rounds_taken} rounds, bound is {w.n_bal}"
        )
    res_counters["words"] += 1
    res_counters["max_rounds"] = max(res_counters["max_rounds"], rounds_taken)

    # The collaborative-rule lemmas are oriented for a '+' majority; for a
    # '-' majority the dynamics mirror and Move+ plays the doomed role.
    plus_majority = w.n_plus >= w.n_minus
    doomed_rule = words.Rule.MOVE_MINUS if plus_majority else words.Rule.MOVE_PLUS
    forbidden_after = (
        (words.Rule.MOVE_PLUS, words.Rule.EXPAND)
        if plus_majority
        else (words.Rule.MOVE_MINUS, words.Rule.EXPAND)
    )
    # rule persistence per sequence id; doomed taint survives merges
    seen_reduce: dict[int, int] = {}
    doomed: set[int] = set()
    for k, rules in enumerate(ev.rules):
        for sid, rule in rules.items():
            if sid in seen_reduce:
                if rule not in (words.Rule.REDUCE, words.Rule.DISAPPEAR):
                    raise words.CalculusViolation(
                        f"{w}: sequence {sid} stopped reducing ({rule})"
                    )
            if rule in (words.Rule.REDUCE, words.Rule.DISAPPEAR) and sid not in seen_reduce:
                seen_reduce[sid] = ev.history[k][sid]  # length when it first reduced
            if rule == doomed_rule:
                doomed.add(sid)
            if sid in doomed and rule in forbidden_after:
                raise words.CalculusViolation(
                    f"{w}: sequence {sid} ran {rule} after {doomed_rule}"
                )
        for group in ev.merge_groups[k]:
            if group & doomed:
                doomed.add(min(group))
    # a sequence that reduces from length l dies after exactly l/2 rounds
    for sid, l0 in seen_reduce.items():
        death = None
        start = None
        for k, lengths in enumerate(ev.history):
            if sid in lengths and lengths[sid] == 0:
                death = k
                break
        for k, rules in enumerate(ev.rules):
            if rules.get(sid) in (words.Rule.REDUCE, words.Rule.DISAPPEAR):
                start = k
                break
        if death is not None and start is not None and death - start != l0 // 2:
            raise words.CalculusViolation(
                f"{w}: sequence {sid} reduced from {l0} in {death - start} rounds"
            )
    # sequences that ran the doomed direction never reach interlacing
    for sid in doomed:
        if sid in ev.ids:
            raise words.CalculusViolation(f"{w}: {doomed_rule} sequence {sid} survived")

    final = ev.word
    if final.n == 2 * final.n_bal:
        dec = words.decompose(final)
        if len(dec.sequences) != 1 or dec.sequences[0][1] != n:
            raise words.CalculusViolation(f"{w}: balanced endgame not a single cycle")
    else:
        # unbalanced absorbing behavior: every sequence slides through the
        # majority letters forever (Move+ for a '+' majority, mirrored else)
        absorbing = words.Rule.MOVE_PLUS if plus_majority else words.Rule.MOVE_MINUS
        probe = words.TrackedEvolution(final)
        for _ in range(min(n, 6)):
            probe.step()
            if any(r != absorbing for r in probe.rules[-1].values()):
                raise words.CalculusViolation(
                    f"{w}: interlaced word not in {absorbing} regime"
                )


def words_exhaustive_suite(max_n: int = 12) -> SuiteResult:
    res = SuiteResult("words-exhaustive")
    counters = {"words": 0, "max_rounds": 0}
    violation = None
    for n in range(2, max_n + 1):
        for bits in itertools.product((1, -1), repeat=n):
            w = words.Word(bits)
            if w.n_bal == 0:
                continue
            try:
                _word_checks(w, counters)
            except words.CalculusViolation as exc:
                violation = str(exc)
                break
        if violation:
            break
    res.add("exhaustive_calculus", violation is None,
            violation or f"{counters['words']} words <= n={max_n}, "
                         f"max {counters['max_rounds']} rounds")
    return res


def _step_batch(w: np.ndarray) -> np.ndarray:
    """Vectorized step over a batch of words (rows)."""
    plus = w == 1
    minus_next = np.roll(w, -1, axis=1) == -1
    pairs = plus & minus_next
    out = w.copy()
    out[pairs] = -1
    out[np.roll(pairs, 1, axis=1)] = 1
    return out


def words_random_suite(n: int = 64, samples: int = 10_000, seed: int = 11) -> SuiteResult:
    """Interlacing bound on large random words, vectorized; a scalar
    spot-check guards the vectorized step against the canonical one."""
    res = SuiteResult("words-random")
    rng = np.random.default_rng(seed)
    n_minus = rng.integers(1, n, size=samples)
    batch = np.ones((samples, n), dtype=np.int8)
    for row in range(samples):
        idx = rng.choice(n, size=n_minus[row], replace=False)
        batch[row, idx] = -1
    n_bal = np.minimum(n_minus, n - n_minus)
    remaining = np.arange(samples)
    w = batch.copy()
    rounds_taken = np.zeros(samples, dtype=np.int64)
    for k in range(n):
        pairs = (w == 1) & (np.roll(w, -1, axis=1) == -1)
        done = pairs.sum(axis=1) == n_bal[remaining]
        if done.any():
            remaining = remaining[~done]
            w = w[~done]
        if len(remaining) == 0:
            break
        w = _step_batch(w)
        rounds_taken[remaining] += 1
    res.add("all_random_words_interlace", len(remaining) == 0,
            f"{samples} words at n={n}")
    bound_ok = bool(np.all(rounds_taken < np.maximum(n_bal, 1)))
    res.add("interlace_bound_random", bound_ok,
            f"max rounds {int(rounds_taken.max())}")

    spot = np.random.default_rng(seed + 1)
    agree = True
    for _ in range(100):
        m = int(spot.integers(1, n))
        row = np.ones(n, dtype=np.int8)
        row[spot.choice(n, size=m, replace=False)] = -1
        scalar = words.Word(tuple(int(x) for x in row))
        vec = row[None, :].copy()
        for _ in range(5):
            if scalar.n_bal == 0:
                break
            scalar = words.step_word(scalar)
            vec = _step_batch(vec)
            if tuple(int(x) for x in vec[0]) != scalar.letters:
                agree = False
                break
    res.add("vectorized_step_matches_scalar", agree)
    return res


def words_suite(max_n: int = 12, random_n: int = 64,
                random_samples: int = 10_000, seed: int = 11) -> SuiteResult:
    res = SuiteResult("words")
    for sub in (words_exhaustive_suite(max_n),
                words_random_suite(random_n, random_samples, seed)):
        for name, ok, detail in sub.checks:
            res.add(name, ok, detail)
    return res


# -- round-model suite -----------------------------------------------------

def rounds_suite(instances: int = 20, n_rounds: int = 100, seed: int = 23,
                 tol: float = 1e-6) -> SuiteResult:
    res = SuiteResult("rounds")
    rng = random.Random(seed)
    worst_dt = 0.0
    worst_dp = 0.0
    mismatches = []
    bad_counts = 0
    for k in range(instances):
        n = rng.randint(3, 10)
        cfg = random_fleet(rng, n=n)
        n_minus = rng.randint(1, n - 1)
        sim = converged_simulation(cfg, seed=seed * 1000 + k, n_minus=n_minus,
                                   rtol=1e-11)
        # lift where the deep-convergence run ended, not at the 1e-3 crossing
        lift_after = max(sim.trace.converged_at, sim.t - 4.0 * sim.t_star)
        state = rounds.lift_from_trace(sim.trace, after=lift_after)
        horizon = state.t0 + (n_rounds + 2) * state.t_round
        sim.run_until(t_end=horizon)
        rep = rounds.compare_with_engine(sim.trace, n_rounds=n_rounds, tol=tol,
                                         t0=state.t0)
        worst_dt = max(worst_dt, rep.max_time_err)
        worst_dp = max(worst_dp, rep.max_pos_err)
        if not rep.ok:
            mismatches.append(f"instance {k}: {rep.detail or 'tolerance exceeded'}")
            continue
        # interlaced regime: exactly n_bal meetings per round, and per full
        # n-round window each boundary hosts exactly n_bal of them
        n_bal = min(sim.trace.initial_orientations.count(1),
                    sim.trace.initial_orientations.count(-1))
        st = state
        counts = []
        per_boundary: dict[int, int] = {}
        full_windows = n_rounds // n
        for _ in range(full_windows * n):
            st, ms = rounds.step_round(st)
            counts.append(len(ms.meetings))
            for j, _t in ms.meetings:
                per_boundary[j] = per_boundary.get(j, 0) + 1
        if any(c != n_bal for c in counts):
            bad_counts += 1
        if any(per_boundary.get(j, 0) != full_windows * n_bal for j in range(n)):
            bad_counts += 1
    res.add("engine_equivalence", not mismatches,
            "; ".join(mismatches) or
            f"{instances} instances, max dt {worst_dt:.3g}s, max dp {worst_dp:.3g}m")
    res.add("interlaced_meeting_counts", bad_counts == 0,
            f"{bad_counts} instances off")
    return res


# -- conservation suite ------------------------------------------------------

def conservation_suite(total_events: int = 100_000, seed: int = 31,
                       rtol: float = 1e-9) -> SuiteResult:
    """Step random instances event by event, asserting the invariants the
    protocol preserves; runs until the requested event budget is spent."""
    res = SuiteResult("conservation")
    rng = random.Random(seed)
    events_done = 0
    violations: list[str] = []
    runs = 0
    worst_pair = 0.0
    while events_done < total_events and not violations:
        n = rng.randint(3, 12)
        cfg = random_fleet(rng, n=n)
        positions, orientations = random_initial_state(
            cfg, rng, n_minus=rng.randint(1, n - 1))
        sim = Simulation(cfg, positions, orientations)
        o_sum = sum(sim.o)
        invariant = cfg.L - 2.0 * sum(cfg.radii)
        runs += 1
        for _ in range(min(5000, total_events - events_done)):
            try:
                ev = sim.step()
            except Exception as exc:  # deadlock or internal assertion
                violations.append(f"run {runs}: {exc!r}")
                break
            events_done += 1
            if sum(sim.o) != o_sum:
                violations.append(f"run {runs}: orientation sum changed")
                break
            vals = [0.0] + [y for y in sim.y if y is not None]
            if any(b <= a for a, b in zip(vals, vals[1:])):
                violations.append(f"run {runs}: boundaries out of order")
                break
            if sim.y[n - 1] != cfg.L:
                violations.append(f"run {runs}: seam boundary moved")
                break
            if ev is not None and ev.kind == "meeting" and ev.updated:
                scale = max(abs(ev.e_a), abs(ev.e_b), 1.0)
                gap = abs(ev.e_a - ev.e_b) / scale
                worst_pair = max(worst_pair, gap)
                if gap > rtol:
                    violations.append(f"run {runs}: post-meeting times unequal")
                    break
            if sim.all_boundaries_known():
                e = sim.e_values()
                weighted = sum(v * x for v, x in zip(sim.v, e))
                if abs(weighted - invariant) > rtol * max(1.0, abs(invariant)):
                    violations.append(f"run {runs}: weighted e sum drifted")
                    break
        del sim  # traces are snapshot-heavy; reclaim between runs
    res.add("invariants_hold", not violations,
            "; ".join(violations) or
            f"{events_done} events over {runs} runs, worst pair gap {worst_pair:.2g}")
    return res


def pairwise_equalization_check(sim_events, rtol: float = 1e-9) -> tuple[bool, float]:
    """Post-meeting traversing times of the pair must match exactly."""
    worst = 0.0
    for ev in sim_events:
        if ev.kind == "meeting" and ev.updated:
            scale = max(abs(ev.e_a), abs(ev.e_b), 1.0)
            worst = max(worst, abs(ev.e_a - ev.e_b) / scale)
    return worst <= rtol, worst


# -- sweeps -------------------------------------------------------------------

def sweep_fleet_size(n_values, v: float = 2.0, r: float = 50.0,
                     L: float = 10_000.0, seed: int = 5,
                     measure: bool = True) -> list[dict]:
    rows = []
    for n in n_values:
        robots = tuple(RobotParams(id=i + 1, v=v, r=r) for i in range(n))
        cfg = FleetConfig(robots=robots, L=L)
        rows.append(_sweep_point(cfg, label=float(n), seed=seed + n, measure=measure))
    return rows


def sweep_capability_factor(factors, n: int = 6, v: float = 2.0, r: float = 50.0,
                            L: float = 10_000.0, seed: int = 5,
                            measure: bool = True) -> list[dict]:
    rows = []
    for k, f in enumerate(factors):
        robots = []
        for i in range(n):
            scale = f if i < 2 else 1.0
            robots.append(RobotParams(id=i + 1, v=v * scale, r=r * scale))
        cfg = FleetConfig(robots=tuple(robots), L=L)
        rows.append(_sweep_point(cfg, label=float(f), seed=seed + k, measure=measure))
    return rows


def _sweep_point(cfg: FleetConfig, label: float, seed: int, measure: bool) -> dict:
    t_star = compute_t_star(cfg)
    n = cfg.n
    n_bal = n // 2
    t_rev_pred = t_star * n / n_bal
    row = {
        "label": label,
        "n": n,
        "t_star": t_star,
        "t_rev_predicted": t_rev_pred,
        "t_rev_measured": math.nan,
        "rel_err": math.nan,
    }
    if measure:
        sim = converged_simulation(cfg, seed=seed, n_minus=n_bal, rtol=1e-9,
                                   tail_rounds=10.0 * n + 4)
        series = metrics.inter_meeting_times(sim.trace)
        vals = []
        for s in series.values():
            wins = metrics.windowed_revisit(s, max(n_bal, 1))
            if wins:
                vals.extend(wins[-2:])
        measured = sum(vals) / len(vals)
        row["t_rev_measured"] = measured
        row["rel_err"] = abs(measured - t_rev_pred) / t_rev_pred
    return row


ALL_SUITES = {
    "consensus": consensus_suite,
    "words": words_suite,
    "rounds": rounds_suite,
    "conservation": conservation_suite,
}
