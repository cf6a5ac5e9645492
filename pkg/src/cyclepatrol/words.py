"""Cyclic orientation words and their rewrite calculus.

A word over {+1, -1} encodes the robot orientations at a round.  Stepping
the word flips every cyclically adjacent (+, -) pair (the meeting pairs,
which are automatically disjoint).  Maximal even alternating runs
"+-...+-" are *sequences*; between rounds each sequence follows one of
the rules Move+ / Move- / Expand / Reduce (plus Merge and Disappear),
determined by the letters around it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

PLUS = 1
MINUS = -1

_CHARS = {PLUS: "+", MINUS: "-"}
_VALUES = {"+": PLUS, "-": MINUS}


class CalculusViolation(AssertionError):
    """A word transition that the rewrite rules cannot explain."""


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...]

    def __post_init__(self):
        if len(self.letters) < 2:
            raise ValueError("a word needs at least 2 letters")
        if any(x not in (PLUS, MINUS) for x in self.letters):
            raise ValueError("letters must be +1 or -1")

    @classmethod
    def from_string(cls, s: str) -> "Word":
        return cls(tuple(_VALUES[c] for c in s))

    def __str__(self) -> str:
        return "".join(_CHARS[x] for x in self.letters)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def n_plus(self) -> int:
        return sum(1 for x in self.letters if x == PLUS)

    @property
    def n_minus(self) -> int:
        return self.n - self.n_plus

    @property
    def n_bal(self) -> int:
        return min(self.n_plus, self.n_minus)


def meeting_pairs(w: Word) -> list[int]:
    """Positions i with (w[i], w[i+1]) = (+, -), cyclically.

    Such pairs are pairwise disjoint: a position cannot be the '-' of one
    pair and the '+' of another.
    """
    n = w.n
    return [i for i in range(n) if w.letters[i] == PLUS and w.letters[(i + 1) % n] == MINUS]


def step_word(w: Word) -> Word:
    """One round: every meeting pair (+,-) flips to (-,+)."""
    if w.n_bal == 0:
        raise ValueError("A2 violated: word has a single orientation, no meetings possible")
    out = list(w.letters)
    n = w.n
    for i in meeting_pairs(w):
        out[i] = MINUS
        out[(i + 1) % n] = PLUS
    return Word(tuple(out))


def is_interlaced(w: Word) -> tuple[bool, list[int]]:
    """Interlaced iff the meeting pairs already number n_bal.

    Returns the witness pair-start positions.  Uniform words are rejected:
    n_bal = 0 cannot arise under the protocol's assumptions.
    """
    if w.n_bal == 0:
        raise ValueError("A2 violated: uniform orientations have n_bal = 0")
    pairs = meeting_pairs(w)
    return len(pairs) == w.n_bal, pairs


@dataclass(frozen=True)
class SequenceDecomposition:
    """Maximal even alternating runs (start, length) plus leftover letters."""

    n: int
    sequences: tuple[tuple[int, int], ...]
    letters: tuple[int, ...]


def _scan_origin(w: Word) -> int:
    # Start scanning just after an equal adjacent pair, which no alternating
    # run can cross; a fully alternating word has none, so start at its
    # first '+'.
    n = w.n
    for s in range(n):
        if w.letters[(s - 1) % n] == w.letters[s]:
            return s
    for s in range(n):
        if w.letters[s] == PLUS:
            return s
    raise AssertionError("unreachable: word has no '+' and no equal pair")


def decompose(w: Word) -> SequenceDecomposition:
    n = w.n
    origin = _scan_origin(w)
    seqs: list[tuple[int, int]] = []
    letters: list[int] = []
    k = 0
    while k < n:
        pos = (origin + k) % n
        if w.letters[pos] != PLUS:
            letters.append(pos)
            k += 1
            continue
        # maximal alternating run starting with '+', capped at the window
        run = 1
        while k + run < n:
            want = PLUS if run % 2 == 0 else MINUS
            if w.letters[(origin + k + run) % n] != want:
                break
            run += 1
        # odd runs drop their trailing '+', which is re-examined as a letter
        length = run - (run % 2)
        if length >= 2:
            seqs.append((pos, length))
            k += length
        else:
            letters.append(pos)
            k += 1
    return SequenceDecomposition(n=n, sequences=tuple(seqs), letters=tuple(letters))


class Rule(str, Enum):
    MOVE_PLUS = "Move+"
    MOVE_MINUS = "Move-"
    EXPAND = "Expand"
    REDUCE = "Reduce"
    MERGE = "Merge"
    DISAPPEAR = "Disappear"


def span_positions(start: int, length: int, n: int) -> frozenset[int]:
    return frozenset((start + k) % n for k in range(length))


def _base_rule(w: Word, start: int, length: int) -> tuple[Rule, tuple[int, int] | None]:
    """Rule and successor span for one sequence, ignoring merges."""
    n = w.n
    if length == n:
        # the whole word is one interlaced cycle; it rotates left each round
        return Rule.MOVE_PLUS, ((start - 1) % n, n)
    left = w.letters[(start - 1) % n]
    right = w.letters[(start + length) % n]
    if left == PLUS and right == PLUS:
        return Rule.MOVE_PLUS, ((start - 1) % n, length)
    if left == MINUS and right == MINUS:
        return Rule.MOVE_MINUS, ((start + 1) % n, length)
    if left == PLUS and right == MINUS:
        return Rule.EXPAND, ((start - 1) % n, length + 2)
    # left == MINUS, right == PLUS
    if length == 2:
        return Rule.DISAPPEAR, None
    return Rule.REDUCE, ((start + 1) % n, length - 2)


@dataclass(frozen=True)
class TransitionLabel:
    start: int
    length: int
    rule: Rule  # MERGE overrides the base rule when spans coalesce
    base_rule: Rule
    successor: tuple[int, int] | None


def classify_transition(w: Word, w_next: Word) -> list[TransitionLabel]:
    """Label every sequence of w with the rule explaining w -> w_next.

    Raises CalculusViolation if the labeled successors (after merging
    abutting spans) do not reproduce the canonical decomposition of
    w_next.
    """
    if step_word(w) != w_next:
        raise ValueError("w_next is not step_word(w)")
    n = w.n
    dec = decompose(w)
    base: list[tuple[tuple[int, int], Rule, tuple[int, int] | None]] = []
    for start, length in dec.sequences:
        rule, succ = _base_rule(w, start, length)
        base.append(((start, length), rule, succ))

    succ_sets = [span_positions(*s[2], n) if s[2] else frozenset() for s in base]
    dec_next = decompose(w_next)
    next_sets = [span_positions(st, ln, n) for st, ln in dec_next.sequences]

    # group predecessors onto the canonical spans of the next word
    merged = [False] * len(base)
    claimed = [False] * len(base)
    for target in next_sets:
        preds = [k for k, ss in enumerate(succ_sets) if ss and ss & target]
        if not preds:
            raise CalculusViolation(
                f"{w} -> {w_next}: sequence at {sorted(target)} has no predecessor"
            )
        union = frozenset().union(*(succ_sets[k] for k in preds))
        if union != target:
            raise CalculusViolation(
                f"{w} -> {w_next}: successors {sorted(union)} do not tile {sorted(target)}"
            )
        for k in preds:
            if claimed[k]:
                raise CalculusViolation(f"{w} -> {w_next}: successor claimed twice")
            claimed[k] = True
            if len(preds) > 1:
                merged[k] = True
    for k, ss in enumerate(succ_sets):
        if ss and not claimed[k]:
            raise CalculusViolation(
                f"{w} -> {w_next}: successor {sorted(ss)} of sequence {base[k][0]} vanished"
            )

    labels = []
    for k, ((start, length), rule, succ) in enumerate(base):
        final = Rule.MERGE if merged[k] else rule
        labels.append(
            TransitionLabel(start=start, length=length, rule=final, base_rule=rule, successor=succ)
        )
    return labels


class TrackedEvolution:
    """Step a word while tracking sequence identities across rounds.

    Merged groups keep the lowest member id; disappeared ids report a
    final length of 0.  Used for rule-by-rule lemma checks and for the
    length-history output.
    """

    def __init__(self, w: Word):
        self.word = w
        self.round = 0
        dec = decompose(w)
        self.ids: dict[int, tuple[int, int]] = {k: span for k, span in enumerate(dec.sequences)}
        self.history: list[dict[int, int]] = [{k: span[1] for k, span in self.ids.items()}]
        self.rules: list[dict[int, Rule]] = []
        self.merge_groups: list[list[set[int]]] = []

    def step(self) -> Word:
        w = self.word
        w2 = step_word(w)
        labels = classify_transition(w, w2)
        n = w.n
        span_to_id = {span: k for k, span in self.ids.items()}
        succ_by_id: dict[int, frozenset[int]] = {}
        rules_by_id: dict[int, Rule] = {}
        for lab in labels:
            k = span_to_id[(lab.start, lab.length)]
            rules_by_id[k] = lab.rule
            succ_by_id[k] = span_positions(*lab.successor, n) if lab.successor else frozenset()

        new_ids: dict[int, tuple[int, int]] = {}
        lengths: dict[int, int] = {}
        groups: list[set[int]] = []
        for span in decompose(w2).sequences:
            target = span_positions(*span, n)
            preds = [k for k, ss in succ_by_id.items() if ss and ss & target]
            survivor = min(preds)
            new_ids[survivor] = span
            lengths[survivor] = span[1]
            if len(preds) > 1:
                groups.append(set(preds))
            for k in preds:
                if k != survivor:
                    lengths[k] = 0
        for k, ss in succ_by_id.items():
            if not ss:
                lengths[k] = 0

        self.word = w2
        self.round += 1
        self.ids = new_ids
        self.history.append(lengths)
        self.rules.append(rules_by_id)
        self.merge_groups.append(groups)
        return w2


def evolve_until_interlaced(w: Word, max_rounds: int | None = None):
    """Iterate rounds until the word is interlaced.

    Returns (rounds_taken, history) where history[k] maps sequence id to
    its length at round k (0 on the round it disappears).  Raises
    CalculusViolation if interlacing takes n rounds or more.
    """
    cap = max_rounds if max_rounds is not None else w.n
    ev = TrackedEvolution(w)
    rounds = 0
    while not is_interlaced(ev.word)[0]:
        if rounds >= cap:
            raise CalculusViolation(f"word {w} not interlaced after {rounds} rounds")
        ev.step()
        rounds += 1
    return rounds, ev.history


def history_csv_rows(history: list[dict[int, int]]) -> list[str]:
    """`round,sequence_id,length` rows for the per-sequence length history."""
    rows = []
    for k, lengths in enumerate(history):
        for sid in sorted(lengths):
            rows.append(f"{k},{sid},{lengths[sid]}")
    return rows
