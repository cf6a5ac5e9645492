import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclepatrol import words
from cyclepatrol.words import (
    CalculusViolation,
    Rule,
    Word,
    classify_transition,
    decompose,
    evolve_until_interlaced,
    history_csv_rows,
    is_interlaced,
    meeting_pairs,
    step_word,
)

W = Word.from_string


class TestStep:
    def test_two_letter_swap(self):
        assert str(step_word(W("+-"))) == "-+"

    def test_single_pair_flip(self):
        assert str(step_word(W("++--"))) == "+-+-"

    def test_cyclic_word(self):
        assert str(step_word(W("++-+"))) == "+-++"

    def test_uniform_word_rejected(self):
        with pytest.raises(ValueError, match="A2"):
            step_word(W("++++"))

    def test_counts_conserved(self):
        for s in ("+-+--+", "++-+--", "-+-+++"):
            w = W(s)
            w2 = step_word(w)
            assert (w2.n_plus, w2.n_minus) == (w.n_plus, w.n_minus)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from((1, -1)), min_size=2, max_size=16))
    def test_step_preserves_counts_and_pairs_are_disjoint(self, bits):
        w = Word(tuple(bits))
        if w.n_bal == 0:
            return
        pairs = meeting_pairs(w)
        touched = [i for p in pairs for i in (p, (p + 1) % w.n)]
        assert len(touched) == len(set(touched))
        w2 = step_word(w)
        assert w2.n_plus == w.n_plus


class TestDecompose:
    def test_fully_interlaced(self):
        d = decompose(W("+-+-"))
        assert d.sequences == ((0, 4),)
        assert d.letters == ()

    def test_single_inner_pair(self):
        d = decompose(W("++--"))
        assert d.sequences == ((1, 2),)
        assert set(d.letters) == {0, 3}

    def test_seam_wrapping_sequence(self):
        d = decompose(W("--++"))
        assert d.sequences == ((3, 2),)
        assert set(d.letters) == {1, 2}

    def test_run_through_the_index_seam(self):
        # the natural maximal run covers positions 4,0,1,2
        d = decompose(W("-+-++"))
        assert d.sequences == ((4, 4),)
        assert d.letters == (3,)

    def test_all_letters(self):
        d = decompose(W("-+"))
        assert d.sequences == ((1, 2),)

    def test_sorted_word_has_one_pair(self):
        d = decompose(W("--++-"))
        assert d.sequences == ((3, 2),)
        assert set(d.letters) == {0, 1, 2}

    def test_odd_truncation(self):
        d = decompose(W("+-+++"))
        assert d.sequences == ((0, 2),)
        assert set(d.letters) == {2, 3, 4}

    def test_sequences_have_even_length_and_start_plus(self):
        for n in range(2, 11):
            for bits in itertools.product((1, -1), repeat=n):
                w = Word(bits)
                d = decompose(w)
                for start, length in d.sequences:
                    assert length % 2 == 0 and length >= 2
                    for k in range(length):
                        want = 1 if k % 2 == 0 else -1
                        assert w.letters[(start + k) % n] == want
                covered = [(s + k) % n for s, l in d.sequences for k in range(l)]
                assert sorted(covered + list(d.letters)) == list(range(n))


class TestInterlaced:
    def test_balanced_interlaced(self):
        ok, witness = is_interlaced(W("+-+-"))
        assert ok and witness == [0, 2]

    def test_not_interlaced(self):
        ok, witness = is_interlaced(W("++--"))
        assert not ok and witness == [1]

    def test_uniform_rejected(self):
        with pytest.raises(ValueError, match="A2"):
            is_interlaced(W("+++"))

    def test_single_minority_letter_always_interlaced(self):
        for n in range(2, 10):
            for pos in range(n):
                bits = [1] * n
                bits[pos] = -1
                assert is_interlaced(Word(tuple(bits)))[0]


class TestClassify:
    def test_expand(self):
        labels = classify_transition(W("++--"), step_word(W("++--")))
        assert [(l.start, l.length, l.rule) for l in labels] == [(1, 2, Rule.EXPAND)]

    def test_move_plus(self):
        labels = classify_transition(W("++-+"), step_word(W("++-+")))
        assert labels[0].rule == Rule.MOVE_PLUS
        assert labels[0].successor == (0, 2)

    def test_move_minus(self):
        labels = classify_transition(W("-+--"), step_word(W("-+--")))
        assert labels[0].rule == Rule.MOVE_MINUS

    def test_reduce_and_disappear(self):
        w = W("--+-++")
        labels = {(l.start, l.length): l.rule for l in classify_transition(w, step_word(w))}
        assert labels[(2, 2)] == Rule.DISAPPEAR
        assert labels[(5, 2)] == Rule.EXPAND

    def test_reduce_long_sequence(self):
        w = W("--+-+-++")  # run (2,4) sits between a '-' and a '+': Reduce
        assert decompose(w).sequences == ((2, 4), (7, 2))
        labels = classify_transition(w, step_word(w))
        by_span = {(l.start, l.length): l for l in labels}
        assert by_span[(2, 4)].rule == Rule.REDUCE
        assert by_span[(2, 4)].successor == (3, 2)
        assert by_span[(7, 2)].rule == Rule.EXPAND
        assert by_span[(7, 2)].successor == (6, 4)

    def test_merge_label(self):
        w = W("++-++--")
        labels = classify_transition(w, step_word(w))
        assert sorted(l.rule for l in labels) == [Rule.MERGE, Rule.MERGE]

    def test_full_cycle_rotates(self):
        w = W("+-+-")
        labels = classify_transition(w, step_word(w))
        assert labels[0].rule == Rule.MOVE_PLUS
        assert labels[0].length == 4

    def test_wrong_successor_rejected(self):
        with pytest.raises(ValueError):
            classify_transition(W("++--"), W("++--"))


class TestEvolve:
    def test_already_interlaced(self):
        rounds, history = evolve_until_interlaced(W("+-"))
        assert rounds == 0
        assert history == [{0: 2}]

    def test_one_round(self):
        rounds, history = evolve_until_interlaced(W("++--"))
        assert rounds == 1
        assert history[-1] == {0: 4}

    def test_exhaustive_interlace_bound(self):
        for n in range(2, 13):
            for bits in itertools.product((1, -1), repeat=n):
                w = Word(bits)
                if w.n_bal == 0:
                    continue
                wk = w
                rounds = 0
                while not is_interlaced(wk)[0]:
                    wk = step_word(wk)
                    rounds += 1
                    assert rounds <= n, f"{w} not interlacing"
                assert rounds < max(w.n_bal, 1), f"{w} took {rounds} rounds"

    def test_history_csv(self):
        _, history = evolve_until_interlaced(W("++--"))
        rows = history_csv_rows(history)
        assert rows[0] == "0,0,2"
        assert rows[-1] == "1,0,4"

    def test_sequence_count_never_grows(self):
        for n in range(2, 12):
            for bits in itertools.product((1, -1), repeat=n):
                w = Word(bits)
                if w.n_bal == 0:
                    continue
                prev = len(decompose(w).sequences)
                for _ in range(n):
                    w = step_word(w)
                    cur = len(decompose(w).sequences)
                    assert cur <= prev
                    prev = cur
