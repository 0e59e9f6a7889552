"""Fusion rule: minimum covers, two-sided trim, uniform averaging."""

import random

import pytest

from mwmsr import Message, fuse, minimum_cover, trim


def msg(value, path, send_time=0):
    return Message(value=value, path=tuple(path), slots=len(path), send_time=send_time)


def self_msg(value, node):
    return Message(value=value, path=(node,), slots=1)


from oracles import oracle_min_cover, oracle_trim_side


# -- minimum_cover ----------------------------------------------------------------


class TestMinimumCover:
    def test_disjoint_one_hop_paths(self):
        cover, size = minimum_cover([msg(1.0, (2, 1)), msg(2.0, (3, 1))], dest=1)
        assert size == 2
        assert cover == {2, 3}

    def test_shared_source(self):
        cover, size = minimum_cover([msg(1.0, (2, 1)), msg(2.0, (2, 3, 1))], dest=1)
        assert size == 1
        assert cover == {2}

    def test_common_relay(self):
        msgs = [msg(1.0, (2, 4, 1)), msg(2.0, (3, 4, 1)), msg(3.0, (5, 4, 1))]
        cover, size = minimum_cover(msgs, dest=1)
        assert size == 1
        assert cover == {4}

    def test_empty(self):
        assert minimum_cover([], dest=1) == (set(), 0)

    def test_self_message_rejected(self):
        with pytest.raises(ValueError):
            minimum_cover([self_msg(5.0, 1)], dest=1)

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(5)
        for _ in range(120):
            dest = 1
            msgs = []
            for _ in range(rng.randint(1, 7)):
                length = rng.randint(1, 3)
                interior = rng.sample(range(2, 9), k=length)
                msgs.append(msg(rng.random(), tuple(interior) + (dest,)))
            _, size = minimum_cover(msgs, dest)
            assert size == oracle_min_cover([m.path for m in msgs], dest)

    def test_monotone_under_addition(self):
        # adding a message never lowers the cover and raises it at most by one
        rng = random.Random(9)
        for _ in range(60):
            dest = 1
            msgs = []
            prev = 0
            for _ in range(rng.randint(2, 7)):
                length = rng.randint(1, 3)
                interior = rng.sample(range(2, 9), k=length)
                msgs.append(msg(rng.random(), tuple(interior) + (dest,)))
                _, size = minimum_cover(msgs, dest)
                assert prev <= size <= prev + 1
                prev = size


# -- trim --------------------------------------------------------------------------


class TestTrim:
    def test_f_zero_removes_nothing(self):
        msgs = [self_msg(5.0, 1), msg(9.0, (2, 1)), msg(1.0, (3, 1))]
        kept, removed = trim(msgs, 5.0, 0)
        assert removed == []
        assert kept == msgs

    def test_one_hop_star(self):
        msgs = [self_msg(5.0, 1), msg(9.0, (2, 1)), msg(8.0, (3, 1)), msg(1.0, (4, 1))]
        kept, removed = trim(msgs, 5.0, 1)
        assert sorted(m.value for m in removed) == [1.0, 9.0]
        assert sorted(m.value for m in kept) == [5.0, 8.0]

    def test_shared_relay_removes_both_high_values(self):
        msgs = [self_msg(5.0, 1), msg(9.0, (2, 4, 1)), msg(8.0, (3, 4, 1))]
        kept, removed = trim(msgs, 5.0, 1)
        assert sorted(m.value for m in removed) == [8.0, 9.0]
        assert [m.value for m in kept] == [5.0]

    def test_self_message_always_kept(self):
        msgs = [self_msg(5.0, 1), msg(5.0, (2, 1)), msg(6.0, (3, 1))]
        kept, _ = trim(msgs, 5.0, 2)
        assert any(m.path == (1,) for m in kept)
        # equal-valued neighbor is kept too: strict comparisons only
        assert any(m.path == (2, 1) for m in kept)

    def test_fuse_containment(self):
        rng = random.Random(1)
        for _ in range(50):
            msgs = [self_msg(rng.uniform(0, 10), 1)]
            for s in range(2, rng.randint(3, 7)):
                msgs.append(msg(rng.uniform(0, 10), (s, 1)))
            kept, _ = trim(msgs, msgs[0].value, rng.randint(0, 2))
            x = fuse(kept)
            assert min(m.value for m in kept) <= x <= max(m.value for m in kept)

    def test_one_hop_degeneracy_matches_sort_and_drop(self):
        # with one-hop paths the trim is the classic drop of the f most
        # extreme strictly-greater / strictly-smaller values
        rng = random.Random(2)
        for _ in range(100):
            x_i = rng.uniform(0, 10)
            msgs = [self_msg(x_i, 1)]
            n_nbrs = rng.randint(0, 6)
            for s in range(2, 2 + n_nbrs):
                msgs.append(msg(rng.uniform(0, 10), (s, 1)))
            f = rng.randint(0, 3)
            kept, removed = trim(msgs, x_i, f)
            above = sorted((m.value for m in msgs if m.value > x_i), reverse=True)
            below = sorted(m.value for m in msgs if m.value < x_i)
            want_removed = sorted(above[:f] + below[:f])
            assert sorted(m.value for m in removed) == want_removed

    def test_matches_exhaustive_oracle_small(self):
        rng = random.Random(3)
        for _ in range(60):
            dest = 1
            x_i = rng.uniform(0, 10)
            msgs = [self_msg(x_i, dest)]
            used = set()
            for _ in range(rng.randint(1, 8)):
                length = rng.randint(1, 3)
                interior = tuple(rng.sample(range(2, 9), k=length))
                if interior in used:
                    continue
                used.add(interior)
                msgs.append(msg(rng.uniform(0, 10), interior + (dest,)))
            f = rng.randint(0, 2)
            kept, removed = trim(msgs, x_i, f)
            upper = [m for m in msgs if m.value > x_i]
            lower = [m for m in msgs if m.value < x_i]
            want = oracle_trim_side(upper, dest, f, descending=True)
            want |= oracle_trim_side(lower, dest, f, descending=False)
            assert {m.key() for m in removed} == want

    def test_tie_break_is_deterministic(self):
        # equal values: the removal prefix prefers smaller source id, then path
        msgs = [
            self_msg(0.0, 1),
            msg(5.0, (2, 1)),
            msg(5.0, (3, 1)),
            msg(5.0, (4, 1)),
        ]
        kept, removed = trim(msgs, 0.0, 1)
        assert [m.path for m in removed] == [(2, 1)]
        kept2, removed2 = trim(list(reversed(msgs)), 0.0, 1)
        assert [m.path for m in removed2] == [(2, 1)]


class TestFuse:
    def test_mean(self):
        msgs = [self_msg(2.0, 1), msg(4.0, (2, 1)), msg(6.0, (3, 1))]
        assert fuse(msgs) == 4.0

    def test_identity(self):
        assert fuse([self_msg(7.0, 1)]) == 7.0

    def test_star_example_composition(self):
        msgs = [self_msg(5.0, 1), msg(9.0, (2, 1)), msg(8.0, (3, 1)), msg(1.0, (4, 1))]
        kept, _ = trim(msgs, 5.0, 1)
        assert fuse(kept) == 6.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fuse([])


class TestMessage:
    def test_source_is_first_path_entry(self):
        m = msg(1.0, (2, 3, 1))
        assert m.source == 2

    def test_rejects_repeated_nodes(self):
        with pytest.raises(ValueError):
            Message(value=1.0, path=(2, 2, 1), slots=3)

    def test_rejects_nonfinite_values(self):
        with pytest.raises(ValueError):
            Message(value=float("nan"), path=(2, 1), slots=2)

    def test_completeness(self):
        assert not Message(value=1.0, path=(2,), slots=3).complete
        assert Message(value=1.0, path=(2, 3, 1), slots=3).complete
