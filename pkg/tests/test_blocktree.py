import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blocksim.blocktree import (BlockTree, GapHistogram, WorkerPositions,
                                classify, cumulative_heights, export_tree,
                                height, invalid_gap_histogram, longest_branch,
                                proportion_valid, tree_from_json, tree_to_dot,
                                tree_to_json)
from blocksim.errors import ConfigError


def chain(n):
    return BlockTree(parents=tuple(range(n - 1)), times=tuple(float(i) for i in range(n)))


def two_branch_seven():
    # Two competing branches off the origin: 0<-1<-5 and 0<-2<-3<-6,
    # with 4 hanging off 2.  Longest branch 0,2,3,6.
    return BlockTree(parents=(0, 0, 2, 2, 1, 3),
                     times=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0))


def random_tree(rng, n):
    parents = tuple(int(rng.integers(0, k)) for k in range(1, n))
    times = tuple(np.cumsum(np.concatenate(([0.0], rng.random(n - 1) + 1e-3))))
    producers = tuple(int(w) for w in rng.integers(0, 5, size=n - 1)) if rng.random() < 0.5 else None
    return BlockTree(parents=parents, times=times, producers=producers)


class TestValidation:
    def test_origin_only(self):
        t = BlockTree(parents=(), times=(0.0,))
        assert t.n_blocks == 1

    def test_parent_must_precede(self):
        with pytest.raises(ValueError):
            BlockTree(parents=(1,), times=(0.0, 1.0))

    def test_times_strictly_increasing(self):
        with pytest.raises(ValueError):
            BlockTree(parents=(0,), times=(0.0, 0.0))

    def test_origin_time_zero(self):
        with pytest.raises(ValueError):
            BlockTree(parents=(), times=(1.0,))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            BlockTree(parents=(0, 0), times=(0.0, 1.0))
        with pytest.raises(ValueError):
            BlockTree(parents=(0,), times=(0.0, 1.0), producers=(1, 2))

    def test_origin_has_no_parent(self):
        with pytest.raises(ValueError):
            chain(3).parent_of(0)

    def test_worker_positions(self):
        t = chain(3)
        WorkerPositions((0, 2)).validate_against(t)
        with pytest.raises(ValueError):
            WorkerPositions((5,)).validate_against(t)
        assert WorkerPositions.initial(3).positions == (0, 0, 0)


class TestHeightAndProportion:
    def test_origin_only_height_1(self):
        assert height(BlockTree(parents=(), times=(0.0,))) == 1

    def test_two_branch_tree(self):
        t = two_branch_seven()
        assert height(t) == 4
        assert proportion_valid(t) == pytest.approx(4 / 7)

    def test_pure_chain(self):
        assert height(chain(100)) == 100
        assert proportion_valid(chain(100)) == 1.0

    def test_proportion_one_iff_path(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            t = random_tree(rng, int(rng.integers(2, 40)))
            is_path = t.parents == tuple(range(t.n_blocks - 1))
            assert (proportion_valid(t) == 1.0) == is_path

    def test_cumulative_heights(self):
        t = two_branch_seven()
        assert cumulative_heights(t) == [1, 2, 2, 3, 3, 3, 4]
        assert cumulative_heights(t)[-1] == height(t)


class TestLongestBranch:
    def test_branch_of_two_branch_tree(self):
        assert longest_branch(two_branch_seven()) == [0, 2, 3, 6]

    def test_tie_breaks_to_earliest_tip(self):
        # Two branches of equal height; tips are 3 and 4, prefer 3.
        t = BlockTree(parents=(0, 0, 1, 2), times=(0.0, 1.0, 2.0, 3.0, 4.0))
        assert longest_branch(t) == [0, 1, 3]

    def test_branch_ids_increase(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            b = longest_branch(random_tree(rng, int(rng.integers(2, 60))))
            assert b[0] == 0
            assert all(u < v for u, v in zip(b, b[1:]))


class TestGapHistogram:
    def test_pure_chain_all_zero(self):
        hist = invalid_gap_histogram(chain(10))
        assert hist.counts == {0: 9}
        assert hist.total_invalid() == 0

    def test_two_branch_tree_gaps(self):
        hist = invalid_gap_histogram(two_branch_seven())
        assert hist.counts == {0: 1, 1: 1, 2: 1}
        assert hist.total_gaps() == 3
        assert hist.total_invalid() == 3
        assert hist.mean() == pytest.approx(1.0)

    def test_partition_identity_when_tip_is_newest(self):
        # Every invalid block falls in exactly one gap when the branch tip
        # is the newest block.
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(200):
            t = random_tree(rng, int(rng.integers(2, 50)))
            if longest_branch(t)[-1] == t.n_blocks - 1:
                hist = invalid_gap_histogram(t)
                assert hist.total_invalid() == t.n_blocks - height(t)
                assert hist.total_gaps() == height(t) - 1
                checked += 1
        assert checked > 20

    def test_blocks_after_tip_fall_outside_gaps(self):
        # Tip is block 1 by the tie-break; block 2 arrives later, attaches
        # to the origin, and belongs to no gap.
        t = BlockTree(parents=(0, 0), times=(0.0, 1.0, 2.0))
        hist = invalid_gap_histogram(t)
        assert hist.counts == {0: 1}
        assert hist.total_invalid() == 0
        assert t.n_blocks - height(t) == 1

    def test_empty_histogram_mean(self):
        assert GapHistogram({}).mean() == 0.0


class TestClassify:
    def test_regimes(self):
        assert classify(1.0, 0.0) == "slow"
        assert classify(1.0, 0.005) == "slow"
        assert classify(1.0, 1.0) == "fast"
        assert classify(1.0, 1000.0) == "chaotic"

    def test_boundary_ratios(self):
        assert classify(1.0, 0.01) == "fast"
        assert classify(1.0, 100.0) == "fast"

    def test_bitcoin_like_ratio_is_fast_side(self):
        # 600s per block vs 12.6s delay: ratio 0.021 lands just above the
        # slow cutoff, so the soft label is fast.
        assert classify(600.0, 12.6) == "fast"

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            classify(0.0, 1.0)
        with pytest.raises(ConfigError):
            classify(1.0, -1.0)


class TestExport:
    def test_origin_only_json(self):
        t = BlockTree(parents=(), times=(0.0,), producers=())
        assert tree_to_json(t) == '{"parents":[],"producers":[],"times":[0.0]}'

    def test_json_null_producers(self):
        t = BlockTree(parents=(), times=(0.0,))
        assert tree_to_json(t) == '{"parents":[],"producers":null,"times":[0.0]}'

    def test_two_block_dot_edge(self):
        assert "1 -> 0" in tree_to_dot(chain(2))

    def test_dot_shape(self):
        dot = tree_to_dot(two_branch_seven())
        assert dot.startswith("digraph")
        assert dot.count("->") == 6

    def test_unsupported_format(self):
        with pytest.raises(ConfigError):
            export_tree(chain(2), "svg")

    def test_round_trip_100_random_trees(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            t = random_tree(rng, int(rng.integers(1, 80)))
            assert tree_from_json(tree_to_json(t)) == t

    @settings(max_examples=50)
    @given(st.data())
    def test_round_trip_property(self, data):
        n = data.draw(st.integers(min_value=1, max_value=25))
        parents = tuple(
            data.draw(st.integers(min_value=0, max_value=k)) for k in range(n - 1))
        gaps = data.draw(st.lists(
            st.floats(min_value=0.001, max_value=10.0, allow_nan=False),
            min_size=n - 1, max_size=n - 1))
        times = (0.0, *np.cumsum(gaps))
        t = BlockTree(parents=parents, times=tuple(float(x) for x in times))
        assert tree_from_json(tree_to_json(t)) == t
