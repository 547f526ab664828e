from dataclasses import replace

import numpy as np
import pytest

from blocksim.distributions import constant, exponential, gamma
from blocksim.matrix import (MatrixSimState, simulate_matrix,
                             visible_height_naive, visible_height_pruned)
from blocksim.network import NetSimConfig, simulate_network
from blocksim.rng import ScriptedStream, StreamBundle


def scripted_bundle(production, producer, delay):
    return StreamBundle(production=ScriptedStream(production),
                        producer=ScriptedStream(producer),
                        delay=ScriptedStream(delay))


def base_config(**overrides):
    params = dict(m=5, n=200, alpha=exponential(1.0), beta=exponential(0.1),
                  seed=42, record_tree=False, record_series=True)
    params.update(overrides)
    return NetSimConfig(**params)


def interleaved_state():
    # Two workers alternating under unit production and delay 1.5; the
    # state as seen just before block 3 is placed.
    return MatrixSimState(t=[0.0, 1.0, 2.0, 3.0], h=[1, 2, 2], z=[1, 2, 2],
                          d=[[0.0, 1.5], [1.5, 0.0]], producer=[0, 1, 0])


class TestVisibility:
    def test_strict_comparison(self):
        state = interleaved_state()
        assert state.visible(1, 0, 3.0)
        assert not state.visible(2, 0, 3.0)
        assert not state.visible(1, 1, 2.5)

    def test_lenient_comparison_counts_simultaneous(self):
        state = interleaved_state()
        state.strict = False
        assert state.visible(1, 1, 2.5)

    def test_scans_agree_on_interleaved_state(self):
        state = interleaved_state()
        assert visible_height_naive(3, 0, state) == 3
        assert visible_height_pruned(3, 0, state) == 3
        assert state.scanned == 2

    def test_pruned_skips_blocks_behind_running_best(self):
        # Once x reaches z_i the scan stops, so early blocks are skipped.
        state = MatrixSimState(t=[0.0, 1.0, 2.0, 3.0, 4.0], h=[1, 2, 3, 4],
                               z=[1, 2, 3, 4],
                               d=[[0.0, 0.1], [0.0, 0.1], [0.0, 0.1]],
                               producer=[0, 0, 0])
        assert visible_height_pruned(4, 0, state) == 5
        assert state.scanned == 1


class TestHandTrace:
    def run_trace(self):
        config = NetSimConfig(m=2, n=5, alpha=constant(1.0), beta=constant(1.5),
                              seed=0, record_series=True)
        streams = scripted_bundle([0.5] * 4, [0.0, 0.5, 0.0, 0.5], [0.5] * 4)
        return config, streams

    def test_trace_heights(self):
        config, streams = self.run_trace()
        out = simulate_matrix(config, streams, check_pruning=True)
        assert out.height == 3
        assert out.proportion == pytest.approx(3 / 5)
        assert out.height_series == (1, 2, 2, 3, 3)

    def test_naive_scan_same_trace(self):
        config, streams = self.run_trace()
        out = simulate_matrix(config, streams, scan="naive")
        assert out.height_series == (1, 2, 2, 3, 3)


class TestAgainstNetworkEngine:
    def test_exact_match_on_random_configs(self):
        rng = np.random.default_rng(11)
        for trial in range(15):
            config = base_config(
                m=int(rng.integers(1, 12)),
                n=int(rng.integers(2, 150)),
                beta=exponential(float(0.02 + rng.random())),
                seed=int(rng.integers(0, 2**32)),
            )
            net = simulate_network(replace(config, record_tree=True))
            mat = simulate_matrix(config, check_pruning=True)
            assert net.height == mat.height, f"config {trial}: {config}"
            assert net.proportion == mat.proportion
            assert mat.height_series == net.height_series

    def test_match_on_tie_heavy_config(self):
        config = base_config(m=3, n=60, alpha=constant(1.0), beta=constant(2.0),
                             seed=9)
        net = simulate_network(replace(config, record_tree=True))
        mat = simulate_matrix(config, check_pruning=True)
        assert mat.height_series == net.height_series


class TestScanVariants:
    def test_pruned_equals_naive_heights(self):
        config = base_config(seed=3)
        pruned = simulate_matrix(config, scan="pruned")
        naive = simulate_matrix(config, scan="naive")
        assert pruned.height_series == naive.height_series

    def test_unknown_scan_rejected(self):
        with pytest.raises(ValueError):
            simulate_matrix(base_config(), scan="bogus")

    def test_zero_delay_scan_window(self):
        n = 100
        out = simulate_matrix(base_config(beta=constant(0.0), n=n))
        assert out.proportion == 1.0
        assert out.stats["mean_scan_window"] == (n - 2) / (n - 1)


class TestStrictVisibilityFault:
    def test_flip_changes_tie_heavy_outcome(self):
        config = base_config(m=3, n=60, alpha=constant(1.0), beta=constant(2.0),
                             seed=9)
        good = simulate_matrix(config)
        bad = simulate_matrix(config, strict_visibility=False)
        assert bad.height_series != good.height_series

    def test_flip_harmless_on_continuous_delays(self):
        config = base_config(seed=5)
        good = simulate_matrix(config)
        bad = simulate_matrix(config, strict_visibility=False)
        assert bad.height_series == good.height_series


class TestEdgeCases:
    def test_single_worker(self):
        out = simulate_matrix(base_config(m=1, n=40))
        assert out.proportion == 1.0

    def test_origin_only(self):
        out = simulate_matrix(base_config(n=1))
        assert (out.height, out.proportion) == (1, 1.0)
        assert out.stats["mean_scan_window"] == 0.0

    def test_two_blocks(self):
        out = simulate_matrix(base_config(n=2))
        assert out.height == 2

    def test_no_tree_materialized(self):
        assert simulate_matrix(base_config()).tree is None

    def test_determinism(self):
        a = simulate_matrix(base_config(beta=gamma(shape=2, mean=0.1)))
        b = simulate_matrix(base_config(beta=gamma(shape=2, mean=0.1)))
        assert a.height_series == b.height_series
