"""Approximation of the model's unbounded-worker limit.

With infinitely many workers every block has a distinct producer, so no
delay is ever reused: whether an earlier block was visible when block k
appeared is decided by a fresh delay draw per tested pair.  That drops
the worker count and the delay matrix entirely, at the cost of ignoring
the hysteresis of real fixed delays; the bias is negligible outside
chaotic regimes (delay mean far above production mean) and is reported,
not corrected, there.

The visibility scan supports the same pruning as the matrix engine.
Draw contract: pairs (i, k) are scanned in descending i and every
scanned pair consumes exactly one delay draw.  Pruning stops the scan
early and so consumes fewer draws; pass ``align_draws=True`` to consume
a full block of k-1 draws per step regardless, which makes pruned and
unpruned runs read the identical draw for every pair and return
identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import BufferedSampler, DistributionSpec, require_production_role, sample_many
from .errors import ConfigError
from .network import SimOutcome
from .rng import StreamBundle


@dataclass(frozen=True)
class InfSimConfig:
    """Run parameters for the unbounded-worker engine."""

    n: int
    alpha: DistributionSpec
    beta: DistributionSpec
    seed: int
    use_pruning: bool = True
    record_series: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("block count n must be >= 1")
        require_production_role(self.alpha)


def simulate_infinite(config: InfSimConfig, streams: StreamBundle | None = None,
                      *, align_draws: bool = False) -> SimOutcome:
    """Run the unbounded-worker engine and return the resulting outcome.

    Production times come from the production substream, visibility
    draws from the delay substream; the producer substream is unused
    since producers are all distinct by assumption.
    """
    if streams is None:
        streams = StreamBundle.for_run(config.seed)
    n = config.n

    alphas = sample_many(config.alpha, streams.production, n - 1)
    t = np.concatenate(([0.0], np.cumsum(alphas))).tolist()

    h = [1]
    z = [1]
    scanned = 0

    if config.use_pruning and not align_draws:
        delay = BufferedSampler(config.beta, streams.delay, chunk=1 << 14)
        delay_next = delay.next
        for k in range(1, n):
            t_k = t[k]
            x = 1
            i = k - 1
            while i >= 1 and x < z[i]:
                if t[i] + delay_next() < t_k and h[i] > x:
                    x = h[i]
                i -= 1
            scanned += k - 1 - i
            x += 1
            h.append(x)
            z.append(x if x > z[-1] else z[-1])
        consumed = delay.drawn
    else:
        # Full-block consumption: draws[k-1-i] is the draw for pair (i, k)
        # whether or not the scan reaches it.
        for k in range(1, n):
            t_k = t[k]
            draws = sample_many(config.beta, streams.delay, k - 1)
            x = 1
            i = k - 1
            while i >= 1 and (not config.use_pruning or x < z[i]):
                if t[i] + draws[k - 1 - i] < t_k and h[i] > x:
                    x = h[i]
                i -= 1
            scanned += k - 1 - i
            x += 1
            h.append(x)
            z.append(x if x > z[-1] else z[-1])
        consumed = (n - 1) * (n - 2) // 2

    final = z[-1]
    return SimOutcome(
        proportion=final / n,
        height=final,
        n=n,
        height_series=tuple(h) if config.record_series else None,
        seed_echo=streams.seed_echo(),
        stats={"mean_scan_window": scanned / (n - 1) if n > 1 else 0.0,
               "pairs_tested": scanned,
               "delay_draws": consumed},
    )
