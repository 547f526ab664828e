"""Closed-form simulation of the bounded-worker model via a delay matrix.

Instead of routing messages, this engine draws the whole delay matrix up
front: entry d[i][j] is the lag before worker j learns of block i+1,
with a zero at the producer's own column.  Block k's height is then a
one-liner: one plus the best height among blocks already visible to k's
producer, where block 0 (the origin) is visible from the start.  The
engine tracks heights only; use the event-driven engine to materialize
trees.

The visibility scan comes in two interchangeable forms: a naive pass
over all earlier blocks, and a pruned backward scan that stops as soon
as the running best reaches the cumulative height maximum, after which
no earlier block can improve it.  Both return identical values on every
step; the pruned form is the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import sample_many
from .network import NetSimConfig, SimOutcome
from .rng import StreamBundle


@dataclass
class MatrixSimState:
    """Mutable per-run state shared by the visibility scans.

    t, h, z grow by one entry per block; d holds one row per non-origin
    block i+1 (zero at column producer[i]).  strict controls the
    visibility comparison: arrival strictly before creation counts.
    Flipping it to False is a fault-injection hook for the validation
    suite; simultaneous arrival then wrongly counts as visible.
    """

    t: list[float]
    h: list[int]
    z: list[int]
    d: list[list[float]]
    producer: list[int]
    strict: bool = True
    scanned: int = 0

    def visible(self, i: int, j: int, t_k: float) -> bool:
        arrival = self.t[i] + self.d[i - 1][j]
        return arrival < t_k if self.strict else arrival <= t_k


def visible_height_naive(k: int, producer_j: int, state: MatrixSimState) -> int:
    """Height for block k by scanning every earlier block.

    Returns 1 + max height over visible blocks; the origin is always
    visible, so the result is at least 2.
    """
    t_k = state.t[k]
    x = 1
    for i in range(1, k):
        if state.h[i] > x and state.visible(i, producer_j, t_k):
            x = state.h[i]
    return 1 + x


def visible_height_pruned(k: int, producer_j: int, state: MatrixSimState) -> int:
    """Same value as the naive scan, stopping early.

    Scans i = k-1 downward and stops once the running best x reaches
    z_i: every block at or before i has height at most z_i, so none can
    beat x.  Skipped blocks therefore never change the result.
    """
    t, h, z, d = state.t, state.h, state.z, state.d
    t_k = t[k]
    strict = state.strict
    x = 1
    i = k - 1
    while i >= 1 and x < z[i]:
        if h[i] > x:
            arrival = t[i] + d[i - 1][producer_j]
            if (arrival < t_k) if strict else (arrival <= t_k):
                x = h[i]
        i -= 1
    state.scanned += k - 1 - i
    return 1 + x


def simulate_matrix(config: NetSimConfig, streams: StreamBundle | None = None,
                    *, scan: str = "pruned", check_pruning: bool = False,
                    strict_visibility: bool = True) -> SimOutcome:
    """Run the delay-matrix engine and return the resulting outcome.

    Consumes the same three substreams in the same per-step order as
    the event-driven engine (production, producer, then delays for
    recipients in ascending worker order skipping the producer), so the
    two agree exactly under a shared seed or injected bundle.  All
    draws are taken in bulk up front, which the per-substream layout
    makes safe.

    ``scan`` selects "pruned" or "naive"; ``check_pruning`` runs both
    on every step and asserts they agree.  ``strict_visibility=False``
    is the validation suite's fault hook.
    """
    if scan not in ("pruned", "naive"):
        raise ValueError(f"unknown scan variant {scan!r}")
    if streams is None:
        streams = StreamBundle.for_run(config.seed)
    m, n = config.m, config.n

    alphas = sample_many(config.alpha, streams.production, n - 1)
    t = np.concatenate(([0.0], np.cumsum(alphas))).tolist()
    producer_u = streams.producer.uniforms(n - 1)
    producers = np.minimum((producer_u * m).astype(np.int64), m - 1).tolist()
    delay_rows = sample_many(config.beta, streams.delay,
                             (n - 1) * (m - 1)).reshape(n - 1, m - 1).tolist()

    state = MatrixSimState(t=t, h=[1], z=[1], d=[], producer=producers,
                           strict=strict_visibility)
    step = visible_height_pruned if scan == "pruned" else visible_height_naive
    for k in range(1, n):
        j = producers[k - 1]
        row = delay_rows[k - 1]
        state.d.append(row[:j] + [0.0] + row[j:])
        h_k = step(k, j, state)
        if check_pruning:
            other = visible_height_naive(k, j, state)
            assert h_k == other, f"scan mismatch at block {k}: {h_k} != {other}"
        state.h.append(h_k)
        state.z.append(h_k if h_k > state.z[-1] else state.z[-1])

    final = state.z[-1]
    return SimOutcome(
        proportion=final / n,
        height=final,
        n=n,
        height_series=tuple(state.h) if config.record_series else None,
        seed_echo=streams.seed_echo(),
        stats={"mean_scan_window": state.scanned / (n - 1) if n > 1 else 0.0},
    )
