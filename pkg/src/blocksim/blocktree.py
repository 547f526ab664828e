"""Global blockchain data model: rooted block tree plus derived metrics.

Blocks are numbered in creation order; block 0 is the unique origin.
The tree is stored as a parent array (block k attaches to parent[k] < k),
which keeps a tree of n blocks in O(n) memory, plus an O(m) map of worker
positions.  All metrics treat height as a node count: the origin-only
tree has height 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError

# Regime thresholds on the ratio delay_mean / production_mean.  The
# asymptotic regimes have no sharp boundary; these cutoffs are a
# documented convention and callers should surface the raw ratio too.
SLOW_BELOW = 0.01
CHAOTIC_ABOVE = 100.0


@dataclass(frozen=True)
class BlockTree:
    """Rooted tree of blocks in creation order.

    parents[i] is the parent of block i+1 (the origin has none).
    times[k] is block k's absolute creation time; strictly increasing.
    producers[i] is the worker that produced block i+1; None for runs
    where workers are not tracked.
    """

    parents: tuple[int, ...]
    times: tuple[float, ...]
    producers: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if self.producers is not None:
            object.__setattr__(self, "producers", tuple(int(w) for w in self.producers))
        n = len(self.times)
        if n < 1:
            raise ValueError("a tree has at least the origin block")
        if len(self.parents) != n - 1:
            raise ValueError("parents must cover blocks 1..n-1")
        if self.producers is not None and len(self.producers) != n - 1:
            raise ValueError("producers must cover blocks 1..n-1")
        if self.times[0] != 0.0:
            raise ValueError("origin creation time must be 0")
        for k in range(1, n):
            if not (0 <= self.parents[k - 1] < k):
                raise ValueError(f"block {k} must attach to an earlier block")
            if not (self.times[k] > self.times[k - 1]):
                raise ValueError("creation times must be strictly increasing")

    @property
    def n_blocks(self) -> int:
        return len(self.times)

    def parent_of(self, k: int) -> int:
        if k == 0:
            raise ValueError("the origin has no parent")
        return self.parents[k - 1]

    def depths(self) -> list[int]:
        """Node-count depth of every block; depth of the origin is 1."""
        d = [1] * self.n_blocks
        for k in range(1, self.n_blocks):
            d[k] = d[self.parents[k - 1]] + 1
        return d


@dataclass(frozen=True)
class WorkerPositions:
    """Map from worker index to the block id at its local tip."""

    positions: tuple[int, ...]

    @classmethod
    def initial(cls, m: int) -> "WorkerPositions":
        return cls(tuple(0 for _ in range(m)))

    def validate_against(self, tree: BlockTree) -> None:
        for w, b in enumerate(self.positions):
            if not (0 <= b < tree.n_blocks):
                raise ValueError(f"worker {w} positioned at unknown block {b}")


@dataclass(frozen=True)
class GapHistogram:
    """Occurrence counts of the invalid-block gap between consecutive
    valid blocks (counted in creation order)."""

    counts: dict[int, int] = field(default_factory=dict)

    def total_gaps(self) -> int:
        return sum(self.counts.values())

    def total_invalid(self) -> int:
        return sum(g * c for g, c in self.counts.items())

    def mean(self) -> float:
        total = self.total_gaps()
        return self.total_invalid() / total if total else 0.0


def height(tree: BlockTree) -> int:
    """Blocks on the longest root-to-leaf path, origin included."""
    return max(tree.depths())


def cumulative_heights(tree: BlockTree) -> list[int]:
    """Running maximum of block depth in creation order.

    Entry k is the height of the tree restricted to blocks 0..k, so the
    last entry equals height(tree).
    """
    out = []
    best = 0
    for d in tree.depths():
        if d > best:
            best = d
        out.append(best)
    return out


def proportion_valid(tree: BlockTree) -> float:
    """Longest-branch length over total block count; 1.0 iff no forks."""
    return height(tree) / tree.n_blocks


def longest_branch(tree: BlockTree) -> list[int]:
    """Block ids along the longest branch, root first.

    Depth ties are broken toward the earliest-created tip (smallest
    block id), matching the first-seen rule workers apply to tips.
    """
    depths = tree.depths()
    best = max(depths)
    tip = depths.index(best)
    path = [tip]
    while path[-1] != 0:
        path.append(tree.parent_of(path[-1]))
    path.reverse()
    return path


def invalid_gap_histogram(tree: BlockTree) -> GapHistogram:
    """Histogram of invalid blocks created between consecutive valid ones.

    For each consecutive pair (u, v) on the longest branch, counts blocks
    with creation index strictly between u and v that are off the branch.
    Blocks created after the branch tip fall in no gap, so the histogram
    accounts for every invalid block only when the tip is the newest
    block.
    """
    branch = longest_branch(tree)
    on_branch = set(branch)
    counts: dict[int, int] = {}
    for u, v in zip(branch, branch[1:]):
        gap = sum(1 for w in range(u + 1, v) if w not in on_branch)
        counts[gap] = counts.get(gap, 0) + 1
    return GapHistogram(counts)


def classify(alpha_mean: float, beta_mean: float) -> str:
    """Regime label from the delay/production mean ratio.

    Returns "slow" (ratio < 0.01), "chaotic" (ratio > 100), or "fast".
    The boundaries are soft; report the raw ratio alongside the label.
    """
    if alpha_mean <= 0:
        raise ConfigError("production mean must be > 0")
    if beta_mean < 0:
        raise ConfigError("delay mean must be >= 0")
    ratio = beta_mean / alpha_mean
    if ratio < SLOW_BELOW:
        return "slow"
    if ratio > CHAOTIC_ABOVE:
        return "chaotic"
    return "fast"


# ---------------------------------------------------------------------------
# Export / import


def tree_to_json(tree: BlockTree) -> str:
    doc = {
        "parents": list(tree.parents),
        "producers": list(tree.producers) if tree.producers is not None else None,
        "times": list(tree.times),
    }
    return json.dumps(doc, separators=(",", ":"))


def tree_from_json(text: str) -> BlockTree:
    doc = json.loads(text)
    producers = doc.get("producers")
    return BlockTree(
        parents=tuple(doc["parents"]),
        times=tuple(doc["times"]),
        producers=tuple(producers) if producers is not None else None,
    )


def tree_to_dot(tree: BlockTree) -> str:
    """DOT digraph with one edge child -> parent per non-origin block."""
    lines = ["digraph blocktree {"]
    for k in range(1, tree.n_blocks):
        lines.append(f"  {k} -> {tree.parent_of(k)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_tree(tree: BlockTree, fmt: str) -> str:
    if fmt == "json":
        return tree_to_json(tree)
    if fmt == "dot":
        return tree_to_dot(tree)
    raise ConfigError(f"unsupported tree format {fmt!r} (use dot or json)")
