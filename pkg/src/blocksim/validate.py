"""On-demand cross-checks between the engines and the closed forms.

Three suites, runnable from the CLI: exact agreement of the event-driven
and delay-matrix engines under shared seeds, exact agreement of the
pruned and naive visibility scans, and the analytic bound on the gap
between a delay-matrix entry's mixture CDF and the delay CDF.

The equivalence suite mixes continuous configs with tie-rich ones
(constant production and a constant delay at an integer multiple), where
simultaneous arrival and creation actually happen.  Those are the
configs that catch an engine that miscounts boundary arrivals; with
continuous draws the boundary has probability zero.  The
``strict_visibility`` knob exists purely to let callers inject that
fault and confirm the suite catches it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import (DistributionSpec, cdf, constant, exponential, gamma,
                            chi_squared, mixture_cdf, sup_gap_bound)
from .infinite import InfSimConfig, simulate_infinite
from .matrix import simulate_matrix
from .network import NetSimConfig, simulate_network
from .rng import SampleStream, mix64

# Stream id for drawing randomized check configs; distinct from the
# per-run role ids so config draws never overlap run draws.
_CONFIG_STREAM_ID = 1000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_beta(u_kind: float, mean: float) -> DistributionSpec:
    if u_kind < 1 / 3:
        return exponential(mean)
    if u_kind < 2 / 3:
        return gamma(shape=2.0, mean=mean)
    return constant(mean)


def check_equivalence(base_seed: int = 0, configs: int = 100,
                      strict_visibility: bool = True) -> CheckResult:
    """Event-driven vs delay-matrix proportion, exact, shared seeds.

    Draws ``configs`` randomized configs (workers 2..20, blocks 10..500,
    exponential production, delay kind in {exponential, gamma,
    constant}) and appends tie-rich constant/constant configs.
    """
    stream = SampleStream(base_seed, _CONFIG_STREAM_ID)
    cases = []
    for i in range(configs):
        u = stream.uniforms(4)
        m = 2 + int(u[0] * 19)
        n = 10 + int(u[1] * 491)
        beta = _random_beta(u[2], mean=0.05 + 2.0 * u[3])
        cases.append(NetSimConfig(m=m, n=n, alpha=exponential(1.0), beta=beta,
                                  seed=mix64(base_seed, i), record_tree=False))
    for i, m in enumerate((2, 3, 5)):
        cases.append(NetSimConfig(m=m, n=60, alpha=constant(1.0),
                                  beta=constant(2.0),
                                  seed=mix64(base_seed, configs + i),
                                  record_tree=False))

    mismatches = []
    for cfg in cases:
        p_net = simulate_network(cfg).proportion
        p_mat = simulate_matrix(cfg, strict_visibility=strict_visibility).proportion
        if p_net != p_mat:
            mismatches.append((cfg.m, cfg.n, cfg.beta.kind, p_net, p_mat))
    if mismatches:
        first = mismatches[0]
        return CheckResult(
            "engine_equivalence", False,
            f"{len(mismatches)}/{len(cases)} configs disagree; first: "
            f"m={first[0]} n={first[1]} beta={first[2]} "
            f"network={first[3]:.6f} matrix={first[4]:.6f}")
    return CheckResult("engine_equivalence", True,
                       f"{len(cases)} configs agree exactly")


def check_pruning(base_seed: int = 0, runs: int = 50,
                  max_n: int = 2000) -> CheckResult:
    """Pruned vs naive scan on every step, plus the unbounded engines.

    Sweeps delay/production ratios 0.01, 1, and 10 (one full-size run
    each), with the remaining runs at randomized smaller sizes.  Also
    asserts that the pruned unbounded engine under the full-block draw
    contract reproduces the unpruned one bit for bit.
    """
    stream = SampleStream(base_seed, _CONFIG_STREAM_ID + 1)
    steps = 0
    for i in range(runs):
        u = stream.uniforms(3)
        if i < 3:
            n, ratio = max_n, (0.01, 1.0, 10.0)[i]
        else:
            n = 50 + int(u[0] * 750)
            ratio = 10.0 ** (-2 + 3 * u[1])
        m = 2 + int(u[2] * 9)
        cfg = NetSimConfig(m=m, n=n, alpha=exponential(1.0),
                           beta=exponential(ratio), seed=mix64(base_seed, 7000 + i),
                           record_tree=False)
        try:
            simulate_matrix(cfg, check_pruning=True)
        except AssertionError as exc:
            return CheckResult("pruning_exactness", False,
                               f"run {i} (m={m}, n={n}, ratio={ratio:g}): {exc}")
        steps += n - 1

        inf_n = min(n, 600)
        pruned = simulate_infinite(
            InfSimConfig(n=inf_n, alpha=exponential(1.0), beta=exponential(ratio),
                         seed=mix64(base_seed, 8000 + i), record_series=True),
            align_draws=True)
        plain = simulate_infinite(
            InfSimConfig(n=inf_n, alpha=exponential(1.0), beta=exponential(ratio),
                         seed=mix64(base_seed, 8000 + i), use_pruning=False,
                         record_series=True))
        if pruned.height_series != plain.height_series:
            return CheckResult("pruning_exactness", False,
                               f"unbounded engine run {i}: pruned and unpruned "
                               f"height series differ (n={inf_n}, ratio={ratio:g})")
    return CheckResult("pruning_exactness", True,
                       f"{runs} runs, {steps} steps, all scans agree")


def check_mixture_bound(grid_points: int = 10**4) -> CheckResult:
    """sup |mixture_cdf - delay cdf| <= 2/m on a dense grid, per kind."""
    specs = (exponential(1.0), gamma(shape=2.0, mean=1.5), chi_squared(3.0),
             constant(1.0))
    for spec in specs:
        # Cover negatives, zero, and the upper tail of every kind.
        r = np.concatenate((
            np.linspace(-1.0, 0.0, grid_points // 10),
            np.linspace(0.0, 12.0 * max(spec.mean, 1.0), grid_points),
        ))
        base = np.asarray(cdf(spec, r))
        for m in (1, 2, 10, 100):
            gap = float(np.max(np.abs(np.asarray(mixture_cdf(spec, m, r)) - base)))
            if gap > sup_gap_bound(m):
                return CheckResult(
                    "mixture_cdf_bound", False,
                    f"{spec.kind}, m={m}: sup gap {gap:.6f} > {sup_gap_bound(m):.6f}")
    return CheckResult("mixture_cdf_bound", True,
                       f"all kinds within 2/m on {grid_points}-point grids")


def run_validation(base_seed: int = 0, quick: bool = False,
                   strict_visibility: bool = True) -> list[CheckResult]:
    """Run all suites; quick mode shrinks sizes to finish in seconds."""
    if quick:
        return [
            check_equivalence(base_seed, configs=20,
                              strict_visibility=strict_visibility),
            check_pruning(base_seed, runs=10, max_n=500),
            check_mixture_bound(grid_points=2000),
        ]
    return [
        check_equivalence(base_seed, configs=100,
                          strict_visibility=strict_visibility),
        check_pruning(base_seed, runs=50, max_n=2000),
        check_mixture_bound(),
    ]
