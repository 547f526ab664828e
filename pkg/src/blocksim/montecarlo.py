"""Replication harness and the experiment drivers built on it.

run_replications executes any engine R times on independent substreams
and aggregates the proportion estimates.  The three experiment drivers
produce plot-ready tables: convergence of the bounded engine toward the
unbounded one as the worker count grows, efficiency of the chain as a
function of the delay/production mean ratio, and paired outcome
histograms for the bounded and unbounded engines.

Seeding is two-level: replication r of a unit that was handed
``base_seed`` runs with seed mix64(base_seed, r), and each experiment
point derives its own base seed from the plan seed and the point index.
Everything downstream is deterministic given the plan.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import DistributionSpec, with_mean
from .errors import ConfigError
from .infinite import InfSimConfig, simulate_infinite
from .matrix import simulate_matrix
from .network import NetSimConfig, simulate_network
from .rng import mix64

ENGINES = {
    "network": simulate_network,
    "matrix": simulate_matrix,
    "infinite": simulate_infinite,
}

EXPERIMENT_KINDS = ("convergence", "efficiency", "pdf_histogram", "single")

# Column layouts of the emitted tables; stable, recorded in manifests.
CONVERGENCE_COLUMNS = ("m", "mean_p", "q25", "q75", "replications")
EFFICIENCY_COLUMNS = ("ratio", "alpha_mean", "beta_mean", "mean_p", "std_err",
                      "predicted_p", "abs_error")
HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "density_Am", "density_Ainf")
SINGLE_COLUMNS = ("replication", "p_n")


@dataclass(frozen=True)
class McEstimate:
    """Aggregate of one Monte Carlo batch of proportion estimates."""

    mean: float
    std_error: float
    quantiles: dict
    replications: int
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentPlan:
    """One experiment: what to sweep, how often, and from which seed.

    sweep holds worker counts for convergence and mean ratios for
    efficiency; it is ignored by pdf_histogram and single runs.  m is
    the bounded-engine worker count for pdf_histogram (and network or
    matrix single runs); engine only matters for kind="single".
    """

    kind: str
    alpha: DistributionSpec
    beta: DistributionSpec
    n: int
    base_seed: int
    replications: int = 100
    sweep: tuple[float, ...] = ()
    m: int = 100
    bins: int = 20
    engine: str = "infinite"

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.replications < 1:
            raise ConfigError("replication count must be >= 1")
        if self.kind in ("convergence", "efficiency") and not self.sweep:
            raise ConfigError(f"{self.kind} experiment needs a non-empty sweep")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")


@dataclass(frozen=True)
class ExperimentResult:
    """A finished experiment: a table plus side artifacts.

    rows hold plain scalars in column order; extras carries values that
    do not fit the table (sample arrays, KS distances, warnings).
    """

    kind: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    extras: dict = field(default_factory=dict)


def _run_one(engine_name: str, config) -> float:
    return ENGINES[engine_name](config).proportion


def run_replications(engine, config, replications: int, base_seed: int,
                     jobs: int = 1) -> McEstimate:
    """Run ``engine`` R times and aggregate the proportion estimates.

    engine is a name from ENGINES or a callable of one config.
    Replication r runs with seed mix64(base_seed, r), overriding
    config.seed.  Results are reduced in replication order, so the
    aggregate is deterministic regardless of ``jobs``; only named
    engines run in parallel.
    """
    if replications < 1:
        raise ConfigError("replication count must be >= 1")
    configs = [replace(config, seed=mix64(base_seed, r)) for r in range(replications)]

    values: list[float] = []
    if jobs > 1 and isinstance(engine, str):
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, replications // (jobs * 4))
            values = list(pool.map(_run_one, [engine] * replications, configs,
                                   chunksize=chunk))
    else:
        fn = ENGINES[engine] if isinstance(engine, str) else engine
        for r, cfg in enumerate(configs):
            try:
                values.append(fn(cfg).proportion)
            except Exception as exc:
                raise RuntimeError(f"replication {r} failed: {exc}") from exc

    arr = np.asarray(values)
    q25, q50, q75 = (float(q) for q in np.quantile(arr, (0.25, 0.5, 0.75)))
    return McEstimate(
        mean=float(arr.mean()),
        std_error=float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0,
        quantiles={0.25: q25, 0.5: q50, 0.75: q75},
        replications=replications,
        values=tuple(values),
    )


def predicted_p(alpha_mean: float, beta_mean: float) -> float:
    """Closed-form prediction mean_production/(mean_production+mean_delay).

    Exact in the unbounded-worker model when the delay is deterministic;
    delay variability pushes the simulated proportion above this value,
    mildly for low-variance delays and strongly in chaotic regimes.  Use
    prediction_warning to flag ratios where the prediction is dubious.
    """
    if alpha_mean <= 0:
        raise ConfigError("production mean must be > 0")
    if beta_mean < 0:
        raise ConfigError("delay mean must be >= 0")
    return alpha_mean / (alpha_mean + beta_mean)


def prediction_warning(alpha_mean: float, beta_mean: float) -> bool:
    """True when the ratio leaves the regime the prediction was made for."""
    return beta_mean / alpha_mean > 1.0


def derived_metrics(p_mean: float, alpha_mean: float) -> dict:
    """Chain metrics implied by a proportion estimate.

    growth_rate: valid blocks per unit time, p/mean_production.
    invalid_rate: invalid blocks per unit time, (1-p)/mean_production.
    confirmation_time: expected wait for one confirmation, mean_production/p.
    """
    if not 0 < p_mean <= 1:
        raise ConfigError(f"proportion must lie in (0, 1], got {p_mean}")
    if alpha_mean <= 0:
        raise ConfigError("production mean must be > 0")
    return {
        "growth_rate": p_mean / alpha_mean,
        "invalid_rate": (1 - p_mean) / alpha_mean,
        "confirmation_time": alpha_mean / p_mean,
    }


def expected_gap_forms(p_mean: float, alpha_mean: float) -> dict:
    """Two forms of the expected invalid-block production, both reported.

    rate_form (1-p)/mean_production is invalid blocks per unit time;
    count_form (1-p)/p is invalid blocks per valid block, the mean of
    the per-gap count.  Neither is asserted against simulation; the gap
    histogram from trees is the measured ground truth.
    """
    if not 0 < p_mean <= 1:
        raise ConfigError(f"proportion must lie in (0, 1], got {p_mean}")
    return {
        "rate_form": (1 - p_mean) / alpha_mean,
        "count_form": (1 - p_mean) / p_mean,
    }


def convergence_experiment(plan: ExperimentPlan, jobs: int = 1) -> ExperimentResult:
    """Mean proportion per worker count, plus the unbounded reference.

    Runs the matrix engine once per m in plan.sweep and the unbounded
    engine as the final row (m column "inf"), all on plan.n blocks with
    plan.replications each.
    """
    if plan.kind != "convergence":
        raise ConfigError(f"plan kind is {plan.kind!r}, expected convergence")
    rows = []
    estimates = {}
    for idx, m in enumerate(plan.sweep):
        cfg = NetSimConfig(m=int(m), n=plan.n, alpha=plan.alpha, beta=plan.beta,
                           seed=0, record_tree=False)
        est = run_replications("matrix", cfg, plan.replications,
                               mix64(plan.base_seed, idx), jobs=jobs)
        estimates[int(m)] = est
        rows.append((int(m), est.mean, est.quantiles[0.25], est.quantiles[0.75],
                     est.replications))
    inf_cfg = InfSimConfig(n=plan.n, alpha=plan.alpha, beta=plan.beta, seed=0)
    inf_est = run_replications("infinite", inf_cfg, plan.replications,
                               mix64(plan.base_seed, len(plan.sweep)), jobs=jobs)
    estimates["inf"] = inf_est
    rows.append(("inf", inf_est.mean, inf_est.quantiles[0.25],
                 inf_est.quantiles[0.75], inf_est.replications))
    return ExperimentResult(kind=plan.kind, columns=CONVERGENCE_COLUMNS,
                            rows=tuple(rows), extras={"estimates": estimates})


def default_ratio_grid() -> tuple[float, ...]:
    """Log grid over mean ratios 1e-3..1e2, 11 points per decade.

    Endpoint inclusive, so 51 points across the five decades.
    """
    return tuple(float(r) for r in np.logspace(-3.0, 2.0, 51))


def efficiency_experiment(plan: ExperimentPlan, jobs: int = 1) -> ExperimentResult:
    """Mean proportion per delay/production ratio, with the prediction.

    For each ratio r in plan.sweep the delay spec is rescaled to mean
    r * alpha_mean and the unbounded engine is replicated.  Rows pair
    the measurement with predicted_p and their absolute difference.
    """
    if plan.kind != "efficiency":
        raise ConfigError(f"plan kind is {plan.kind!r}, expected efficiency")
    rows = []
    warned = []
    for idx, ratio in enumerate(plan.sweep):
        beta_r = with_mean(plan.beta, float(ratio) * plan.alpha.mean)
        cfg = InfSimConfig(n=plan.n, alpha=plan.alpha, beta=beta_r, seed=0)
        est = run_replications("infinite", cfg, plan.replications,
                               mix64(plan.base_seed, idx), jobs=jobs)
        pred = predicted_p(plan.alpha.mean, beta_r.mean)
        if prediction_warning(plan.alpha.mean, beta_r.mean):
            warned.append(float(ratio))
        rows.append((float(ratio), plan.alpha.mean, beta_r.mean, est.mean,
                     est.std_error, pred, abs(est.mean - pred)))
    return ExperimentResult(kind=plan.kind, columns=EFFICIENCY_COLUMNS,
                            rows=tuple(rows),
                            extras={"chaotic_ratios": warned})


def pdf_histogram_experiment(plan: ExperimentPlan, jobs: int = 1) -> ExperimentResult:
    """Paired outcome densities of the bounded and unbounded engines.

    Collects plan.replications outcomes from the matrix engine with
    plan.m workers and as many from the unbounded engine, bins both on
    shared edges, and reports the two-sample Kolmogorov-Smirnov
    distance in extras.
    """
    if plan.kind != "pdf_histogram":
        raise ConfigError(f"plan kind is {plan.kind!r}, expected pdf_histogram")
    m_cfg = NetSimConfig(m=plan.m, n=plan.n, alpha=plan.alpha, beta=plan.beta,
                         seed=0, record_tree=False)
    est_m = run_replications("matrix", m_cfg, plan.replications,
                             mix64(plan.base_seed, 0), jobs=jobs)
    inf_cfg = InfSimConfig(n=plan.n, alpha=plan.alpha, beta=plan.beta, seed=0)
    est_inf = run_replications("infinite", inf_cfg, plan.replications,
                               mix64(plan.base_seed, 1), jobs=jobs)

    pooled = np.asarray(est_m.values + est_inf.values)
    edges = np.histogram_bin_edges(pooled, bins=plan.bins)
    dens_m, _ = np.histogram(est_m.values, bins=edges, density=True)
    dens_inf, _ = np.histogram(est_inf.values, bins=edges, density=True)
    rows = tuple(
        (float(edges[i]), float(edges[i + 1]), float(dens_m[i]), float(dens_inf[i]))
        for i in range(len(edges) - 1)
    )
    return ExperimentResult(
        kind=plan.kind, columns=HISTOGRAM_COLUMNS, rows=rows,
        extras={
            "ks_distance": two_sample_ks(est_m.values, est_inf.values),
            "mean_Am": est_m.mean,
            "mean_Ainf": est_inf.mean,
            "mean_shift": est_inf.mean - est_m.mean,
        },
    )


def single_experiment(plan: ExperimentPlan, jobs: int = 1) -> ExperimentResult:
    """Replications of one engine at fixed parameters, one row each."""
    if plan.kind != "single":
        raise ConfigError(f"plan kind is {plan.kind!r}, expected single")
    if plan.engine == "infinite":
        cfg = InfSimConfig(n=plan.n, alpha=plan.alpha, beta=plan.beta, seed=0)
    else:
        cfg = NetSimConfig(m=plan.m, n=plan.n, alpha=plan.alpha, beta=plan.beta,
                           seed=0, record_tree=False)
    est = run_replications(plan.engine, cfg, plan.replications,
                           mix64(plan.base_seed, 0), jobs=jobs)
    rows = tuple((r, v) for r, v in enumerate(est.values))
    return ExperimentResult(kind=plan.kind, columns=SINGLE_COLUMNS, rows=rows,
                            extras={"estimate": est})


def run_experiment(plan: ExperimentPlan, jobs: int = 1) -> ExperimentResult:
    """Dispatch a plan to its driver."""
    driver = {
        "convergence": convergence_experiment,
        "efficiency": efficiency_experiment,
        "pdf_histogram": pdf_histogram_experiment,
        "single": single_experiment,
    }[plan.kind]
    return driver(plan, jobs=jobs)


def two_sample_ks(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance between outcome batches."""
    from scipy.stats import ks_2samp

    return float(ks_2samp(np.asarray(a), np.asarray(b)).statistic)
