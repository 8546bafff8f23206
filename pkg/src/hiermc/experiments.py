"""Seeded Monte-Carlo harness: single trials, success-rate sweeps, persistence.

Per-trial seeds are counter-based: trial (point_index, trial_index) under
master seed s draws from numpy's SeedSequence([s, point_index, trial_index]),
so results are independent of worker scheduling and the sweep CSV is
byte-identical across reruns. Sweep rows are per-point aggregates with exact
Clopper-Pearson confidence intervals; completed points found in the output
file are skipped on re-runs.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import beta as beta_dist

from . import mds
from .estimators import (
    EstimatorConfig,
    exact_ml,
    is_success,
    practical_estimate,
)
from .likelihood import neg_log_likelihood
from .modelgen import (
    DeltaPair,
    GroundTruthConfig,
    Instance,
    ModelParams,
    build_ground_truth,
    compute_delta,
    sample_graph,
    sample_observation,
)
from .threshold import p_star

SWEEP_CSV_HEADER = (
    "n,m,c,g,r,q,theta,alpha,beta,gamma,tau1,tau2,p,p_star,ratio,"
    "trials,successes,success_rate,ci_lo,ci_hi,estimator,master_seed"
)

__all__ = [
    "SWEEP_CSV_HEADER",
    "TrialConfig",
    "TrialResult",
    "SweepConfig",
    "trial_seed_sequence",
    "run_trial",
    "generate_instance",
    "sweep",
    "clopper_pearson",
    "selftest",
]


@dataclass
class TrialConfig:
    """Everything one trial needs besides its seed."""

    params: ModelParams
    ground_truth: GroundTruthConfig = field(default_factory=GroundTruthConfig)
    estimator: str = "practical"  # or "exact"
    estimator_config: EstimatorConfig = field(default_factory=EstimatorConfig)
    exact_budget: int = 10**6

    def __post_init__(self):
        if self.estimator not in ("practical", "exact"):
            raise ValueError(f"unknown estimator: {self.estimator}")


@dataclass
class TrialResult:
    point_index: int
    trial_index: int
    p: float
    p_star: float
    ratio: float
    success: bool
    est_score: float
    gt_score: float
    cluster_pair_accuracy: float
    group_pair_accuracy: float
    diagnostics: dict
    wall_time: float


def trial_seed_sequence(master_seed: int, point_index: int, trial_index: int) -> np.random.SeedSequence:
    """Counter-based per-trial seed derivation (documented scheme)."""
    return np.random.SeedSequence([master_seed, point_index, trial_index])


def generate_instance(
    params: ModelParams,
    gt_config: GroundTruthConfig,
    seed_seq: np.random.SeedSequence,
) -> Instance:
    """Ground truth, graph and observation from three child streams."""
    gt_seed, graph_seed, obs_seed = seed_seq.spawn(3)
    matrix, vectors, partition = build_ground_truth(params, gt_seed, gt_config)
    graph = sample_graph(params, partition, graph_seed)
    observation = sample_observation(matrix, params, obs_seed)
    delta = compute_delta(vectors)
    return Instance(
        params=params,
        seed=None,
        matrix=matrix,
        vectors=vectors,
        partition=partition,
        graph=graph,
        observation=observation,
        delta=delta,
    )


def _pair_accuracy(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Fraction of user pairs on whose co-membership two labelings agree."""
    same_a = labels_a[:, None] == labels_a[None, :]
    same_b = labels_b[:, None] == labels_b[None, :]
    n = labels_a.size
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    return float((same_a == same_b)[upper].mean())


def run_trial(
    config: TrialConfig,
    trial_seed,
    point_index: int = 0,
    trial_index: int = 0,
) -> TrialResult:
    """Generate -> estimate -> compare; fully determined by (config, seed)."""
    if not isinstance(trial_seed, np.random.SeedSequence):
        trial_seed = np.random.SeedSequence(trial_seed)
    start = time.perf_counter()
    inst_seq, est_seq = trial_seed.spawn(2)
    inst = generate_instance(config.params, config.ground_truth, inst_seq)
    threshold = p_star(config.params, inst.delta)
    if config.estimator == "exact":
        est = exact_ml(inst.observation, inst.graph, config.params, config.exact_budget)
    else:
        est = practical_estimate(
            inst.observation,
            inst.graph,
            config.params,
            config.estimator_config,
            seed=est_seq,
        )
    gt_score = neg_log_likelihood(
        inst.observation, inst.graph, inst.matrix, inst.partition, config.params
    )
    success = is_success(est, inst.matrix)
    ratio = config.params.p / threshold.p_star if threshold.p_star > 0 else math.inf
    refinement = est.diagnostics.get("refinement", {})
    return TrialResult(
        point_index=point_index,
        trial_index=trial_index,
        p=config.params.p,
        p_star=threshold.p_star,
        ratio=ratio,
        success=success,
        est_score=est.score,
        gt_score=gt_score,
        cluster_pair_accuracy=_pair_accuracy(
            est.partition.cluster, inst.partition.cluster
        ),
        group_pair_accuracy=_pair_accuracy(est.partition.cell, inst.partition.cell),
        diagnostics={
            "refinement_iterations": refinement.get("iterations"),
            "converged": refinement.get("converged"),
        },
        wall_time=time.perf_counter() - start,
    )


# -- sweeps -------------------------------------------------------------------


@dataclass
class SweepConfig:
    """A grid of (n, p/p*-ratio or p) points, many seeded trials per point."""

    base_params: dict  # c, g, r, q, theta, alpha, beta, gamma (n, m, p added per point)
    n_values: list[int]
    m_divisor: Optional[float] = None  # m = n / m_divisor
    m_values: Optional[list[int]] = None
    ratios: Optional[list[float]] = None
    p_values: Optional[list[float]] = None
    trials: int = 200
    master_seed: int = 0
    estimator: str = "practical"
    estimator_config: dict = field(default_factory=dict)
    ground_truth: dict = field(default_factory=lambda: {"mode": "balanced_sections"})
    workers: int = 1

    def __post_init__(self):
        if (self.ratios is None) == (self.p_values is None):
            raise ValueError("exactly one of ratios / p_values must be given")
        if (self.m_divisor is None) == (self.m_values is None):
            raise ValueError("exactly one of m_divisor / m_values must be given")
        if self.m_values is not None and len(self.m_values) != len(self.n_values):
            raise ValueError("m_values must match n_values")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.ratios is not None and any(r <= 0 for r in self.ratios):
            raise ValueError("ratios must be positive")
        mode = self.ground_truth.get("mode", "random")
        if mode == "random":
            raise ValueError(
                "sweeps need a deterministic-delta ground-truth mode "
                "(sections, balanced_sections, tau_target, or an explicit basis)"
            )

    @staticmethod
    def from_dict(d: dict) -> "SweepConfig":
        return SweepConfig(**d)


def _point_m(cfg: SweepConfig, n_idx: int) -> int:
    if cfg.m_values is not None:
        return cfg.m_values[n_idx]
    m = round(cfg.n_values[n_idx] / cfg.m_divisor)
    if m < 1:
        raise ValueError("m must be >= 1")
    return m


def _reference_delta(params: ModelParams, gt_config: GroundTruthConfig) -> DeltaPair:
    """Delta of the (deterministic) basis layout; column shuffles do not move it."""
    probe_cfg = GroundTruthConfig(**{**gt_config.__dict__, "shuffle_columns": False})
    _, vectors, _ = build_ground_truth(params, np.random.SeedSequence(0), probe_cfg)
    return compute_delta(vectors)


@dataclass(frozen=True)
class SweepPoint:
    point_index: int
    params: ModelParams
    p_star: float
    ratio: float
    tau1: Optional[float]
    tau2: Optional[float]


def sweep_points(cfg: SweepConfig) -> list[SweepPoint]:
    points = []
    idx = 0
    for n_idx, n in enumerate(cfg.n_values):
        m = _point_m(cfg, n_idx)
        base = ModelParams(n=n, m=m, p=0.0, **cfg.base_params)
        gt_cfg = GroundTruthConfig.from_dict(cfg.ground_truth)
        delta = _reference_delta(base, gt_cfg)
        ref = p_star(base, delta)
        sweep_vals = cfg.ratios if cfg.ratios is not None else cfg.p_values
        for val in sweep_vals:
            if cfg.ratios is not None:
                p = min(val * ref.p_star, 1.0)
                ratio = val
            else:
                p = val
                ratio = val / ref.p_star if ref.p_star > 0 else math.inf
            points.append(
                SweepPoint(
                    point_index=idx,
                    params=base.replace(p=p),
                    p_star=ref.p_star,
                    ratio=ratio,
                    tau1=delta.tau1,
                    tau2=delta.tau2,
                )
            )
            idx += 1
    return points


def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval."""
    if not 0 <= k <= n or n < 1:
        raise ValueError("need 0 <= k <= n, n >= 1")
    alpha = 1.0 - confidence
    lo = 0.0 if k == 0 else float(beta_dist.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def _format_row(point: SweepPoint, cfg: SweepConfig, successes: int) -> str:
    pr = point.params
    rate = successes / cfg.trials
    ci_lo, ci_hi = clopper_pearson(successes, cfg.trials)
    fields = [
        pr.n, pr.m, pr.c, pr.g, pr.r, pr.q, repr(pr.theta), repr(pr.alpha),
        repr(pr.beta), repr(pr.gamma),
        repr(point.tau1) if point.tau1 is not None else "",
        repr(point.tau2) if point.tau2 is not None else "",
        repr(pr.p), repr(point.p_star), repr(point.ratio),
        cfg.trials, successes, repr(rate), repr(ci_lo), repr(ci_hi),
        cfg.estimator, cfg.master_seed,
    ]
    return ",".join(str(f) for f in fields)


def _row_key(parts: list[str]) -> tuple:
    # identity of a point within an output file
    return (parts[0], parts[1], parts[12], parts[14], parts[20], parts[21])


def _completed_keys(path) -> set:
    done = set()
    if path and os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header and header != SWEEP_CSV_HEADER:
                raise ValueError(f"existing output has unexpected header: {header}")
            for line in fh:
                line = line.rstrip("\n")
                if line:
                    done.add(_row_key(line.split(",")))
    return done


def _trial_task(args) -> tuple[int, int, bool]:
    config, master_seed, point_index, trial_index = args
    seq = trial_seed_sequence(master_seed, point_index, trial_index)
    result = run_trial(config, seq, point_index, trial_index)
    return point_index, trial_index, result.success


def sweep(cfg: SweepConfig, out_path=None) -> list[dict]:
    """Run all points, appending one aggregate row per point to the CSV.

    Already-completed points (matched by the row identity fields) are skipped,
    so an interrupted sweep resumes and a finished one is a no-op.
    """
    points = sweep_points(cfg)
    est_cfg = EstimatorConfig.from_dict(cfg.estimator_config)
    gt_cfg = GroundTruthConfig.from_dict(cfg.ground_truth)
    done = _completed_keys(out_path)
    out_fh = None
    if out_path:
        new_file = not os.path.exists(out_path) or os.path.getsize(out_path) == 0
        out_fh = open(out_path, "a", encoding="utf-8")
        if new_file:
            out_fh.write(SWEEP_CSV_HEADER + "\n")
            out_fh.flush()
    rows: list[dict] = []
    try:
        pending = []
        for point in points:
            config = TrialConfig(
                params=point.params,
                ground_truth=gt_cfg,
                estimator=cfg.estimator,
                estimator_config=est_cfg,
            )
            row_probe = _format_row(point, cfg, 0).split(",")
            if _row_key(row_probe) in done:
                continue
            pending.append((point, config))
        for point, config in pending:
            tasks = [
                (config, cfg.master_seed, point.point_index, t)
                for t in range(cfg.trials)
            ]
            if cfg.workers > 1:
                with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                    outcomes = list(pool.map(_trial_task, tasks, chunksize=4))
            else:
                outcomes = [_trial_task(t) for t in tasks]
            successes = sum(1 for _, _, ok in outcomes if ok)
            line = _format_row(point, cfg, successes)
            if out_fh:
                out_fh.write(line + "\n")
                out_fh.flush()
            rows.append(_row_dict(line))
    finally:
        if out_fh:
            out_fh.close()
    return rows


def _row_dict(line: str) -> dict:
    return dict(zip(SWEEP_CSV_HEADER.split(","), line.split(",")))


# -- selftest -----------------------------------------------------------------


def selftest(verbose: bool = True) -> int:
    """Quick oracle-equivalence checks; returns the number of failures."""
    from . import oracles
    from .threshold import noise_prefactor

    failures = 0

    def check(name: str, ok: bool):
        nonlocal failures
        if not ok:
            failures += 1
        if verbose:
            print(f"[selftest] {name}: {'PASS' if ok else 'FAIL'}")

    # field arithmetic spot checks
    from .ffield import FieldElem, inv

    check("gf_inverse", inv(FieldElem(2, 5)).value == 3 and inv(FieldElem(3, 7)).value == 5)

    # MDS structure
    code = mds.build_code(3, 2, 2)
    words = {tuple(w) for w in mds.all_codewords(code)}
    check(
        "mds_parity_code",
        words == {(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)}
        and mds.min_distance(code) == 2,
    )
    try:
        mds.build_code(5, 2, 2)
        check("mds_rejects_522", False)
    except mds.CodeExistenceError:
        check("mds_rejects_522", True)

    # threshold reduction at (c, g, r, q) = (2, 3, 2, 2)
    params = ModelParams(
        n=300, m=100, c=2, g=3, r=2, q=2, theta=0.1, p=0.0,
        alpha=40.0, beta=10.0, gamma=0.5,
    )
    res = p_star(params, DeltaPair(0.5, 0.5))
    expect_a = 3.0 * math.log(params.m) / params.n
    check("threshold_branch_a", abs(res.branches[0] - expect_a) < 1e-12)

    # likelihood and exact ML against the brute-force oracle
    rng_params = ModelParams(
        n=4, m=2, c=2, g=1, r=1, q=2, theta=0.2, p=0.7,
        alpha=8.0, beta=4.0, gamma=1.0,
    )
    ok_ml = True
    ok_lik = True
    for seed in range(3):
        cfgs = TrialConfig(params=rng_params, estimator="exact")
        seq = trial_seed_sequence(123, 0, seed)
        inst = generate_instance(rng_params, GroundTruthConfig(), seq)
        est = exact_ml(inst.observation, inst.graph, rng_params)
        entries, cell, score = oracles.oracle_exact_ml(
            inst.observation, inst.graph, rng_params
        )
        ok_ml &= bool(np.array_equal(est.matrix.entries, entries))
        ok_ml &= abs(est.score - score) < 1e-9
        brute = oracles.brute_neg_log_prob(
            inst.observation, inst.graph, inst.matrix.entries,
            inst.partition.cell, rng_params,
        )
        fast = neg_log_likelihood(
            inst.observation, inst.graph, inst.matrix, inst.partition, rng_params
        )
        const = oracles.model_constant(inst.observation, rng_params)
        ok_lik &= abs((brute - const) - fast) < 1e-9 * max(1.0, abs(fast))
    check("exact_ml_oracle", ok_ml)
    check("likelihood_oracle", ok_lik)

    prefac = noise_prefactor(0.1, 2)
    check("noise_prefactor", abs(prefac - 0.4) < 1e-12)
    return failures
