"""Closed-form sample-complexity threshold p*, regime classification, grids.

The threshold is the maximum of three branch values divided by the noise
prefactor (sqrt(1-theta) - sqrt(theta/(q-1)))^2:

    (a) gc/(g-r+1) * log(m)/n
    (b) log(n)/(tau1*m) * (1 - I_g/(gc))
    (c) log(n)/(tau2*m) * (1 - (I_c1 + (g-1)*I_c2)/(gc))

Branch parentheticals can go negative when graph information is strong; a
negative branch can never achieve the max against (a) > 0, so branches (b)
and (c) are floored at 0 with the flooring recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .modelgen import DeltaPair, ModelParams

REGIME_PERFECT = "perfect"
REGIME_GROUPING = "grouping_limited"
REGIME_CLUSTERING = "clustering_limited"
REGIMES = (REGIME_PERFECT, REGIME_GROUPING, REGIME_CLUSTERING)

GRID_CSV_HEADER = "i_g,i_c2,alpha,beta,gamma,p_star,branch_a,branch_b,branch_c,regime,feasible"
BASELINE_CSV_HEADER = "i_g,alpha,p_star_hier,p_star_base,complexity_hier,complexity_base"

__all__ = [
    "QualityMetrics",
    "ThresholdResult",
    "noise_prefactor",
    "quality_metrics",
    "p_star",
    "classify_regime",
    "regime_grid",
    "write_regime_grid_csv",
    "baseline_comparison",
    "write_baseline_csv",
    "GRID_CSV_HEADER",
    "BASELINE_CSV_HEADER",
]


@dataclass(frozen=True)
class QualityMetrics:
    """Per-observation information and the three graph quality parameters."""

    i_r: float
    i_g: float
    i_c1: float
    i_c2: float


@dataclass(frozen=True)
class ThresholdResult:
    p_star: float
    branches: tuple[float, float, float]
    floored: tuple[bool, bool, bool]
    regime: str
    feasible: bool  # p_star <= 1, i.e. attainable by an observation probability


def noise_prefactor(theta: float, q: int) -> float:
    """(sqrt(1-theta) - sqrt(theta/(q-1)))^2."""
    return (math.sqrt(1.0 - theta) - math.sqrt(theta / (q - 1))) ** 2


def quality_metrics(params: ModelParams) -> QualityMetrics:
    if not params.alpha >= params.beta >= params.gamma > 0:
        raise ValueError("need alpha >= beta >= gamma > 0")
    sa, sb, sg = math.sqrt(params.alpha), math.sqrt(params.beta), math.sqrt(params.gamma)
    return QualityMetrics(
        i_r=params.p * noise_prefactor(params.theta, params.q),
        i_g=(sa - sb) ** 2,
        i_c1=(sa - sg) ** 2,
        i_c2=(sb - sg) ** 2,
    )


def _branches(params: ModelParams, delta: DeltaPair) -> tuple[list[float], list[bool]]:
    n, m, c, g, r = params.n, params.m, params.c, params.g, params.r
    if n < 2 or m < 2:
        raise ValueError("need n, m >= 2 for the threshold formulas")
    qm = quality_metrics(params)
    gc = g * c

    branch_a = gc / (g - r + 1) * math.log(m) / n

    floored = [False, False, False]

    def graph_branch(tau: Optional[float], parenthetical: float, idx: int) -> float:
        if parenthetical <= 0.0:
            floored[idx] = parenthetical < 0.0
            return 0.0
        if tau is None:
            # No pair of vectors realizes this branch (g < 2 or c < 2).
            return 0.0
        if tau == 0.0:
            return math.inf
        return math.log(n) / (tau * m) * parenthetical

    branch_b = graph_branch(delta.tau1, 1.0 - qm.i_g / gc, 1)
    branch_c = graph_branch(delta.tau2, 1.0 - (qm.i_c1 + (g - 1) * qm.i_c2) / gc, 2)
    return [branch_a, branch_b, branch_c], floored


def p_star(params: ModelParams, delta: DeltaPair) -> ThresholdResult:
    """Sharp threshold observation probability and its achieving branch.

    A zero tau makes the matching branch infinite: the instance has
    indistinguishable vectors and no observation probability suffices, so the
    result is marked infeasible. Ties resolve to the lowest branch index.
    """
    branches, floored = _branches(params, delta)
    best = max(branches)
    regime = REGIMES[branches.index(best)]
    value = best / noise_prefactor(params.theta, params.q)
    return ThresholdResult(
        p_star=value,
        branches=tuple(branches),
        floored=tuple(floored),
        regime=regime,
        feasible=value <= 1.0,
    )


def classify_regime(params: ModelParams, delta: DeltaPair) -> str:
    result = p_star(params, delta)
    if (
        delta.tau1 is not None
        and delta.tau2 is not None
        and delta.tau1 <= delta.tau2
        and result.regime == REGIME_CLUSTERING
        and result.branches[2] > max(result.branches[:2])
    ):
        raise AssertionError(
            "clustering-limited branch achieved a strict max with tau1 <= tau2"
        )
    return result.regime


def _solve_rates(i_g: float, i_c2: float, gamma: float) -> tuple[float, float, float]:
    """(alpha, beta, gamma) consistent with (I_g, I_c2) at fixed gamma.

    The square-root round trip can land a hair below the next rate, so the
    ordering is re-clamped."""
    sqrt_beta = math.sqrt(gamma) + math.sqrt(i_c2)
    sqrt_alpha = sqrt_beta + math.sqrt(i_g)
    beta = max(gamma, sqrt_beta**2)
    alpha = max(beta, sqrt_alpha**2)
    return alpha, beta, gamma


@dataclass(frozen=True)
class GridCell:
    i_g: float
    i_c2: float
    alpha: float
    beta: float
    gamma: float
    p_star: float
    branches: tuple[float, float, float]
    regime: str
    feasible: bool


def regime_grid(
    params: ModelParams,
    delta: DeltaPair,
    i_g_range: tuple[float, float],
    i_c2_range: tuple[float, float],
    resolution: int = 41,
    gamma: float = 1.0,
) -> list[GridCell]:
    """Sweep (I_g, I_c2) directly, reconstructing (alpha, beta) with gamma fixed."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    for lo, hi in (i_g_range, i_c2_range):
        if hi < lo or lo < 0:
            raise ValueError("ranges must be non-negative and ordered")
    i_g_vals = np.linspace(i_g_range[0], i_g_range[1], resolution)
    i_c2_vals = np.linspace(i_c2_range[0], i_c2_range[1], resolution)
    cells = []
    for i_g in i_g_vals:
        for i_c2 in i_c2_vals:
            try:
                alpha, beta, gamma_v = _solve_rates(float(i_g), float(i_c2), gamma)
                swept = params.replace(alpha=alpha, beta=beta, gamma=gamma_v)
                res = p_star(swept, delta)
                cells.append(
                    GridCell(
                        i_g=float(i_g),
                        i_c2=float(i_c2),
                        alpha=alpha,
                        beta=beta,
                        gamma=gamma_v,
                        p_star=res.p_star,
                        branches=res.branches,
                        regime=res.regime,
                        feasible=True,
                    )
                )
            except ValueError:
                cells.append(
                    GridCell(
                        i_g=float(i_g),
                        i_c2=float(i_c2),
                        alpha=math.nan,
                        beta=math.nan,
                        gamma=gamma,
                        p_star=math.nan,
                        branches=(math.nan, math.nan, math.nan),
                        regime="infeasible",
                        feasible=False,
                    )
                )
    return cells


def write_regime_grid_csv(cells: list[GridCell], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GRID_CSV_HEADER + "\n")
        for cell in cells:
            fh.write(
                f"{cell.i_g!r},{cell.i_c2!r},{cell.alpha!r},{cell.beta!r},"
                f"{cell.gamma!r},{cell.p_star!r},{cell.branches[0]!r},"
                f"{cell.branches[1]!r},{cell.branches[2]!r},{cell.regime},"
                f"{str(cell.feasible).lower()}\n"
            )


@dataclass(frozen=True)
class BaselinePoint:
    i_g: float
    alpha: float
    p_star_hier: float
    p_star_base: float
    complexity_hier: float
    complexity_base: float


def baseline_p_star(params: ModelParams, delta: DeltaPair) -> float:
    """Threshold for the flat model: gc independent communities, no code coupling.

    The flat model must estimate c*r independent vectors (cost c r log(m)/n)
    and separate the minimum-distance pair of communities, which is the
    cross-cluster pair at distance tau2 with graph quality I_c1.
    """
    if delta.tau2 is None or delta.tau2 == 0.0:
        return math.inf
    qm = quality_metrics(params)
    gc = params.g * params.c
    flat = params.c * params.r * math.log(params.m) / params.n
    graph = (
        math.log(params.n)
        / (delta.tau2 * params.m)
        * max(0.0, 1.0 - qm.i_c1 / gc)
    )
    return max(flat, graph) / noise_prefactor(params.theta, params.q)


def baseline_comparison(
    params: ModelParams,
    delta: DeltaPair,
    i_g_range: tuple[float, float],
    npoints: int = 101,
) -> list[BaselinePoint]:
    """Sample-complexity curves (n*m*p*) vs I_g: hierarchy model vs flat baseline.

    alpha is swept to realize I_g with beta and gamma held at their configured
    values; beta and gamma enter both formulas unchanged.
    """
    points = []
    for i_g in np.linspace(i_g_range[0], i_g_range[1], npoints):
        alpha = max(params.beta, (math.sqrt(params.beta) + math.sqrt(float(i_g))) ** 2)
        swept = params.replace(alpha=alpha)
        hier = p_star(swept, delta).p_star
        base = baseline_p_star(swept, delta)
        points.append(
            BaselinePoint(
                i_g=float(i_g),
                alpha=alpha,
                p_star_hier=hier,
                p_star_base=base,
                complexity_hier=params.n * params.m * hier,
                complexity_base=params.n * params.m * base,
            )
        )
    return points


def write_baseline_csv(points: list[BaselinePoint], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(BASELINE_CSV_HEADER + "\n")
        for pt in points:
            fh.write(
                f"{pt.i_g!r},{pt.alpha!r},{pt.p_star_hier!r},{pt.p_star_base!r},"
                f"{pt.complexity_hier!r},{pt.complexity_base!r}\n"
            )
