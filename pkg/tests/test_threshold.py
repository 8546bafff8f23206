import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiermc.modelgen import DeltaPair, ModelParams
from hiermc.threshold import (
    REGIME_CLUSTERING,
    REGIME_GROUPING,
    REGIME_PERFECT,
    baseline_comparison,
    classify_regime,
    noise_prefactor,
    p_star,
    quality_metrics,
    regime_grid,
)

FIG_PARAMS = dict(n=4000, m=500, c=10, g=5, r=3, q=5, theta=0.0, p=0.0)


def fig_params(alpha, beta, gamma):
    return ModelParams(alpha=alpha, beta=beta, gamma=gamma, **FIG_PARAMS)


def test_quality_metric_examples():
    params = fig_params(40.0, 10.0, 0.5)
    qm = quality_metrics(params)
    assert qm.i_g == pytest.approx(10.0, rel=1e-12)  # (sqrt40 - sqrt10)^2 = 10
    # frozen from 40.5 - 2*sqrt(20), cross-checked at 1e-9
    assert qm.i_c1 == pytest.approx(31.55572809000084, rel=1e-9)
    equal = fig_params(7.0, 7.0, 7.0)
    qm = quality_metrics(equal)
    assert qm.i_g == qm.i_c1 == qm.i_c2 == 0.0


def test_remark_2322_reduction():
    # branch coefficients reduce to 3 log(m)/n, (1 - I_g/6), (1 - I_c1/6 - I_c2/3)
    params = ModelParams(
        n=300, m=100, c=2, g=3, r=2, q=2, theta=0.1, p=0.0,
        alpha=17.0, beta=10.0, gamma=0.5,
    )
    delta = DeltaPair(0.5, 0.5)
    res = p_star(params, delta)
    qm = quality_metrics(params)
    assert res.branches[0] == pytest.approx(3.0 * math.log(100) / 300, rel=1e-12)
    assert res.branches[1] == pytest.approx(
        math.log(300) / (0.5 * 100) * (1 - qm.i_g / 6), rel=1e-12
    )
    assert res.branches[2] == pytest.approx(
        max(0.0, math.log(300) / (0.5 * 100) * (1 - qm.i_c1 / 6 - qm.i_c2 / 3)),
        rel=1e-12,
    )
    assert res.p_star == pytest.approx(
        max(res.branches) / (math.sqrt(0.9) - math.sqrt(0.1)) ** 2, rel=1e-12
    )


def test_noise_prefactor_theta_zero():
    assert noise_prefactor(0.0, 5) == 1.0


def test_fig1_branch_values_against_independent_formula():
    # second, hand-written evaluation of each branch (kept deliberately naive)
    params = fig_params(30.0, 12.0, 1.0)
    delta = DeltaPair(1 / 3, 1 / 6)
    res = p_star(params, delta)
    n, m, c, g, r = 4000, 500, 10, 5, 3
    ref_a = (g * c) / (g - r + 1) * math.log(m) / n
    ref_b = math.log(n) / (delta.tau1 * m) * (
        1 - (math.sqrt(30.0) - math.sqrt(12.0)) ** 2 / (g * c)
    )
    ref_c = math.log(n) / (delta.tau2 * m) * (
        1
        - (
            (math.sqrt(30.0) - math.sqrt(1.0)) ** 2
            + (g - 1) * (math.sqrt(12.0) - math.sqrt(1.0)) ** 2
        )
        / (g * c)
    )
    refs = [ref_a, max(0.0, ref_b), max(0.0, ref_c)]
    for got, want in zip(res.branches, refs):
        assert got == pytest.approx(want, rel=1e-12)
    assert res.regime == ("perfect", "grouping_limited", "clustering_limited")[
        int(np.argmax(refs))
    ]


def test_zero_tau_is_infeasible():
    params = fig_params(30.0, 12.0, 1.0)
    res = p_star(params, DeltaPair(0.0, 1 / 6))
    assert res.p_star == math.inf
    assert not res.feasible


def test_regime_examples():
    # very informative graph: perfect regime (needs I_g >= ~24 at these settings)
    strong = fig_params(144.0, 49.0, 1.0)
    assert classify_regime(strong, DeltaPair(1 / 3, 1 / 6)) == REGIME_PERFECT
    # alpha == beta kills grouping information; tau1 <= tau2 keeps (b) >= (c)
    flat = fig_params(10.0, 10.0, 9.0)
    assert classify_regime(flat, DeltaPair(1 / 3, 1 / 3)) == REGIME_GROUPING
    # tau1 <= tau2 must never activate the clustering branch
    for alpha, beta, gamma in [(30.0, 12.0, 1.0), (10.0, 9.0, 8.0), (5.0, 2.0, 1.0)]:
        regime = classify_regime(fig_params(alpha, beta, gamma), DeltaPair(1 / 6, 1 / 3))
        assert regime != REGIME_CLUSTERING


def test_regime_grid_fig1_has_all_three_regimes():
    params = fig_params(30.0, 12.0, 1.0)
    cells = regime_grid(params, DeltaPair(1 / 3, 1 / 6), (0.0, 50.0), (0.0, 10.0), 21)
    regimes = {cell.regime for cell in cells}
    assert {REGIME_PERFECT, REGIME_GROUPING, REGIME_CLUSTERING} <= regimes


def test_regime_grid_fig2_has_no_clustering_limited():
    params = fig_params(30.0, 12.0, 1.0)
    cells = regime_grid(params, DeltaPair(1 / 6, 1 / 3), (0.0, 50.0), (0.0, 10.0), 21)
    assert all(cell.regime != REGIME_CLUSTERING for cell in cells)


def test_regime_grid_single_cell_matches_classifier():
    params = fig_params(30.0, 12.0, 1.0)
    delta = DeltaPair(1 / 3, 1 / 6)
    cells = regime_grid(params, delta, (4.0, 4.0), (2.0, 2.0), 1, gamma=1.0)
    assert len(cells) == 1
    swept = params.replace(
        alpha=cells[0].alpha, beta=cells[0].beta, gamma=cells[0].gamma
    )
    assert cells[0].regime == classify_regime(swept, delta)


def test_regime_grid_reconstructs_consistent_rates():
    params = fig_params(30.0, 12.0, 1.0)
    cells = regime_grid(params, DeltaPair(1 / 3, 1 / 6), (0.0, 20.0), (0.0, 6.0), 5)
    for cell in cells:
        assert cell.feasible
        assert cell.alpha >= cell.beta >= cell.gamma > 0
        qm = quality_metrics(
            params.replace(alpha=cell.alpha, beta=cell.beta, gamma=cell.gamma)
        )
        assert qm.i_g == pytest.approx(cell.i_g, abs=1e-9)
        assert qm.i_c2 == pytest.approx(cell.i_c2, abs=1e-9)


def test_baseline_comparison_fig3():
    params = fig_params(5.0, 5.0, 1.0)
    delta = DeltaPair(1 / 3, 1 / 6)
    points = baseline_comparison(params, delta, (0.0, 50.0), npoints=51)
    for pt in points:
        assert pt.complexity_hier <= pt.complexity_base + 1e-9
    # flat levels: hierarchy gc/(g-r+1) m log m vs baseline c r m log m
    last = points[-1]
    assert last.complexity_base / last.complexity_hier == pytest.approx(
        params.r * (params.g - params.r + 1) / params.g, rel=1e-9
    )


def test_baseline_flat_levels_coincide_when_r_equals_g():
    params = ModelParams(
        n=4000, m=500, c=10, g=5, r=5, q=7, theta=0.0, p=0.0,
        alpha=5.0, beta=5.0, gamma=1.0,
    )
    delta = DeltaPair(1 / 3, 1 / 6)
    points = baseline_comparison(params, delta, (40.0, 50.0), npoints=5)
    last = points[-1]
    assert last.complexity_hier == pytest.approx(last.complexity_base, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(
    i_g=st.floats(0.0, 30.0),
    i_c2=st.floats(0.0, 8.0),
    bump=st.floats(0.1, 10.0),
    tau1=st.floats(0.05, 1.0),
    tau2=st.floats(0.05, 1.0),
)
def test_p_star_monotonicity(i_g, i_c2, bump, tau1, tau2):
    delta = DeltaPair(tau1, tau2)
    base_cells = regime_grid(
        fig_params(30.0, 12.0, 1.0), delta, (i_g, i_g + bump), (i_c2, i_c2), 2
    )
    assert base_cells[1].p_star <= base_cells[0].p_star + 1e-12  # i_g up, p* down
    up_cells = regime_grid(
        fig_params(30.0, 12.0, 1.0), delta, (i_g, i_g), (i_c2, i_c2 + bump), 2
    )
    assert up_cells[1].p_star <= up_cells[0].p_star + 1e-12  # i_c2 up, p* down
    # larger tau never raises p*
    params = fig_params(30.0, 12.0, 1.0)
    lo = p_star(params, DeltaPair(tau1, tau2)).p_star
    hi = p_star(params, DeltaPair(min(1.0, tau1 * 1.5), tau2)).p_star
    assert hi <= lo + 1e-12


def test_p_star_theta_scaling():
    params = fig_params(30.0, 12.0, 1.0)
    delta = DeltaPair(1 / 3, 1 / 6)
    base = p_star(params.replace(theta=0.0, q=5), delta)
    bumped = p_star(params.replace(theta=0.2, q=5), delta)
    expect = noise_prefactor(0.0, 5) / noise_prefactor(0.2, 5)
    assert bumped.p_star / base.p_star == pytest.approx(expect, rel=1e-12)


def test_clustering_branch_never_beats_grouping_when_tau1_below_tau2():
    rng = np.random.default_rng(0)
    for _ in range(200):
        gamma = rng.uniform(0.1, 5.0)
        beta = gamma + rng.uniform(0.0, 10.0)
        alpha = beta + rng.uniform(0.0, 20.0)
        tau1 = rng.uniform(0.05, 0.5)
        tau2 = tau1 + rng.uniform(0.0, 0.5)
        params = fig_params(alpha, beta, gamma)
        res = p_star(params, DeltaPair(tau1, min(tau2, 1.0)))
        assert res.branches[2] <= res.branches[1] + 1e-12