"""Scheme runners: pinned benchmarks, the fixed baseline, and dominance.

The adaptive scheme's constraint box contains the lifted image of every
benchmark operating point, and its runner evaluates those images directly,
so its reported utility can never fall below a benchmark's on the same
drop.  That invariant is the core check here.
"""

import numpy as np
import pytest

from alphaduplex import (
    DecisionVector,
    FadingModel,
    ProblemSpec,
    SchemeConfig,
    SchemeKind,
    SystemParams,
    UtilityKind,
    compare_all,
    link_metrics,
    realize,
    run_scheme,
    utility,
)
from alphaduplex.schemes import _box_candidate


class TestFixedScheme:
    def test_operating_point(self, profile):
        params = SystemParams(N=2, fading=FadingModel.NONE)
        net = realize(params, 5)
        res = run_scheme(SchemeConfig(SchemeKind.FIXED_ALPHA_FIXED_POWER), net, profile, params)
        np.testing.assert_allclose(res.x.p_u, params.p_u_max)
        np.testing.assert_allclose(res.x.p_b, params.p_b_tot / 2)
        np.testing.assert_allclose(res.x.alpha, params.alpha_min)
        assert res.converged
        assert res.solver is None

    def test_matches_direct_evaluation(self, profile):
        params = SystemParams(N=2, fading=FadingModel.NONE)
        net = realize(params, 5)
        res = run_scheme(SchemeConfig(SchemeKind.FIXED_ALPHA_FIXED_POWER), net, profile, params)
        m = link_metrics(res.x, net, profile)
        np.testing.assert_allclose(res.R_u, m.R_u, rtol=1e-12)
        np.testing.assert_allclose(res.R_b, m.R_b, rtol=1e-12)
        np.testing.assert_allclose(
            res.utility, utility(res.x, net, profile, UtilityKind.SUM_RATE), rtol=1e-12
        )

    def test_n_starts_irrelevant(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 7)
        a = run_scheme(SchemeConfig(SchemeKind.FIXED_ALPHA_FIXED_POWER, n_starts=1), net, profile, params)
        b = run_scheme(SchemeConfig(SchemeKind.FIXED_ALPHA_FIXED_POWER, n_starts=9), net, profile, params)
        assert a.utility == b.utility


class TestPinnedSchemes:
    @pytest.mark.parametrize(
        "kind,alpha",
        [(SchemeKind.HALF_DUPLEX_PC, 0.0), (SchemeKind.FULL_DUPLEX_PC, 1.0)],
    )
    def test_alpha_pinned_exactly(self, profile, kind, alpha):
        params = SystemParams(N=2)
        net = realize(params, 9)
        res = run_scheme(SchemeConfig(kind, n_starts=2), net, profile, params)
        np.testing.assert_allclose(res.x.alpha, alpha, rtol=0, atol=0)
        assert res.mean_alpha == alpha
        assert res.solver is not None

    def test_deterministic(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 13)
        cfg = SchemeConfig(SchemeKind.HALF_DUPLEX_PC, n_starts=3)
        a = run_scheme(cfg, net, profile, params)
        b = run_scheme(cfg, net, profile, params)
        np.testing.assert_allclose(a.x.stacked(), b.x.stacked(), rtol=0)
        assert a.utility == b.utility


class TestAdaptiveScheme:
    def test_single_cell_goes_full_overlap(self, profile):
        params = SystemParams(N=1)
        net = realize(params, 3)
        res = run_scheme(SchemeConfig(SchemeKind.ALPHA_DUPLEX_OPT, n_starts=2), net, profile, params)
        assert res.x.alpha[0] >= 1.0 - 1e-3
        assert res.converged

    def test_alpha_within_box(self, profile):
        params = SystemParams(N=4)
        net = realize(params, 21)
        res = run_scheme(SchemeConfig(SchemeKind.ALPHA_DUPLEX_OPT, n_starts=2), net, profile, params)
        assert np.all(res.x.alpha >= params.alpha_min - 1e-12)
        assert np.all(res.x.alpha <= 1.0 + 1e-12)

    def test_per_user_total_rate_identity(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 2)
        res = run_scheme(SchemeConfig(SchemeKind.ALPHA_DUPLEX_OPT, n_starts=1), net, profile, params)
        np.testing.assert_allclose(
            res.per_user_total_rate_per_B,
            np.sum(res.R_u + res.R_b) / (params.N * params.B),
            rtol=1e-12,
        )


class TestBoxCandidate:
    def test_lifts_half_duplex_alpha(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 1)
        spec = ProblemSpec(params, UtilityKind.SUM_RATE, net, profile)
        hd_point = DecisionVector(p_u=[0.5, 0.5], p_b=[100.0, 100.0], alpha=[0.0, 0.0])
        cand = _box_candidate(hd_point, spec)
        np.testing.assert_allclose(cand.alpha, params.alpha_min)
        np.testing.assert_allclose(cand.p_u, hd_point.p_u)

    def test_rejects_budget_violation(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 1)
        spec = ProblemSpec(params, UtilityKind.SUM_RATE, net, profile)
        over = DecisionVector(p_u=[0.5, 0.5], p_b=[300.0, 300.0], alpha=[0.5, 0.5])
        assert _box_candidate(over, spec) is None


class TestCompareAll:
    def test_order_and_kinds(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 17)
        results = compare_all(net, profile, params, UtilityKind.SUM_RATE, n_starts=1)
        assert [r.kind for r in results] == [
            SchemeKind.ALPHA_DUPLEX_OPT,
            SchemeKind.HALF_DUPLEX_PC,
            SchemeKind.FULL_DUPLEX_PC,
            SchemeKind.FIXED_ALPHA_FIXED_POWER,
        ]

    @pytest.mark.parametrize("kind", list(UtilityKind))
    @pytest.mark.parametrize("seed", [101, 202, 303, 404, 505])
    def test_adaptive_dominates(self, profile, kind, seed):
        params = SystemParams(N=4)
        net = realize(params, seed)
        adaptive, hd, fd, fixed = compare_all(net, profile, params, kind, n_starts=2)
        slack = 1e-9 * max(1.0, abs(adaptive.utility))
        assert adaptive.utility >= hd.utility - slack
        assert adaptive.utility >= fd.utility - slack
        assert adaptive.utility >= fixed.utility - slack

    def test_deterministic(self, profile):
        params = SystemParams(N=2)
        net = realize(params, 23)
        a = compare_all(net, profile, params, UtilityKind.SUM_RATE, n_starts=2)
        b = compare_all(net, profile, params, UtilityKind.SUM_RATE, n_starts=2)
        for ra, rb in zip(a, b):
            assert ra.utility == rb.utility
            np.testing.assert_allclose(ra.x.stacked(), rb.x.stacked(), rtol=0)
