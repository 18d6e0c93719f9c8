import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divw.data import SummaryDataset
from divw.errors import ConfigurationError, EstimatorError, NoUsableInstrumentsError
from divw.estimators import divw, divw_variance, divw_variance_pleiotropy, tau2_hat
from divw.selection import (
    candidate_lambdas,
    kappa_hat,
    mr_eo,
    null_selection_bound,
    screen,
    sqrt_two_log_p,
    variance_profile,
)


def sel_ds(gs, ss=1.0, p=None):
    gs = np.asarray(gs, dtype=float)
    p = gs.size
    one = np.ones(p)
    return SummaryDataset(one, one, one, one, gs, np.broadcast_to(ss, p))


def test_screen_examples():
    d = sel_ds([3.0, 1.0])
    assert screen(d, 2.0).indices.tolist() == [0]
    assert screen(d, 0.0).indices.tolist() == [0, 1]


def test_screen_boundary_is_excluded():
    d = sel_ds([2.0, -2.0, 2.0000001])
    assert screen(d, 2.0).indices.tolist() == [2]


def test_screen_zero_needs_no_selection_columns():
    d = SummaryDataset([1.0, 2.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0])
    assert screen(d, 0).size == 2
    with pytest.raises(ConfigurationError):
        screen(d, 0.5)
    with pytest.raises(ConfigurationError):
        screen(d, -1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-8, 8), min_size=1, max_size=50), st.floats(0, 6), st.floats(0, 6))
def test_screen_nested(gs, a, b):
    lo, hi = min(a, b), max(a, b)
    d = sel_ds(gs)
    small, big = set(screen(d, hi).indices.tolist()), set(screen(d, lo).indices.tolist())
    assert small <= big


def test_kappa_hat_examples():
    d = SummaryDataset([1.0, 1.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0])
    assert kappa_hat(d, screen(d, 0)).kappa_hat == 0.0
    d1 = SummaryDataset([2.0], [1.0], [0.0], [1.0])
    est = kappa_hat(d1, screen(d1, 0))
    assert est.kappa_hat == 3.0
    assert est.effective_sample_size == 3.0


def test_effective_sample_size_uses_threshold():
    gs = np.array([5.0, 6.0, 7.0, 0.5])
    d = SummaryDataset(gs, np.ones(4), gs, np.ones(4), gs, np.ones(4))
    est = kappa_hat(d, screen(d, 2.0))
    assert est.p_hat == 3
    assert est.kappa_hat == pytest.approx((25 + 36 + 49) / 3 - 1)
    assert est.effective_sample_size == pytest.approx(est.kappa_hat * math.sqrt(3) / 4)


def test_kappa_hat_empty_selection():
    d = sel_ds([0.1])
    with pytest.raises(NoUsableInstrumentsError):
        kappa_hat(d, screen(d, 1.0))


def test_sqrt_two_log_p():
    assert sqrt_two_log_p(1119) == pytest.approx(3.75, abs=0.005)
    assert sqrt_two_log_p(2000) == pytest.approx(3.90, abs=0.005)
    assert sqrt_two_log_p(1) == 0.0
    with pytest.raises(ConfigurationError):
        sqrt_two_log_p(0)


def test_null_selection_bound_values():
    assert null_selection_bound(100, 100, 2.0) == 0.0
    # references evaluated with 40-digit arithmetic
    assert null_selection_bound(1119, 20, 3.75) == pytest.approx(0.20666808262497199, rel=1e-12)
    lam = sqrt_two_log_p(1119)
    assert null_selection_bound(1119, 20, lam) == pytest.approx(0.20913090384827336, rel=1e-12)
    assert null_selection_bound(1119, 20, lam) == pytest.approx((1099 / 1119) / math.sqrt(math.pi * math.log(1119)), rel=1e-12)
    with pytest.raises(ConfigurationError):
        null_selection_bound(10, 5, 0.0)


# MR-EO


def _strong_equal_dataset(p=60, seed=2):
    """Equally strong non-null instruments: screening only throws information away."""
    r = np.random.default_rng(seed)
    gamma = np.full(p, 0.025)
    sx = np.full(p, 0.01)
    sy = np.full(p, 0.02)
    return SummaryDataset(
        gamma + sx * r.standard_normal(p),
        sx,
        0.4 * gamma + sy * r.standard_normal(p),
        sy,
        gamma + sx * r.standard_normal(p),
        sx,
    )


def _mixed_dataset(p=300, s=40, seed=8):
    r = np.random.default_rng(seed)
    gamma = np.zeros(p)
    gamma[:s] = r.normal(0, 0.04, s)
    sx = np.full(p, 0.01)
    sy = np.full(p, 0.015)
    return SummaryDataset(
        gamma + sx * r.standard_normal(p),
        sx,
        0.4 * gamma + sy * r.standard_normal(p),
        sy,
        gamma + sx * r.standard_normal(p),
        sx,
    )


def _direct_variance(d, lam, beta):
    try:
        return divw_variance(d, screen(d, lam), beta)
    except EstimatorError:
        return math.inf


def test_variance_profile_matches_direct_computation():
    d = _mixed_dataset()
    beta = 0.35
    lams = np.linspace(0, sqrt_two_log_p(d.p), 400)
    prof = variance_profile(d, beta, lams)
    direct = np.array([_direct_variance(d, lam, beta) for lam in lams])
    finite = np.isfinite(direct)
    assert np.array_equal(finite, np.isfinite(prof))
    np.testing.assert_allclose(prof[finite], direct[finite], rtol=1e-10)


def test_variance_profile_with_pleiotropy():
    d = _mixed_dataset()
    t2 = 1e-4
    lams = np.array([0.0, 1.0, 2.0])
    prof = variance_profile(d, 0.3, lams, tau2=t2)
    for lam, v in zip(lams, prof):
        assert v == pytest.approx(divw_variance_pleiotropy(d, screen(d, lam), 0.3, t2), rel=1e-10)


def test_candidates_cover_every_selection_set():
    d = _mixed_dataset()
    hi = sqrt_two_log_p(d.p)
    cands = candidate_lambdas(d, hi)
    assert cands[0] == 0.0 and np.all(cands <= hi)
    sets_from_cands = {tuple(screen(d, c).indices) for c in cands}
    grid = np.linspace(0, hi, 4001)
    sets_from_grid = {tuple(screen(d, g).indices) for g in grid}
    assert sets_from_grid <= sets_from_cands


def test_mr_eo_equal_strength_goes_to_zero():
    d = _strong_equal_dataset()
    sel, trace = mr_eo(d)
    # grid-search oracle: argmin of the variance profile over 400 equally spaced thresholds
    lams = np.linspace(0, sqrt_two_log_p(d.p), 400)
    beta = trace.accepted[-1].beta
    grid = np.array([_direct_variance(d, lam, beta) for lam in lams])
    assert lams[int(np.argmin(grid))] < 0.5
    assert trace.final_lambda < 0.5
    assert sel.size >= d.p - 2


def test_mr_eo_keeps_start_when_zero_gives_same_set():
    # every SNP already passes at the start, so lambda = 0 cannot improve the variance
    d = _strong_equal_dataset()
    d = d.replace(gamma_star=d.gamma_star + 0.1)
    sel, trace = mr_eo(d)
    assert sel.size == d.p
    assert trace.final_lambda == pytest.approx(sqrt_two_log_p(d.p))
    assert trace.stop_reason == "variance_non_decreasing"


def test_mr_eo_matches_grid_oracle_on_mixed_dataset():
    d = _mixed_dataset()
    sel, trace = mr_eo(d)
    hi = sqrt_two_log_p(d.p)
    lams = np.linspace(0, hi, 400)
    for it_prev, it_next in zip(trace.iterations, trace.iterations[1:]):
        grid = np.array([_direct_variance(d, lam, it_prev.beta) for lam in lams])
        # the exact minimiser is at least as good as any grid point
        assert _direct_variance(d, it_next.lambda_, it_prev.beta) <= grid.min() * (1 + 1e-12)


def test_mr_eo_trace_properties():
    for seed in range(10):
        d = _mixed_dataset(seed=seed)
        sel, trace = mr_eo(d)
        acc = [it.variance for it in trace.accepted]
        assert all(b < a for a, b in zip(acc, acc[1:]))
        assert len(trace.iterations) <= 6
        assert trace.iterations[0].lambda_ == pytest.approx(sqrt_two_log_p(d.p))
        assert trace.final_variance <= trace.iterations[0].variance
        assert sel.lambda_ == trace.final_lambda
        assert trace.final_beta == divw(d, sel)
        if trace.stop_reason == "variance_non_decreasing":
            assert trace.iterations[-1].variance >= acc[-1]
        else:
            assert trace.stop_reason == "t_max_reached"


def test_mr_eo_is_deterministic():
    d = _mixed_dataset()
    a, ta = mr_eo(d)
    b, tb = mr_eo(d)
    assert ta.to_dict() == tb.to_dict()
    assert np.array_equal(a.indices, b.indices)


def test_mr_eo_t_max_one():
    d = _mixed_dataset()
    _, trace = mr_eo(d, t_max=1)
    assert len(trace.iterations) <= 2


def test_mr_eo_falls_back_when_start_is_degenerate():
    # one strong SNP below the start threshold, the rest noise
    p = 50
    gs = np.concatenate(([2.5], np.linspace(0.01, 0.5, p - 1)))
    g = np.concatenate(([5.0], np.full(p - 1, 0.1)))
    d = SummaryDataset(g, np.ones(p), 0.4 * g, np.ones(p), gs, np.ones(p))
    with pytest.raises(NoUsableInstrumentsError):
        divw(d, screen(d, sqrt_two_log_p(p)))
    sel, trace = mr_eo(d)
    assert trace.iterations[0].lambda_ < sqrt_two_log_p(p)
    assert sel.size >= 1


def test_mr_eo_no_defined_threshold():
    p = 5
    d = SummaryDataset(np.full(p, 0.1), np.ones(p), np.ones(p), np.ones(p), np.full(p, 3.0), np.ones(p))
    with pytest.raises(NoUsableInstrumentsError):
        mr_eo(d)


def test_mr_eo_needs_selection_columns():
    d = SummaryDataset([1.0], [0.1], [1.0], [1.0])
    with pytest.raises(ConfigurationError):
        mr_eo(d)
    with pytest.raises(ConfigurationError):
        mr_eo(_mixed_dataset(), t_max=0)


def test_mr_eo_with_pleiotropy_variance():
    d = _mixed_dataset()
    t2 = tau2_hat(d)
    sel, trace = mr_eo(d, tau2=max(t2, 1e-5))
    acc = [it.variance for it in trace.accepted]
    assert all(b < a for a, b in zip(acc, acc[1:]))
