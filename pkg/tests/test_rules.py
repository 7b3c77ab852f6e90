import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pseudocomp import _rng, sim
from pseudocomp.bounds import pseudo_potential
from pseudocomp.committee import (
    TieRule,
    equally_spaced,
    ordering_margin,
    peer_accuracies,
    pseudo_competences,
)
from pseudocomp.errors import DomainError, MissingRng, ShapeError
from pseudocomp.estimation import OpinionMatrix
from pseudocomp.oracle import exact_error
from pseudocomp.rules import (
    AdaptiveConfig,
    Provenance,
    WeightMode,
    adaptive_aggregate,
    block_aggregate,
    block_weights,
    clamp_estimates,
    lnb_weights,
    make_weights,
    nb_weights,
    pnb_decide,
    pnb_weights,
    pseudo_linear_weights,
    weighted_vote,
    weighted_votes,
)


# --- weights ---------------------------------------------------------------


def test_half_gives_zero_weight():
    assert make_weights([0.5], "log").w[0] == 0.0
    assert make_weights([0.5], "linear").w[0] == 0.0


def test_log_weights_value():
    w = make_weights([0.6] * 3, WeightMode.LOG)
    np.testing.assert_allclose(w.w, math.log(1.5))
    assert math.log(1.5) == pytest.approx(0.405465, abs=1e-6)
    assert w.provenance is Provenance.NB_LOG


def test_sentinels_at_the_endpoints():
    w = make_weights([1.0, 0.0], "log").w
    assert w[0] == np.inf and w[1] == -np.inf


def test_uniform_and_linear():
    np.testing.assert_array_equal(make_weights([0.2, 0.9], "uniform").w, [1.0, 1.0])
    np.testing.assert_allclose(make_weights([0.2, 0.9], "linear").w, [-0.3, 0.4])


@pytest.mark.parametrize("bad", [[1.2], [-0.01], [float("nan")]])
def test_weights_reject_out_of_range(bad):
    with pytest.raises(DomainError):
        make_weights(bad)


def test_provenance_of_named_rules():
    c = [0.6, 0.7, 0.8]
    assert nb_weights(c).provenance is Provenance.NB_LOG
    assert lnb_weights(c).provenance is Provenance.LINEAR
    assert pnb_weights(c).provenance is Provenance.PSEUDO_LOG
    assert pseudo_linear_weights(c).provenance is Provenance.PSEUDO_LINEAR


def test_weights_are_read_only():
    w = nb_weights([0.6, 0.7])
    with pytest.raises(ValueError):
        w.w[0] = 3.0


def test_clamp():
    np.testing.assert_allclose(clamp_estimates([0.0, 0.5, 1.0], 8), [0.1, 0.5, 0.9])


# --- voting ----------------------------------------------------------------


def test_vote_examples():
    assert weighted_vote([1, 1, -1], [1, 1, 1]) == 1
    assert weighted_vote([1, 1, -1], [1, 1, 3]) == -1
    assert weighted_vote([1, -1], [1, 1], TieRule.POSITIVE) == 1
    assert weighted_vote([1, -1], [1, 1], TieRule.NEGATIVE) == -1


def test_fair_tie_needs_a_stream():
    with pytest.raises(MissingRng):
        weighted_vote([1, -1], [1, 1])
    draws = {weighted_vote([1, -1], [1, 1], rng=_rng.stream(s, _rng.TIES)) for s in range(20)}
    assert draws == {-1, 1}


def test_no_stream_needed_without_ties():
    assert weighted_vote([1, -1, 1], [1, 1, 1]) == 1


def test_vote_shape_check():
    with pytest.raises(ShapeError):
        weighted_vote([1, 1], [1, 1, 1])


def test_relative_tie_tolerance():
    # 0.1 + 0.2 - 0.3 is a rounding-level residue, treated as an exact tie
    assert weighted_vote([1, 1, -1], [0.1, 0.2, 0.3], TieRule.NEGATIVE) == -1
    assert weighted_vote([1, 1, -1], [0.1, 0.2, 0.3], TieRule.POSITIVE) == 1


def test_infinite_weights_decide():
    assert weighted_vote([-1, 1, 1], [np.inf, 5.0, 5.0]) == -1
    assert weighted_vote([-1, 1, 1], [np.inf, np.inf, 0.1]) == 1
    assert weighted_vote([1, -1, -1], [np.inf, np.inf, 0.1]) == -1


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_positive_rescaling_never_changes_decisions(seed, scale):
    rng = np.random.default_rng(seed)
    x = rng.choice(np.array([-1, 1], dtype=np.int8), size=(6, 50))
    w = rng.normal(size=6)
    a = weighted_votes(x, w, TieRule.POSITIVE)
    b = weighted_votes(x, scale * w, TieRule.POSITIVE)
    assert np.array_equal(a, b)


def test_nb_on_homogeneous_committee_is_majority():
    m = sim.generate([0.7] * 9, 5000, seed=1)
    nb = weighted_votes(m.x, nb_weights([0.7] * 9), TieRule.POSITIVE)
    mv = weighted_votes(m.x, np.ones(9), TieRule.POSITIVE)
    assert np.array_equal(nb, mv)


def _ranks(v):
    return np.argsort(np.argsort(v, kind="stable"), kind="stable")


def test_pseudo_weights_rank_experts_like_true_weights(rng):
    # ordering transfers whenever every pairwise ordering margin is positive
    checked = 0
    while checked < 100:
        c = rng.random(int(rng.integers(3, 10)))
        n = c.shape[0]
        if not all(ordering_margin(c, i, j) > 0 for i in range(n) for j in range(i + 1, n)):
            continue
        checked += 1
        assert np.array_equal(_ranks(nb_weights(c).w), _ranks(pnb_weights(c).w))


def test_ordering_transfer_on_the_mixed_figure_committee():
    c = equally_spaced(0.3, 0.9, 10)
    assert np.all(peer_accuracies(c)[0] > 0.5)
    assert np.array_equal(_ranks(nb_weights(c).w), _ranks(pnb_weights(c).w))


def test_good_peers_alone_do_not_guarantee_ordering():
    # every peer majority beats a coin, yet experts 2 and 3 swap places
    c = [0.47, 0.95, 0.94, 0.16, 0.76]
    assert np.all(peer_accuracies(c)[0] > 0.5)
    pt = pseudo_competences(c)
    assert pt[1] < pt[2]
    assert ordering_margin(c, 1, 2) < 0


def test_pnb_exact_error_below_its_potential_bound(rng):
    checked = 0
    while checked < 60:
        c = rng.random(int(rng.integers(2, 21)))
        if not np.all(peer_accuracies(c)[0] > 0.5):
            continue
        checked += 1
        err = exact_error(c, pnb_weights(c)).value
        assert err <= math.exp(-pseudo_potential(c) / 2) + 1e-12


# --- PNB and block rules ---------------------------------------------------


def test_pnb_decide_example():
    pt = pseudo_competences([0.8, 0.7, 0.6])
    lo = np.log(pt / (1 - pt))
    assert lo[0] + lo[1] - lo[2] > 0
    assert pnb_decide([0.8, 0.7, 0.6], [1, 1, -1]) == 1


def test_pnb_with_coin_flippers_defers_to_tie_rule():
    assert pnb_weights([0.5] * 4).all_zero
    assert pnb_decide([0.5] * 4, [1, 1, -1, -1], TieRule.NEGATIVE) == -1
    assert pnb_decide([0.5] * 4, [-1, -1, -1, -1], TieRule.POSITIVE) == 1


def test_pnb_close_to_nb_on_good_committee():
    for n in range(6, 21):
        c = equally_spaced(0.5, 0.9, n)
        nb = exact_error(c, nb_weights(c)).value
        pnb = exact_error(c, pnb_weights(c)).value
        assert abs(pnb - nb) <= 0.1 * nb


def test_pnb_gap_is_large_for_tiny_committees():
    c = equally_spaced(0.5, 0.9, 3)
    assert exact_error(c, pnb_weights(c)).value == pytest.approx(2 * exact_error(c, nb_weights(c)).value)


def test_block_log_and_linear_agree_on_homogeneous_data():
    m = sim.generate([0.7] * 10, 10_000, seed=3)
    log = block_aggregate(m, "log", TieRule.FAIR, seed=3)
    lin = block_aggregate(m, "linear", TieRule.FAIR, seed=3)
    assert log.shape == (10_000,)
    assert np.array_equal(log, lin)


def test_block_rule_tracks_exact_pnb():
    c = equally_spaced(0.5, 0.9, 10)
    t = 1_000_000
    m = sim.generate(c, t, seed=11)
    err = np.mean(block_aggregate(m, "log", seed=11) != m.labels)
    exact = exact_error(c, pnb_weights(c)).value
    assert abs(err - exact) <= 4 * math.sqrt(exact * (1 - exact) / t)


def test_degenerate_block():
    m = OpinionMatrix([[1], [1], [-1]])
    d = block_aggregate(m, "log")
    assert d.shape == (1,) and d[0] in (-1, 1)
    assert np.all(np.isfinite(block_weights(m, "log").w))


def test_block_rejects_uniform_mode():
    with pytest.raises(DomainError):
        block_weights(OpinionMatrix([[1, 1], [1, -1]]), "uniform")


# --- adaptive rule ---------------------------------------------------------


def test_adaptive_never_freezes_without_signal():
    # two experts that agree exactly half the time: every estimate is 1/2
    stream = np.array([[1, 1, -1, 1] * 50, [1, -1, -1, -1] * 50])
    out = adaptive_aggregate(stream, AdaptiveConfig(0.1), seed=0)
    assert out.freeze_time is None and out.frozen_weights is None
    assert not out.frozen.any()
    assert out.phi_trace.shape == (200,)
    assert out.phi_trace[1::2].max() == pytest.approx(0.0, abs=1e-15)


def test_adaptive_single_column():
    out = adaptive_aggregate([np.array([1, 1, -1, 1, 1])], AdaptiveConfig(0.1), seed=0)
    assert out.decisions.tolist() == [1]
    assert out.freeze_time is None


def test_adaptive_first_task_is_majority():
    out = adaptive_aggregate(np.array([[1], [-1], [-1]]), AdaptiveConfig(0.2), seed=0)
    assert out.decisions[0] == -1


@pytest.mark.parametrize("mode", ["log", "linear"])
def test_adaptive_freezes_and_then_stays_fixed(mode):
    c = [0.8] * 15
    m = sim.generate(c, 3000, seed=8)
    cfg = AdaptiveConfig(0.1, weight_mode=mode)
    out = adaptive_aggregate(m, cfg, seed=8)
    assert out.freeze_time is not None
    tau = out.freeze_time
    assert out.phi_trace.shape == (tau,)
    # frozen-weight contract: post-freeze decisions are a pure function of the column
    after = m.x[:, tau:]
    replay = weighted_votes(after, out.frozen_weights, TieRule.FAIR, _rng.stream(8, _rng.TIES))
    tail = out.decisions[tau:]
    no_tie = np.abs(out.frozen_weights.w @ after) > 1e-9
    assert np.array_equal(tail[no_tie], replay[no_tie])
    assert out.frozen.sum() == 3000 - tau
    assert np.mean(tail != m.labels[tau:]) <= cfg.delta


def test_adaptive_decides_before_updating():
    # the column that is being decided never influences its own weights
    x = sim.generate(np.linspace(0.55, 0.9, 7), 60, seed=4).x
    full = adaptive_aggregate(x, AdaptiveConfig(0.01), seed=1).decisions
    for t in (5, 17, 40):
        truncated = adaptive_aggregate(x[:, : t + 1], AdaptiveConfig(0.01), seed=1).decisions
        assert truncated[t] == full[t]


def test_adaptive_accepts_iterables_and_matrices():
    m = sim.generate([0.7, 0.8, 0.6, 0.9], 50, seed=2)
    a = adaptive_aggregate(m, AdaptiveConfig(0.3), seed=5)
    b = adaptive_aggregate(iter(m.x.T), AdaptiveConfig(0.3), seed=5)
    assert np.array_equal(a.decisions, b.decisions) and a.freeze_time == b.freeze_time


def test_majority_pre_freeze_policy():
    m = sim.generate([0.9, 0.6, 0.55, 0.55, 0.52], 200, seed=6)
    out = adaptive_aggregate(m, AdaptiveConfig(0.001, pre_freeze="majority"), seed=0)
    assert out.freeze_time is None
    assert np.array_equal(out.decisions, weighted_votes(m.x, np.ones(5), TieRule.FAIR, _rng.stream(0, _rng.TIES)))


@pytest.mark.parametrize(
    "kw", [dict(delta=0.0), dict(delta=1.0), dict(delta=0.1, weight_mode="uniform"), dict(delta=0.1, pre_freeze="x")]
)
def test_adaptive_config_validation(kw):
    with pytest.raises(DomainError):
        AdaptiveConfig(**kw)
