import pytest
from hypothesis import given
from hypothesis import strategies as st

from scoretrack.domain import FrameOutput
from scoretrack.ensemble import (
    DecayPolicy,
    EnsembleConfig,
    EnsembleFusion,
    cross_match,
    fuse_affirmative,
    fuse_confidence,
    fuse_streams,
    fuse_unanimous,
)
from scoretrack.errors import ConfigError, FrameMismatch
from scoretrack.scoring import update_function

from helpers import frame, rec


def _conf(policy="decay_both_if_unmatched", sigma=0.2, fn="complement_mult"):
    return EnsembleConfig(strategy="confidence", decay_policy=policy, sigma=sigma, update_fn=fn)


def test_cross_match_examples():
    a = frame(0, rec(1, 0.0))
    assert len(cross_match(a, frame(0, rec(5, 0.1))).matches) == 1
    assert cross_match(a, frame(0, rec(5, 0.0, cls="pedestrian"))).matches == ()
    two = frame(0, rec(1, 0.0, score=0.3), rec(2, 1.0, score=0.9))
    m = cross_match(two, frame(0, rec(7, 0.8, score=0.5)))
    assert [(i, j) for i, j, _ in m.matches] == [(1, 0)]
    assert m.unmatched_tracklets == (0,)


def test_cross_match_frame_mismatch():
    with pytest.raises(FrameMismatch):
        cross_match(frame(0), frame(1))


def test_cross_match_keeps_previous_pair():
    a = frame(1, rec(1, 0.0))
    b = frame(1, rec(5, 1.5), rec(6, 0.2))
    assert [j for _, j, _ in cross_match(a, b, previous_pairs={(1, 5)}).matches] == [0]
    assert [j for _, j, _ in cross_match(a, b).matches] == [1]


def test_affirmative_and_unanimous_cardinality():
    a = frame(0, rec(1, 0.0), rec(2, 10.0), rec(3, 20.0))
    b = frame(0, rec(1, 50.0), rec(2, 60.0))
    m = cross_match(a, b)
    assert len(fuse_affirmative(a, b, m)) == 5
    assert len(fuse_unanimous(a, b, m)) == 0
    b3 = frame(0, rec(4, 0.1), rec(5, 10.1), rec(6, 20.1))
    m3 = cross_match(a, b3)
    assert len(fuse_affirmative(a, b3, m3)) == 3 and len(fuse_unanimous(a, b3, m3)) == 3
    b4 = frame(0, rec(4, 0.1), rec(5, 10.1), rec(6, 40.0), rec(7, 50.0))
    assert len(fuse_unanimous(a, b4, cross_match(a, b4))) == 2


def test_pair_keeps_max_score_and_its_geometry():
    a = frame(0, rec(1, 0.0, score=0.4))
    b = frame(0, rec(2, 0.5, score=0.7))
    out = fuse_affirmative(a, b, cross_match(a, b)).records[0]
    assert out.score == 0.7 and out.center[0] == 0.5


def test_confidence_examples():
    a = frame(0, rec(1, 0.0, score=0.6))
    b = frame(0, rec(2, 0.3, score=0.5))
    out = fuse_confidence(a, b, cross_match(a, b), _conf())
    assert out.records[0].score == pytest.approx(0.8)
    lone = frame(0, rec(1, 0.0, score=0.3))
    out = fuse_confidence(lone, frame(0), cross_match(lone, frame(0)), _conf("decay_both"))
    assert out.records[0].score == pytest.approx(0.1)
    out = fuse_confidence(frame(0), lone, cross_match(frame(0), lone), _conf("decay_a"))
    assert out.records[0].score == pytest.approx(0.3)


def test_confidence_drops_zero_scores():
    lone = frame(0, rec(1, 0.0, score=0.1))
    assert len(fuse_confidence(lone, frame(0), cross_match(lone, frame(0)), _conf())) == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        EnsembleConfig(strategy="consensus")
    with pytest.raises(ConfigError):
        EnsembleConfig(sigma=-0.1)
    with pytest.raises(ConfigError):
        EnsembleConfig.from_dict({"sigmaa": 0.1})
    cfg = _conf("decay_a", 0.3, "max")
    assert EnsembleConfig.from_dict(cfg.to_dict()) == cfg


def test_merged_id_stable_and_divorce():
    fuser = EnsembleFusion(_conf())
    f0 = fuser.fuse(frame(0, rec(1, 0.0, score=0.6)), frame(0, rec(9, 0.2, score=0.5)))
    f1 = fuser.fuse(frame(1, rec(1, 1.0, score=0.6)), frame(1, rec(9, 1.2, score=0.5)))
    assert f0.records[0].track_id == f1.records[0].track_id
    mid = f0.records[0].track_id
    # divorce: the two members drift apart; the stronger one keeps the merged id
    f2 = fuser.fuse(frame(2, rec(1, 2.0, score=0.9)), frame(2, rec(9, 20.0, score=0.5)))
    by_x = {r.center[0]: r.track_id for r in f2.records}
    assert by_x[2.0] == mid and by_x[20.0] != mid


# -- properties -------------------------------------------------------------

xs = st.lists(st.tuples(st.floats(0, 30), st.floats(0.01, 1.0), st.sampled_from(["car", "pedestrian"])),
              max_size=6)


def _frame(items, start_id):
    return FrameOutput(0, tuple(rec(start_id + k, x, score=s, cls=c) for k, (x, s, c) in enumerate(items)))


@given(xs, xs)
def test_cardinality_invariants(ia, ib):
    a, b = _frame(ia, 1), _frame(ib, 100)
    m = cross_match(a, b)
    assert len(fuse_affirmative(a, b, m)) == len(a) + len(b) - len(m.matches)
    assert len(fuse_unanimous(a, b, m)) == len(m.matches)


@given(xs, xs, st.sampled_from(["add", "max", "complement_mult", "complement_parallel"]))
def test_confidence_dominance(ia, ib, fn):
    a, b = _frame(ia, 1), _frame(ib, 100)
    m = cross_match(a, b)
    f = update_function(fn)
    for i, j, _ in m.matches:
        sa, sb = a.records[i].score, b.records[j].score
        assert f(sa, sb) >= max(sa, sb) - 1e-12


@given(xs, xs, st.sampled_from(["add", "max", "complement_mult", "complement_parallel"]))
def test_zero_sigma_policies_coincide(ia, ib, fn):
    a, b = _frame(ia, 1), _frame(ib, 100)
    m = cross_match(a, b)
    outs = [fuse_confidence(a, b, m, _conf(p.value, 0.0, fn)) for p in DecayPolicy]
    assert all(o == outs[0] for o in outs)
    aff = fuse_affirmative(a, b, m)
    assert sorted(r.center for r in outs[0].records) == sorted(r.center for r in aff.records)


@given(xs, xs, st.sampled_from(list(DecayPolicy)), st.floats(0, 0.5))
def test_stream_swap_symmetry(ia, ib, policy, sigma):
    a, b = _frame(ia, 1), _frame(ib, 100)
    ab = fuse_confidence(a, b, cross_match(a, b), _conf(policy.value, sigma))
    ba = fuse_confidence(b, a, cross_match(b, a), _conf(policy.mirrored().value, sigma))
    assert sorted(r.score for r in ab.records) == pytest.approx(sorted(r.score for r in ba.records))


def test_fuse_streams_fills_missing_frames():
    a = [frame(0, rec(1, 0.0)), frame(2, rec(1, 0.0))]
    b = [frame(1, rec(4, 0.0))]
    out = fuse_streams(EnsembleConfig(strategy="affirmative"), a, b)
    assert [f.frame_index for f in out] == [0, 1, 2]
    assert all(len(f) == 1 for f in out)


def test_output_ids_unique_per_frame():
    a = [frame(f, rec(1, 0.0 + f), rec(2, 0.5 + f)) for f in range(5)]
    b = [frame(f, rec(7, 0.2 + f), rec(8, 30.0)) for f in range(5)]
    for out in fuse_streams(_conf(sigma=0.0), a, b):
        ids = [r.track_id for r in out.records]
        assert len(ids) == len(set(ids))
