"""Spurious-retransmission detection: snapshots, Eifel and DSACK verdicts."""

from mpsim.connection import ReassemblyState
from mpsim.spurious import (dsack_receiver_report, dsack_respond,
                            dsack_sender_check, eifel_check, eifel_respond,
                            on_retransmit_record)
from mpsim.subflow import Phase, Segment, Subflow


def make_subflow(cwnd=10.0, ssthresh=64.0, phase=Phase.SLOW_START):
    sf = Subflow(0)
    sf.cwnd = cwnd
    sf.ssthresh = ssthresh
    sf.phase = phase
    return sf


def ack(data_ack=None, ts_echo=None, dsack=None):
    return Segment(0, data_ack=data_ack, ts_echo=ts_echo, dsack_block=dsack)


# ---------------------------------------------------------------- snapshot

def test_snapshot_captures_pre_reduction_state():
    sf = make_subflow(cwnd=12.0, ssthresh=30.0, phase=Phase.CONGESTION_AVOIDANCE)
    snap = on_retransmit_record(sf, 1400, 2800, now=5_000)
    assert (snap.cwnd_before, snap.ssthresh_before) == (12.0, 30.0)
    assert snap.phase_before is Phase.CONGESTION_AVOIDANCE
    assert (snap.range_start, snap.range_end) == (1400, 2800)
    assert snap.retransmit_count == 1
    assert sf.saved is snap


def test_rerecording_same_range_keeps_pre_episode_values():
    # an RTO re-sending the fast-retransmit range must not overwrite the
    # snapshot with the already-reduced window
    sf = make_subflow(cwnd=12.0)
    snap = on_retransmit_record(sf, 0, 1400, now=100)
    sf.cwnd, sf.ssthresh = 1.0, 2.0
    again = on_retransmit_record(sf, 0, 1400, now=200)
    assert again is snap
    assert snap.cwnd_before == 12.0
    assert snap.retransmit_ts == 200
    assert snap.retransmit_count == 2


def test_new_range_replaces_snapshot_and_counts_per_range():
    sf = make_subflow()
    on_retransmit_record(sf, 0, 1400, now=100)
    snap2 = on_retransmit_record(sf, 1400, 2800, now=200)
    assert sf.saved is snap2
    assert sf.retransmit_counts == {(0, 1400): 1, (1400, 2800): 1}


# ------------------------------------------------------------------- Eifel

def test_eifel_detects_echo_older_than_retransmission():
    sf = make_subflow()
    snap = on_retransmit_record(sf, 0, 1400, now=1_000)
    assert eifel_check(snap, ack(data_ack=1400, ts_echo=500))
    assert not eifel_check(snap, ack(data_ack=1400, ts_echo=1_000))
    assert not eifel_check(snap, ack(data_ack=1400, ts_echo=1_500))


def test_eifel_requires_covering_ack_and_timestamp():
    sf = make_subflow()
    snap = on_retransmit_record(sf, 2800, 4200, now=1_000)
    assert not eifel_check(snap, ack(data_ack=2800, ts_echo=1))  # not covering
    assert not eifel_check(snap, ack(data_ack=4200, ts_echo=None))


def test_eifel_respond_restores_exact_state():
    sf = make_subflow(cwnd=24.0, ssthresh=48.0, phase=Phase.CONGESTION_AVOIDANCE)
    snap = on_retransmit_record(sf, 0, 1400, now=1_000)
    sf.cwnd, sf.ssthresh, sf.phase = 2.0, 12.0, Phase.FAST_RECOVERY
    sf.dup_ack_count = 5
    eifel_respond(sf, snap)
    assert (sf.cwnd, sf.ssthresh) == (24.0, 48.0)
    assert sf.phase is Phase.CONGESTION_AVOIDANCE
    assert sf.dup_ack_count == 0
    assert sf.spurious_detections == 1
    assert snap.consumed


def test_consumed_snapshot_never_fires_again():
    sf = make_subflow()
    snap = on_retransmit_record(sf, 0, 1400, now=1_000)
    eifel_respond(sf, snap)
    assert not eifel_check(snap, ack(data_ack=1400, ts_echo=1))
    eifel_respond(sf, snap)  # idempotent
    assert sf.spurious_detections == 1


# ------------------------------------------------------------------- DSACK

def test_receiver_reports_duplicate_overlap():
    recv = ReassemblyState()
    recv.on_data(0, 1400)
    seg = Segment(0, data_seq=0, size_bytes=1400)
    assert dsack_receiver_report(recv, seg) == (0, 1400)
    fresh = Segment(0, data_seq=1400, size_bytes=1400)
    assert dsack_receiver_report(recv, fresh) is None


def test_dsack_verdict_needs_exact_range_and_single_retransmit():
    sf = make_subflow()
    snap = on_retransmit_record(sf, 1400, 2800, now=1_000)
    assert dsack_sender_check(snap, ack(dsack=(1400, 2800)))
    assert not dsack_sender_check(snap, ack(dsack=(1400, 2100)))
    assert not dsack_sender_check(snap, ack(dsack=None))
    assert not dsack_sender_check(None, ack(dsack=(1400, 2800)))


def test_dsack_ambiguous_after_second_retransmission():
    sf = make_subflow()
    on_retransmit_record(sf, 1400, 2800, now=1_000)
    snap = on_retransmit_record(sf, 1400, 2800, now=2_000)
    assert snap.retransmit_count == 2
    assert not dsack_sender_check(snap, ack(dsack=(1400, 2800)))


def test_dsack_respond_restores_threshold_only():
    sf = make_subflow(cwnd=14.0, ssthresh=28.0)
    snap = on_retransmit_record(sf, 0, 1400, now=1_000)
    sf.cwnd, sf.ssthresh, sf.phase = 7.0, 7.0, Phase.FAST_RECOVERY
    dsack_respond(sf, snap)
    assert sf.cwnd == 7.0                 # window is not jumped back
    assert sf.ssthresh == 28.0            # threshold is restored
    assert sf.phase is Phase.SLOW_START   # regrow exponentially from 7
    assert snap.consumed


def test_dsack_respond_keeps_avoidance_above_threshold():
    sf = make_subflow(cwnd=30.0, ssthresh=20.0)
    snap = on_retransmit_record(sf, 0, 1400, now=1_000)
    sf.cwnd, sf.phase = 25.0, Phase.FAST_RECOVERY
    dsack_respond(sf, snap)
    assert sf.phase is Phase.CONGESTION_AVOIDANCE
