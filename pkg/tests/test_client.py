"""Streaming-client tests: flow control, drain, stalls, conservation."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burststream import DeliveryOrderError, StreamingClient


def make_client(capacity=4_000_000, r_s=500e3, link=16e6, startup=2.0,
                **kw):
    return StreamingClient(capacity, r_s, link, startup_threshold_s=startup,
                           **kw)


class TestDeliver:
    def test_small_burst_no_zwa_acked_at_link_rate(self):
        c = make_client()
        res = c.deliver(1_000_000, 16e6, 0.0)
        assert res.zwa_episodes == 0
        assert res.end_s == pytest.approx(1_000_000 * 8 / 16e6)
        assert res.acks[-1].cum_ack_bytes == pytest.approx(1_000_000)
        assert all(a.advertised_window_bytes > 0 for a in res.acks)

    def test_overflow_trails_at_drain_rate(self):
        # free space plus 1 MB, playback held off: exactly one zero-window
        # episode, the trailing megabyte enters at the 500 kbit/s drain
        c = make_client(capacity=4_000_000, r_s=500e3, startup=1e9)
        res = c.deliver(5_000_000, 16e6, 0.0)
        assert res.zwa_episodes == 1
        assert res.bytes_at_first_zwa == pytest.approx(4_000_000)
        drain_span = res.end_s - res.first_zwa_time_s
        assert drain_span == pytest.approx(8e6 / 500e3, rel=0.01)

    def test_zwa_iff_buffer_full(self):
        c = make_client(capacity=1_000_000, r_s=500e3, startup=1e9)
        res = c.deliver(999_999, 16e6, 0.0)
        assert res.zwa_episodes == 0
        res = c.deliver(2, 16e6, res.end_s)
        assert res.zwa_episodes == 1
        assert c.advertised_window_bytes == 0.0

    def test_bytes_at_first_zwa_reflects_capacity(self):
        c = make_client(capacity=2_000_000, r_s=500e3, startup=0.0)
        res = c.deliver(8_000_000, 16e6, 0.0, abort_on_zwa=True)
        assert res.aborted
        # capacity plus what playback drained while the burst filled it
        fill_time = res.first_zwa_time_s
        expected = 2_000_000 + fill_time * 500e3 / 8
        assert res.bytes_at_first_zwa == pytest.approx(expected, rel=1e-6)
        assert res.delivered_bytes == res.bytes_at_first_zwa

    def test_fast_start_zwa_with_small_buffer(self):
        # 45 s of 2 Mbit/s content is 11.25 MB; a 7.75 MB client pins
        # during the initial fill
        c = make_client(capacity=7_750_000, r_s=2e6)
        res = c.deliver(45 * 2e6 / 8, 16e6, 0.0)
        assert res.zwa_episodes >= 1
        assert res.bytes_at_first_zwa < 45 * 2e6 / 8

    def test_past_delivery_rejected(self):
        c = make_client()
        c.advance(10.0)
        with pytest.raises(DeliveryOrderError):
            c.deliver(1000, 16e6, 5.0)

    def test_rate_capped_by_link(self):
        c = make_client(link=8e6)
        res = c.deliver(1_000_000, 16e6, 0.0)
        assert res.end_s == pytest.approx(1_000_000 * 8 / 8e6)

    def test_ack_granularity(self):
        c = make_client(segment_bytes=1460)
        res = c.deliver(14_600, 16e6, 0.0)
        # ten segment acks, cumulative sequence numbers
        assert [a.cum_ack_bytes for a in res.acks] == \
            [1460.0 * k for k in range(1, 11)]


class TestAdvanceAndStalls:
    def test_half_drained_no_stall(self):
        # 10 s of content from t=0 with playback running throughout
        c = make_client(startup=0.0)
        c.deliver(10 * c.drain_bytes_per_s, 16e6, 0.0)
        c.advance(5.0)
        assert c.occupancy_bytes == pytest.approx(5 * c.drain_bytes_per_s)
        assert c.stall_log == []

    def test_stall_recorded_at_exhaustion_instant(self):
        # 5 s of content playing from t=0 runs dry at exactly t=5
        c = make_client(startup=0.0)
        c.deliver(5 * c.drain_bytes_per_s, 16e6, 0.0)
        c.advance(20.0)
        assert len(c.stall_log) == 1
        assert c.stall_log[0][0] == pytest.approx(5.0, rel=1e-9)

    def test_slow_link_causes_stall(self):
        # bandwidth below the encoding rate: playback cannot keep up
        c = make_client(r_s=1e6, startup=1.0)
        c.deliver(2_000_000, 0.5e6, 0.0)
        c.finalize()
        assert len(c.stall_log) >= 1

    def test_playback_starts_at_threshold(self):
        c = make_client(r_s=1e6, startup=2.0)
        c.deliver(100_000, 16e6, 0.0)
        assert not c.playback_started  # 100 kB < 2 s * 125 kB/s
        c.deliver(200_000, 16e6, c.now_s)
        assert c.playback_started

    def test_playback_completes_and_drain_stops(self):
        c = make_client(r_s=1e6, startup=0.0, content_duration_s=4.0)
        c.deliver(4 * 125_000, 16e6, 0.0)
        c.advance(60.0)
        assert c.playback_complete
        assert c.stall_log == []

    def test_zero_touch_at_refill_is_not_a_stall(self):
        # buffer drains to exactly zero the instant the next burst starts
        c = make_client(r_s=1e6, startup=0.0)
        res = c.deliver(125_000, 1e9, 0.0)  # 1 s of content, near-instant
        c.advance(1.0)
        assert c.occupancy_bytes == pytest.approx(0.0, abs=1e-3)
        c.deliver(125_000, 1e9, 1.0)
        c.finalize(3.0)
        assert all(s[1] - s[0] > 1e-9 for s in c.stall_log if s[1])
        assert len(c.stalls_after(0.0)) <= 1


class TestConservation:
    @given(st.lists(st.tuples(st.floats(1e3, 2e6), st.floats(1e6, 5e7),
                              st.floats(0.1, 30.0)), min_size=1, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_delivered_equals_drained_plus_occupancy(self, ops):
        c = make_client(capacity=3_000_000, r_s=750e3)
        t = 0.0
        for nbytes, rate, gap in ops:
            res = c.deliver(nbytes, rate, t, emit_acks=False)
            t = res.end_s + gap
            c.advance(t)
            assert c.total_delivered_bytes == pytest.approx(
                c.total_drained_bytes + c.occupancy_bytes, rel=1e-9,
                abs=1e-3)
            assert 0 <= c.occupancy_bytes <= c.capacity_bytes + 1e-6

    @given(st.floats(2e5, 4e6), st.floats(1e6, 3e7))
    @settings(max_examples=60, deadline=None)
    def test_window_is_capacity_minus_occupancy(self, nbytes, rate):
        c = make_client(capacity=2_000_000, r_s=500e3)
        res = c.deliver(nbytes, rate, 0.0, emit_acks=False)
        assert c.advertised_window_bytes == pytest.approx(
            c.capacity_bytes - c.occupancy_bytes)
        assert (res.zwa_episodes > 0) == \
            (c.capacity_bytes - c.occupancy_bytes <= c._eps or
             res.first_zwa_time_s is not None)


class TestPostZwaRate:
    def test_overflow_bytes_enter_at_drain_rate(self):
        c = make_client(capacity=2_000_000, r_s=500e3, startup=0.0)
        res = c.deliver(6_000_000, 16e6, 0.0)
        overflow_bytes = res.acks[-1].cum_ack_bytes - \
            (res.bytes_at_first_zwa or 0.0)
        span = res.end_s - res.first_zwa_time_s
        avg_rate = overflow_bytes * 8 / span
        assert avg_rate == pytest.approx(500e3, rel=0.01)
