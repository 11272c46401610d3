"""Traffic profiler: burst timing, zero-window detection, bandwidth estimate.

Consumes the ACK/window feedback stream for one session. The shaper
registers each burst's byte range before sending it (bursts are never
pipelined, so attribution is unambiguous), then feeds ACKs in time order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from .client import AckEvent


class FeedError(ValueError):
    """ACK stream violated ordering (cumulative ack went backwards)."""


def estimate_bandwidth(burst_bytes: float, t_bd_s: float) -> float:
    """End-to-end bandwidth in bit/s for a burst delivered over ``t_bd_s``."""
    if t_bd_s <= 0:
        raise ValueError("burst duration must be > 0")
    return burst_bytes * 8.0 / t_bd_s


@dataclass
class BurstObservation:
    """What the profiler learned about one burst."""

    burst_id: int
    size_bytes: float
    start_byte: float
    send_time_s: float
    first_ack_s: Optional[float] = None
    last_ack_s: Optional[float] = None
    acked_bytes: float = 0.0
    complete: bool = False
    zwa_seen: bool = False
    zwa_time_s: Optional[float] = None
    sent_bytes_at_first_zwa: Optional[float] = None
    est_bandwidth_bps: Optional[float] = None

    @property
    def t_bd_s(self) -> float:
        """Burst duration: span from first to last ACK arrival."""
        if self.first_ack_s is None or self.last_ack_s is None:
            return 0.0
        return self.last_ack_s - self.first_ack_s

    @property
    def end_byte(self) -> float:
        return self.start_byte + self.size_bytes


class TrafficProfiler:
    """One profiler per streaming session; single logical feed thread."""

    def __init__(self):
        self.current: Optional[BurstObservation] = None
        self.history: List[BurstObservation] = []
        self._last_cum_ack = -1.0
        self._next_id = 0

    def begin_burst(self, size_bytes: float, start_byte: float,
                    send_time_s: float,
                    burst_id: Optional[int] = None) -> BurstObservation:
        if self.current is not None:
            raise FeedError("previous burst not finished; bursts do not "
                            "pipeline")
        if burst_id is None:
            burst_id = self._next_id
        self._next_id = burst_id + 1
        self.current = BurstObservation(burst_id, size_bytes, start_byte,
                                        send_time_s)
        return self.current

    def ingest(self, ack: AckEvent) -> Optional[BurstObservation]:
        """Feed one ACK; returns the observation once the burst completes."""
        if ack.cum_ack_bytes < self._last_cum_ack - 1e-9:
            raise FeedError("cumulative ack regressed")
        self._last_cum_ack = max(self._last_cum_ack, ack.cum_ack_bytes)
        obs = self.current
        if obs is None or ack.cum_ack_bytes < obs.start_byte - 1e-9:
            return None  # predates the current burst
        if obs.first_ack_s is None:
            obs.first_ack_s = ack.time_s
        obs.last_ack_s = ack.time_s
        obs.acked_bytes = min(ack.cum_ack_bytes, obs.end_byte) - obs.start_byte
        if ack.advertised_window_bytes <= 0 and not obs.zwa_seen:
            obs.zwa_seen = True
            obs.zwa_time_s = ack.time_s
            obs.sent_bytes_at_first_zwa = ack.cum_ack_bytes - obs.start_byte
        if not obs.complete and ack.cum_ack_bytes >= obs.end_byte - 1e-9:
            obs.complete = True
            return obs
        return None

    def finish_burst(self) -> BurstObservation:
        """Close out the current burst and compute its bandwidth estimate.

        A burst cut short by a zero window is estimated over the pre-ZWA
        span only; the post-ZWA drain proceeds at the encoding rate and
        would bias the estimate low.
        """
        obs = self.current
        if obs is None:
            raise FeedError("no burst in progress")
        if obs.zwa_seen and obs.first_ack_s is not None and \
                obs.zwa_time_s is not None:
            span = obs.zwa_time_s - obs.first_ack_s
            if span > 0:
                obs.est_bandwidth_bps = estimate_bandwidth(
                    obs.sent_bytes_at_first_zwa, span)
        elif obs.t_bd_s > 0:
            obs.est_bandwidth_bps = estimate_bandwidth(obs.acked_bytes,
                                                       obs.t_bd_s)
        self.history.append(obs)
        self.current = None
        return obs
