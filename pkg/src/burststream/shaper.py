"""Burst shaper: fast-start accounting, interval search, rate adaptation.

The shaper discovers the largest burst a client can absorb purely from
flow-control feedback. Fast Start delivers unshaped content and fixes the
starvation bound ``t_max = L*8/r_s``; a binary search then probes growing
intervals from ``t_max/2`` upward. A zero window ends the search at once,
because the byte count accepted before it *is* the client's buffer size.
Bandwidth collapses below the encoding rate switch the shaper to continuous
sending with save/restore of the search state.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .profiler import BurstObservation

log = logging.getLogger(__name__)


class Phase(enum.Enum):
    FAST_START = "FAST_START"
    SEARCHING = "SEARCHING"
    STEADY = "STEADY"
    LOW_BANDWIDTH = "LOW_BANDWIDTH"


@dataclass(frozen=True)
class QualityLevel:
    bitrate_bps: float
    init_header_bytes: int = 0
    width: int = 0
    height: int = 0


@dataclass(frozen=True)
class StreamSpec:
    """Content description: quality ladder, duration, fast-start length."""

    qualities: Tuple[QualityLevel, ...]
    duration_s: float
    fast_start_s: float = 20.0

    def __post_init__(self) -> None:
        if not self.qualities:
            raise ValueError("at least one quality level required")
        rates = [q.bitrate_bps for q in self.qualities]
        if any(b >= a for a, b in zip(rates[1:], rates)):
            raise ValueError("qualities must be strictly increasing in "
                             "bitrate")
        if self.duration_s <= 0 or self.fast_start_s <= 0:
            raise ValueError("duration and fast_start must be > 0")

    @classmethod
    def single(cls, bitrate_bps: float, duration_s: float,
               fast_start_s: float = 20.0) -> "StreamSpec":
        return cls((QualityLevel(bitrate_bps),), duration_s, fast_start_s)


@dataclass
class ShaperState:
    phase: Phase = Phase.FAST_START
    t_s: Optional[float] = None
    t_min_s: float = 0.0
    t_max_s: Optional[float] = None
    t_old_s: Optional[float] = None
    bs_opt_bytes: Optional[float] = None
    sent_bytes_total: float = 0.0
    current_quality_index: int = 0
    per_quality_bs_opt: Dict[int, float] = field(default_factory=dict)


# Quality selection ---------------------------------------------------------

TYPICAL_MOBILE_BPS = 2_000_000  # planning figure for the very first pick
SAFETY_FACTOR = 2.0             # demand bandwidth >= 2x encoding rate


def initial_quality(ladder: Sequence[QualityLevel],
                    bandwidth_hint_bps: float = TYPICAL_MOBILE_BPS) -> int:
    """Highest quality whose rate fits within half the bandwidth hint."""
    budget = bandwidth_hint_bps / SAFETY_FACTOR
    best = 0
    for i, q in enumerate(ladder):
        if q.bitrate_bps <= budget:
            best = i
    return best


def select_quality(est_bps: float, ladder: Sequence[QualityLevel],
                   current: int) -> Tuple[int, bool]:
    """Apply the switching rule; returns (new index, stall_risk).

    Upgrades only when the estimate covers twice the target encoding rate,
    and then to the highest such quality. Downgrades to the highest
    sustainable quality when the estimate falls below the current rate;
    if even the lowest does not fit, stays there and flags the risk.
    """
    if not ladder:
        raise ValueError("empty quality ladder")
    cur_rate = ladder[current].bitrate_bps
    if est_bps >= cur_rate:
        best = current
        for i in range(current + 1, len(ladder)):
            if SAFETY_FACTOR * ladder[i].bitrate_bps <= est_bps:
                best = i
        return best, False
    for i in range(current - 1, -1, -1):
        if ladder[i].bitrate_bps <= est_bps:
            return i, False
    return 0, True


QualityPolicy = Callable[[float, Sequence[QualityLevel], int],
                         Tuple[int, bool]]


class Shaper:
    """Per-session traffic shaper state machine.

    ``quality_policy`` decides switches from (estimate, ladder, current
    index); the default is the double-the-rate upgrade rule with downgrade
    to the highest sustainable quality, and other policies can be plugged
    in without touching the shaping machinery.
    """

    def __init__(self, stream: StreamSpec, granularity_s: float = 1.0,
                 bandwidth_hint_bps: float = TYPICAL_MOBILE_BPS,
                 quality_policy: QualityPolicy = select_quality):
        if granularity_s <= 0:
            raise ValueError("granularity must be > 0")
        self.stream = stream
        self.granularity_s = granularity_s
        self.quality_policy = quality_policy
        self.state = ShaperState(
            current_quality_index=initial_quality(stream.qualities,
                                                  bandwidth_hint_bps))
        self.decision_log: List[str] = []
        self.burst_log: List[str] = []
        self._last_feedback_id: Optional[int] = None

    # -- convenience -----------------------------------------------------

    @property
    def r_s_bps(self) -> float:
        return self.stream.qualities[self.state.current_quality_index].bitrate_bps

    @property
    def phase(self) -> Phase:
        return self.state.phase

    @property
    def current_interval_s(self) -> Optional[float]:
        return self.state.t_s

    def record_sent(self, nbytes: float) -> None:
        self.state.sent_bytes_total += nbytes

    def next_burst_bytes(self, pending_bytes: float = 0.0) -> float:
        """Size of the next burst: interval worth of content plus any
        remainder re-offered after an aborted burst, capped by BS_OPT."""
        if self.state.t_s is None:
            raise RuntimeError("no interval chosen yet")
        size = self.state.t_s * self.r_s_bps / 8.0 + pending_bytes
        if self.state.bs_opt_bytes is not None:
            size = min(size, self.state.bs_opt_bytes)
        elif self.state.t_max_s is not None:
            size = min(size, self.state.t_max_s * self.r_s_bps / 8.0)
        return size

    # -- fast start -------------------------------------------------------

    def end_fast_start(self, sent_bytes: float,
                       r_s_bps: Optional[float] = None) -> float:
        """Close Fast Start; returns t_max and arms the search at t_max/2."""
        if sent_bytes <= 0:
            raise ValueError("fast start must deliver some bytes")
        r_s = r_s_bps if r_s_bps is not None else self.r_s_bps
        t_max = sent_bytes * 8.0 / r_s
        st = self.state
        st.t_max_s = t_max
        st.t_min_s = 0.0
        st.phase = Phase.SEARCHING
        st.t_s = t_max / 2.0
        self._decide(f"fast_start_end t_max={t_max:.3f} t={st.t_s:.3f}")
        # degenerate bound: nothing left to probe
        if t_max - st.t_s < self.granularity_s:
            self._settle_at_t_max()
        return t_max

    def fast_start_zwa(self, sent_bytes_at_zwa: float) -> float:
        """Zero window during Fast Start: the buffer size is already known,
        skip the search entirely."""
        st = self.state
        st.bs_opt_bytes = sent_bytes_at_zwa
        st.t_s = sent_bytes_at_zwa * 8.0 / self.r_s_bps
        if st.t_max_s is None or st.t_s < st.t_max_s:
            st.t_max_s = max(st.t_max_s or 0.0, st.t_s)
        st.phase = Phase.STEADY
        self.propagate_bs_opt(st.current_quality_index, sent_bytes_at_zwa,
                              zwa_derived=True)
        self._decide(f"fast_start_zwa bs_opt={sent_bytes_at_zwa:.0f} "
                     f"t_opt={st.t_s:.3f}")
        return st.t_s

    # -- search -----------------------------------------------------------

    def on_burst_feedback(self, obs: BurstObservation) -> Tuple:
        """Advance the interval search with one burst's feedback.

        Returns ('set_bs_opt', bytes) when the search concludes, else
        ('send_burst', next_interval).
        """
        st = self.state
        if self._last_feedback_id is not None and \
                obs.burst_id <= self._last_feedback_id:
            log.warning("stale burst feedback id=%s ignored", obs.burst_id)
            return ("send_burst", st.t_s)
        self._last_feedback_id = obs.burst_id

        if st.phase is not Phase.SEARCHING:
            if obs.zwa_seen and st.phase is Phase.STEADY and \
                    obs.sent_bytes_at_first_zwa:
                # client shrank below the settled operating point
                st.bs_opt_bytes = obs.sent_bytes_at_first_zwa
                st.t_s = min(st.t_s or 0.0,
                             st.bs_opt_bytes * 8.0 / self.r_s_bps)
                self._decide(f"steady_zwa bs_opt={st.bs_opt_bytes:.0f}")
                return ("set_bs_opt", st.bs_opt_bytes)
            return ("send_burst", st.t_s)

        if obs.zwa_seen:
            bs_opt = obs.sent_bytes_at_first_zwa
            st.bs_opt_bytes = bs_opt
            st.t_s = bs_opt * 8.0 / self.r_s_bps
            st.phase = Phase.STEADY
            self.propagate_bs_opt(st.current_quality_index, bs_opt,
                                  zwa_derived=True)
            self._decide(f"search_zwa bs_opt={bs_opt:.0f} t_opt={st.t_s:.3f}")
            return ("set_bs_opt", bs_opt)

        st.t_min_s = st.t_s
        if st.t_max_s - st.t_s < self.granularity_s:
            self._settle_at_t_max()
            return ("set_bs_opt", st.bs_opt_bytes)
        st.t_s = (st.t_s + st.t_max_s) / 2.0
        self._decide(f"search_step t={st.t_s:.4f}")
        return ("send_burst", st.t_s)

    def _settle_at_t_max(self) -> None:
        st = self.state
        st.t_s = st.t_max_s
        st.bs_opt_bytes = st.t_max_s * self.r_s_bps / 8.0
        st.phase = Phase.STEADY
        self.propagate_bs_opt(st.current_quality_index, st.bs_opt_bytes,
                              zwa_derived=False)
        self._decide(f"search_t_max t_opt={st.t_s:.3f} "
                     f"bs_opt={st.bs_opt_bytes:.0f}")

    # -- bandwidth fluctuation ---------------------------------------------

    def on_bandwidth_change(self, est_bps: Optional[float],
                            runway_s: Optional[float] = None) -> Optional[Tuple]:
        """React to a new bandwidth estimate.

        Below the encoding rate: save the current state (t_old) and fall
        back to continuous sending, tracking t_max as the content runway
        already shipped to the client. At recovery (estimate at least twice
        the encoding rate) restore t = t_old and search again.
        """
        st = self.state
        if est_bps is None:
            return None
        if st.phase is Phase.LOW_BANDWIDTH:
            if runway_s is not None:
                st.t_max_s = max(runway_s, 0.0)
            if est_bps >= SAFETY_FACTOR * self.r_s_bps:
                st.t_s = st.t_old_s
                st.t_min_s = 0.0
                st.t_old_s = None
                st.bs_opt_bytes = None
                st.phase = Phase.SEARCHING
                self._decide(f"bandwidth_recovered t={st.t_s:.3f} "
                             f"t_max={st.t_max_s:.3f}")
                return ("restore", st.t_s)
            return ("continuous_send",)
        if est_bps < self.r_s_bps and st.phase in (Phase.SEARCHING,
                                                   Phase.STEADY):
            st.t_old_s = st.t_s
            st.phase = Phase.LOW_BANDWIDTH
            self._decide(f"bandwidth_low t_old={st.t_old_s:.3f} "
                         f"est={est_bps:.0f}")
            return ("continuous_send",)
        return None

    # -- rate adaptation ----------------------------------------------------

    def maybe_switch_quality(self, est_bps: Optional[float]) -> Optional[int]:
        """Apply the selection rule and re-seed the search when upgrading.

        Returns the new quality index when a switch happens, else None.
        """
        if est_bps is None:
            return None
        st = self.state
        new_q, risk = self.quality_policy(est_bps, self.stream.qualities,
                                          st.current_quality_index)
        if risk:
            self._decide(f"quality_floor est={est_bps:.0f}: stall risk")
        if new_q == st.current_quality_index:
            return None
        old_q = st.current_quality_index
        st.current_quality_index = new_q
        cap = st.per_quality_bs_opt.get(new_q)
        if cap is not None:
            st.bs_opt_bytes = cap
            st.t_s = cap * 8.0 / self.r_s_bps
            st.phase = Phase.STEADY
        elif new_q > old_q and st.bs_opt_bytes is not None:
            # equivalent interval for the known byte size seeds a re-search
            seed = st.bs_opt_bytes * 8.0 / self.r_s_bps
            st.t_min_s = seed
            st.t_s = seed
            st.bs_opt_bytes = None
            st.phase = Phase.SEARCHING
        self._decide(f"quality_switch {old_q}->{new_q} "
                     f"rate={self.r_s_bps:.0f}")
        return new_q

    def propagate_bs_opt(self, found_at_quality: int, bs_opt_bytes: float,
                         zwa_derived: bool) -> Dict[int, float]:
        """Spread a discovered optimum across the ladder.

        A zero-window optimum is a byte limit of the client's buffer and
        applies to every quality. A t_max-limited optimum is an interval
        bound: lower qualities inherit the interval (fewer bytes, safe);
        higher qualities must re-search from the equivalent interval.
        """
        st = self.state
        ladder = self.stream.qualities
        if zwa_derived:
            for i in range(len(ladder)):
                st.per_quality_bs_opt[i] = bs_opt_bytes
        else:
            t_opt = bs_opt_bytes * 8.0 / ladder[found_at_quality].bitrate_bps
            for i in range(found_at_quality + 1):
                st.per_quality_bs_opt[i] = t_opt * ladder[i].bitrate_bps / 8.0
        return dict(st.per_quality_bs_opt)

    # -- logging ------------------------------------------------------------

    def log_burst(self, burst_id: int, t_s: float, nbytes: float,
                  zwa: bool) -> str:
        st = self.state
        bs_opt = "" if st.bs_opt_bytes is None else f"{st.bs_opt_bytes:.0f}"
        row = (f"{burst_id},{self.r_s_bps:.0f},{t_s:.3f},{nbytes:.0f},"
               f"{int(zwa)},{bs_opt},{st.phase.value}")
        self.burst_log.append(row)
        return row

    BURST_LOG_HEADER = "burst_id,quality_bps,T_s,bytes,zwa,bs_opt_bytes,phase"

    def _decide(self, text: str) -> None:
        self.decision_log.append(text)
