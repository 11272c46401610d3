"""
Radio state machines under bursty traffic
=========================================

Replay the same 39 s burst schedule against different network
configurations and watch where the time and the signaling go.
"""

from burststream import (ActivityTrace, SignalingCostTable, energy_of,
                         get_profile, signaling_of, simulate)

trace = ActivityTrace.from_spans(
    [(k * 39.0, k * 39.0 + 1.0, 1_000_000) for k in range(4)])
horizon = 156.0
costs = SignalingCostTable.default()

for name in ("hspa-default", "hspa-nopch", "hspa-legacy-fd",
             "lte-nodrx-default", "lte-drx-default"):
    profile = get_profile(name)
    st = simulate(trace, profile, horizon_s=horizon)
    ledger = signaling_of(st, costs)
    energy = energy_of(st, profile)
    print(f"\n== {name}: {energy / 1e3:.1f} J, "
          f"{ledger.total_messages} signaling messages "
          f"({ledger.per_minute:.1f}/min)")
    shown = 0
    for seg in st.segments:
        tag = "rx" if seg.active else "  "
        print(f"  {seg.start_s:7.2f} - {seg.end_s:7.2f}  {tag} "
              f"{seg.state.value:13s} {seg.power_mw:8.1f} mW")
        shown += 1
        if shown >= 8:
            print("  ...")
            break
