"""
End-to-end shaped session vs continuous baseline
================================================

Run a shipped scenario file: the same content is delivered once through
the full shaping loop and once paced continuously at the encoding rate,
and the radio energies are compared. Also sweep the fluctuation scenario
where the bandwidth collapses below the encoding rate mid-session.
"""

from pathlib import Path

from burststream import load_scenario, run

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

result = run(load_scenario(SCENARIOS / "lte-audio-18s.ini"))
print(result.summary())
print("\nfirst bursts:")
for row in result.burst_log[:6]:
    print("  ", row)
print("\nsignaling ledger:")
print(result.signaling.to_csv())

# bandwidth dips below the encoding rate: the shaper saves its state,
# streams continuously, and restores the interval once bandwidth returns
result = run(load_scenario(SCENARIOS / "hspa-audio-fluctuating.ini"))
print(result.summary())
print("fallback decisions:")
for d in result.session.decision_log:
    if "bandwidth" in d:
        print("  ", d)
print(f"stalls during the dip: {[(round(a, 1), round(b, 1)) for a, b in result.stall_log]}")
