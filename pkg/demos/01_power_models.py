"""
Closed-form power models for bursty streaming
=============================================

Average radio power as a function of the burst interval T, for a client
with a fixed buffer: power falls (or plateaus) while bursts still fit the
buffer and rises once they overflow it, so the optimum sits exactly where
one burst matches the free buffer space.
"""

from burststream import BurstScenario, avg_power, optimal_interval
from burststream.profiles import lte_reference_nodrx, wifi_reference

wifi = wifi_reference()
lte = lte_reference_nodrx()

# a 500 kbit/s stream into a 10 MB client buffer
r_s = 500e3
buffer_bytes = 10e6
t_star = optimal_interval(lte, r_s, lte.r_btc_bps, buffer_bytes)
print(f"buffer-matched interval: {t_star:.0f} s")

print("\n  T[s]   Wi-Fi[mW]    LTE[mW]")
for t in (1, 5, 10, 40, 100, 159, 160, 200, 320, 640):
    row = [avg_power(BurstScenario(r_s, p.r_btc_bps, buffer_bytes, t), p)
           for p in (wifi, lte)]
    marker = "  <- optimum" if t == 160 else ""
    print(f"{t:6.0f} {row[0]:10.2f} {row[1]:10.1f}{marker}")

# The LTE inactivity timer is 10 s: any interval whose idle gap stays
# below it buys nothing, which shows up as a plateau.
print("\nLTE plateau while the idle gap is inside the 10 s timer:")
for t in (2, 4, 6, 8, 10):
    p = avg_power(BurstScenario(r_s, lte.r_btc_bps, 1e9, t), lte)
    print(f"  T={t:3d} s  ->  {p:.4f} mW")

# Lower encoding rates leave more spare bandwidth to exploit.
print("\nsavings potential vs encoding rate (LTE, T=40 s, B=10 MB):")
for rate in (128e3, 500e3, 2000e3, 3000e3):
    p = avg_power(BurstScenario(rate, lte.r_btc_bps, buffer_bytes, 40.0),
                  lte)
    print(f"  r_s={rate / 1e3:5.0f} kbit/s  ->  {p:8.1f} mW")
