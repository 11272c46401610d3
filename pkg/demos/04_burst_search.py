"""
Finding the optimal burst size from flow-control feedback
=========================================================

The shaper never asks the client how big its buffer is; it probes growing
burst intervals from t_max/2 upward and listens for the zero window. One
overshoot is enough, because the bytes accepted before the window closed
are the buffer size.
"""

import math

from burststream import linear_sweep_oracle, probe_search

r_s = 2e6           # 2 Mbit/s stream
t_max = 60.0        # a minute of content was forwarded during fast start
link = 16e6

for capacity_mb in (4, 10, 20):
    capacity = capacity_mb * 1_000_000
    found = probe_search(capacity, r_s, t_max, link)
    oracle = linear_sweep_oracle(capacity, r_s, t_max, link)
    bound = math.ceil(math.log2(t_max))
    kind = "zero window" if found.zwa_terminated else "t_max reached"
    print(f"client buffer {capacity_mb:2d} MB:")
    print(f"  probes  : {[round(t, 2) for t in found.probes]}")
    print(f"  found   : {found.bs_opt_bytes / 1e6:.2f} MB via {kind} "
          f"in {found.rounds} rounds (bound {bound})")
    print(f"  oracle  : {oracle / 1e6:.2f} MB by linear sweep")
    print()
