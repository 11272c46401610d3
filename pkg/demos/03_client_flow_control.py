"""
Flow control at the simulated client
====================================

Deliver an oversized burst into a small combined buffer: the window pins
to zero and the trailing bytes can only enter as fast as playback frees
space, which is the whole reason over-large bursts waste energy.
"""

from burststream import StreamingClient

# 2 MB of combined player + receive buffer, 500 kbit/s content
client = StreamingClient(2_000_000, 500e3, link_rate_bps=16e6)

burst = 5_000_000
res = client.deliver(burst, 16e6, 0.0)
print(f"burst of {burst / 1e6:.1f} MB into a 2 MB buffer:")
print(f"  zero-window episodes : {res.zwa_episodes}")
print(f"  bytes before the ZWA : {res.bytes_at_first_zwa / 1e6:.2f} MB "
      f"at t={res.first_zwa_time_s:.2f} s")
print(f"  delivery finished at : {res.end_s:.1f} s")

overflow = res.delivered_bytes - res.bytes_at_first_zwa
span = res.end_s - res.first_zwa_time_s
print(f"  overflow drain rate  : {overflow * 8 / span / 1e3:.1f} kbit/s "
      f"(the encoding rate)")

# a burst that fits causes no ZWA at all
client2 = StreamingClient(8_000_000, 500e3, link_rate_bps=16e6)
res2 = client2.deliver(1_000_000, 16e6, 0.0)
print(f"\n1 MB into an 8 MB buffer: zwa={res2.zwa_episodes}, "
      f"done in {res2.end_s:.3f} s at full link rate")

# run the player down to a stall
client2.advance(40.0)
client2.finalize()
print(f"stall log after draining everything: {client2.stall_log}")
