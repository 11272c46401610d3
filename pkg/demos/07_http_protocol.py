"""
The seconds-range HTTP extension on the wire
============================================

A client asks for open-ended seconds ranges; the server answers with 200
initialization and 200/206 content messages carrying X-Stream-Info. When a
burst is cut short by the client's zero window, the next request draws a
bodyless 204 whose header corrects the range bookkeeping.
"""

from burststream.mediahttp import (StreamResponder, build_request,
                                   next_request_after, render_request,
                                   render_response)

server = StreamResponder(duration_s=597)

print("== session start at 700 kbit/s")
req = build_request("/BigBuckBunny", "www.service-x.com", 0,
                    device_tag="ANDROID")
print(render_request(req))
for resp in server.respond(req, 700000.0, 60):
    print(render_response(resp))

print("== quality switch to 2 Mbit/s at second 100")
req = build_request("/BigBuckBunny", "www.service-x.com", 100,
                    device_tag="ANDROID")
for resp in server.respond(req, 2000000.0, 40):
    print(render_response(resp))

print("== a zero window cut the burst at second 134; the header had "
      "promised 139")
server.note_shortfall(134)
req = build_request("/BigBuckBunny", "www.service-x.com", 135,
                    device_tag="ANDROID")
correction = server.respond(req, 2000000.0, 40)[0]
print(render_response(correction))

retry = next_request_after(correction, "/BigBuckBunny",
                           "www.service-x.com", device_tag="ANDROID")
print("== client re-anchors at the correction's end + 1")
print(render_request(retry))
for resp in server.respond(retry, 2000000.0, 40):
    print(render_response(resp))
