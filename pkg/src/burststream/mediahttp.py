"""Seconds-range HTTP extension for shaped media delivery.

Requests carry an open-ended ``Range: seconds=N-``; responses describe the
chunk actually served through ``Content-Range`` plus an ``X-Stream-Info``
key-value header (duration, bitrate, seconds span, dimensions). A 200
initializes a stream (or re-initializes it on a quality switch), a 206
continues it, and a 204 carries only a range correction after the server
cut a burst short on a zero window.

Parsing keeps each header's raw spelling (separator and spacing), so a
parsed message renders back byte-identically once line endings are
normalized to CRLF. Note one deliberate quirk preserved from the wire
format: the denominator of a seconds ``Content-Range`` is the chunk length
in seconds, not the total duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple


class ProtocolError(ValueError):
    """Malformed or inconsistent message."""


VALID_STATUS = (200, 204, 206)


@dataclass
class HeaderField:
    """One header line, split at the earliest ':' or '=' separator."""

    raw_name: str
    sep: str
    raw_value: str

    @property
    def name(self) -> str:
        return self.raw_name.strip().lower()

    @property
    def value(self) -> str:
        return self.raw_value.strip()

    def render(self) -> str:
        return f"{self.raw_name}{self.sep}{self.raw_value}"

    @classmethod
    def parse(cls, line: str) -> "HeaderField":
        colon = line.find(":")
        equals = line.find("=")
        if colon < 0 and equals < 0:
            raise ProtocolError(f"header line without separator: {line!r}")
        if colon < 0 or (0 <= equals < colon):
            idx, sep = equals, "="
        else:
            idx, sep = colon, ":"
        return cls(line[:idx], sep, line[idx + 1:])

    @classmethod
    def make(cls, name: str, value: str) -> "HeaderField":
        return cls(name, ":", f" {value}")


def _split_lines(raw) -> List[str]:
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("latin-1")
    text = raw.replace("\r\n", "\n")
    lines = text.split("\n")
    # drop the trailing blank(s) that terminate the head
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _get(headers: List[HeaderField], name: str) -> Optional[HeaderField]:
    for h in headers:
        if h.name == name:
            return h
    return None


@dataclass
class StreamInfo:
    """Ordered key-value pairs of the X-Stream-Info header."""

    pairs: List[Tuple[str, str]]
    raw: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> "StreamInfo":
        pairs = []
        for item in text.split(";"):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise ProtocolError(f"bad X-Stream-Info item: {item!r}")
            k, v = item.split("=", 1)
            pairs.append((k.strip(), v.strip()))
        return cls(pairs, raw=text)

    def get(self, key: str) -> Optional[str]:
        for k, v in self.pairs:
            if k == key:
                return v
        return None

    @property
    def duration_s(self) -> Optional[float]:
        v = self.get("duration")
        return float(v) if v is not None else None

    @property
    def bitrate_bps(self) -> float:
        v = self.get("bitrate")
        if v is None:
            raise ProtocolError("X-Stream-Info carries no bitrate")
        return float(v)

    @property
    def seconds_range(self) -> Optional[Tuple[int, Optional[int]]]:
        v = self.get("seconds")
        if v is None:
            return None
        return _parse_seconds_span(v)

    @property
    def height(self) -> Optional[int]:
        v = self.get("height")
        return int(v) if v is not None else None

    @property
    def width(self) -> Optional[int]:
        v = self.get("width")
        return int(v) if v is not None else None

    def render(self) -> str:
        if self.raw is not None:
            return self.raw
        return ";".join(f"{k}={v}" for k, v in self.pairs)

    @classmethod
    def build(cls, duration_s: float, bitrate_bps: float, seconds: str,
              height: int, width: int) -> "StreamInfo":
        return cls([("duration", f"{duration_s:g}"),
                    ("bitrate", f"{bitrate_bps:g}"),
                    ("seconds", seconds),
                    ("height", str(height)),
                    ("width", str(width))])


def _parse_seconds_span(text: str) -> Tuple[int, Optional[int]]:
    if "-" not in text:
        raise ProtocolError(f"bad seconds span: {text!r}")
    start_s, end_s = text.split("-", 1)
    try:
        start = int(start_s)
    except ValueError:
        raise ProtocolError(f"bad seconds span start: {text!r}")
    if end_s == "":
        return start, None
    try:
        return start, int(end_s)
    except ValueError:
        raise ProtocolError(f"bad seconds span end: {text!r}")


@dataclass
class ContentRange:
    unit: str  # "bytes" or "seconds"
    start: int
    end: int
    length: int  # chunk length (seconds unit) or total size (bytes unit)

    @classmethod
    def parse(cls, text: str) -> "ContentRange":
        try:
            unit, span = text.strip().split(None, 1)
            rng, length = span.split("/", 1)
            start_s, end_s = rng.split("-", 1)
            return cls(unit, int(start_s), int(end_s), int(length))
        except (ValueError, TypeError):
            raise ProtocolError(f"bad Content-Range: {text!r}")

    def render(self) -> str:
        return f"{self.unit} {self.start}-{self.end}/{self.length}"


# -- requests ----------------------------------------------------------------

@dataclass
class StreamRequest:
    method: str
    target: str
    http_version: str
    headers: List[HeaderField] = field(default_factory=list)

    @property
    def range_start_s(self) -> int:
        h = _get(self.headers, "range")
        if h is None:
            raise ProtocolError("request carries no Range header")
        value = h.value
        if not value.startswith("seconds="):
            raise ProtocolError(f"unsupported Range unit: {value!r}")
        start, end = _parse_seconds_span(value[len("seconds="):])
        if end is not None:
            raise ProtocolError("only open-ended seconds ranges are valid")
        if start < 0:
            raise ProtocolError("range start must be >= 0")
        return start

    @property
    def host(self) -> Optional[str]:
        h = _get(self.headers, "host")
        return h.value if h else None

    @property
    def device_tag(self) -> Optional[str]:
        h = _get(self.headers, "x-device")
        return h.value if h else None

    def render(self) -> str:
        lines = [f"{self.method} {self.target} {self.http_version}"]
        lines.extend(h.render() for h in self.headers)
        return "\r\n".join(lines) + "\r\n\r\n"


def parse_request(raw) -> StreamRequest:
    lines = _split_lines(raw)
    if not lines:
        raise ProtocolError("empty request")
    parts = lines[0].split(" ")
    if len(parts) != 3:
        raise ProtocolError(f"bad request line: {lines[0]!r}")
    req = StreamRequest(parts[0], parts[1], parts[2],
                        [HeaderField.parse(ln) for ln in lines[1:] if ln])
    req.range_start_s  # validates presence and shape
    return req


def render_request(req: StreamRequest) -> str:
    return req.render()


def build_request(path: str, host: str, range_start_s: int,
                  device_tag: Optional[str] = None,
                  accept: Optional[str] = "*/*") -> StreamRequest:
    headers = [HeaderField.make("Host", host)]
    if accept:
        headers.append(HeaderField.make("Accept", accept))
    headers.append(HeaderField.make("Range", f"seconds={range_start_s}-"))
    if device_tag:
        headers.append(HeaderField.make("X-Device", device_tag))
    return StreamRequest("GET", path, "HTTP/1.1", headers)


# -- responses ---------------------------------------------------------------

@dataclass
class StreamResponse:
    status: int
    reason: str
    headers: List[HeaderField] = field(default_factory=list)
    status_line_prefix: str = ""  # e.g. "HTTP/1.1 " when present on the wire

    @property
    def content_type(self) -> Optional[str]:
        h = _get(self.headers, "content-type")
        return h.value if h else None

    @property
    def content_length_bytes(self) -> Optional[int]:
        h = _get(self.headers, "content-length")
        return int(h.value) if h else None

    @property
    def content_range(self) -> Optional[ContentRange]:
        h = _get(self.headers, "content-range")
        return ContentRange.parse(h.value) if h else None

    @property
    def stream_info(self) -> StreamInfo:
        h = _get(self.headers, "x-stream-info")
        if h is None:
            raise ProtocolError("response carries no X-Stream-Info")
        return StreamInfo.parse(h.value)

    def render(self) -> str:
        lines = [f"{self.status_line_prefix}{self.status} {self.reason}"]
        lines.extend(h.render() for h in self.headers)
        return "\r\n".join(lines) + "\r\n\r\n"

    def validate(self) -> None:
        if self.status not in VALID_STATUS:
            raise ProtocolError(f"unsupported status {self.status}")
        info = self.stream_info
        info.bitrate_bps  # required
        if self.status == 204 and self.content_length_bytes not in (None, 0):
            raise ProtocolError("204 correction must not carry a body")
        cr = self.content_range
        if cr is not None and cr.unit == "seconds":
            span = info.seconds_range
            if span is not None and span[1] is not None and \
                    (cr.start, cr.end) != span:
                raise ProtocolError(
                    f"seconds range {span} disagrees with Content-Range "
                    f"{cr.start}-{cr.end}")


def parse_response(raw) -> StreamResponse:
    lines = _split_lines(raw)
    if not lines:
        raise ProtocolError("empty response")
    status_line = lines[0]
    prefix = ""
    if status_line.startswith("HTTP/"):
        prefix, status_line = status_line.split(" ", 1)
        prefix += " "
    parts = status_line.split(" ", 1)
    try:
        status = int(parts[0])
    except ValueError:
        raise ProtocolError(f"bad status line: {lines[0]!r}")
    reason = parts[1] if len(parts) > 1 else ""
    resp = StreamResponse(status, reason,
                          [HeaderField.parse(ln) for ln in lines[1:] if ln],
                          prefix)
    resp.validate()
    return resp


def render_response(resp: StreamResponse) -> str:
    return resp.render()


def build_response(status: int, *, content_type: str = "video/mp4",
                   content_length: Optional[int] = None,
                   content_range: Optional[ContentRange] = None,
                   stream_info: Optional[StreamInfo] = None,
                   reason: Optional[str] = None) -> StreamResponse:
    reasons = {200: "OK", 206: "OK Partial Content", 204: "OK"}
    headers: List[HeaderField] = []
    if status != 204:
        headers.append(HeaderField("Content-Type", "=", content_type))
        if content_length is not None:
            headers.append(HeaderField.make("Content-Length",
                                            str(content_length)))
        if content_range is not None:
            headers.append(HeaderField.make("Content-Range",
                                            content_range.render()))
    if stream_info is not None:
        headers.append(HeaderField.make("X-Stream-Info",
                                        stream_info.render()))
    resp = StreamResponse(status, reason or reasons[status], headers)
    resp.validate()
    return resp


def next_request_after(resp: StreamResponse, path: str, host: str,
                       device_tag: Optional[str] = None) -> StreamRequest:
    """Client's next request after a response, re-anchored past what was
    actually served; after a 204 correction this lands at end+1."""
    span = resp.stream_info.seconds_range
    if span is None or span[1] is None:
        raise ProtocolError("response does not delimit served seconds")
    return build_request(path, host, span[1] + 1, device_tag)


class ReferenceClient:
    """Request pacing for the seconds-range protocol.

    Issues the opening request at second 0 and a follow-up whenever the
    playback buffer runs down to ``low_water_s`` seconds of content. A 204
    correction re-anchors the bookkeeping at what the server actually
    delivered; initialization responses (byte-ranged) leave it untouched.
    """

    def __init__(self, path: str, host: str,
                 device_tag: Optional[str] = None, low_water_s: float = 5.0):
        self.path = path
        self.host = host
        self.device_tag = device_tag
        self.low_water_s = low_water_s
        self.buffered_through_s: Optional[int] = None  # last second held

    def first_request(self) -> StreamRequest:
        return build_request(self.path, self.host, 0, self.device_tag)

    def note_response(self, resp: StreamResponse) -> None:
        span = resp.stream_info.seconds_range
        cr = resp.content_range
        if resp.status == 204:
            if span is None or span[1] is None:
                raise ProtocolError("204 correction without a seconds span")
            self.buffered_through_s = span[1]
        elif cr is not None and cr.unit == "seconds":
            self.buffered_through_s = cr.end

    def needs_request(self, playback_position_s: float) -> bool:
        if self.buffered_through_s is None:
            return True
        remaining = self.buffered_through_s + 1 - playback_position_s
        return remaining <= self.low_water_s

    def next_request(self) -> StreamRequest:
        if self.buffered_through_s is None:
            return self.first_request()
        return build_request(self.path, self.host,
                             self.buffered_through_s + 1, self.device_tag)


# -- server-side response planning -------------------------------------------

class StreamResponder:
    """Plans the response sequence for a shaped media stream.

    A quality switch always yields a 200 initialization response (opaque
    header bytes of the new quality) before the content response. When a
    request asks for seconds beyond what was actually delivered (the server
    aborted a burst on a zero window), a 204 correction tells the client
    where the stream really stands.
    """

    def __init__(self, duration_s: float):
        self.duration_s = duration_s
        self.served_through_s = -1   # last content second actually delivered
        self.last_chunk_start_s = 0
        self.pending_correction = False
        self.current_bitrate: Optional[float] = None

    def note_shortfall(self, actual_end_s: int) -> None:
        """A burst was aborted on a zero window: less content went out than
        the response header declared. The next request gets a 204."""
        self.served_through_s = actual_end_s
        self.pending_correction = True

    def respond(self, req: StreamRequest, bitrate_bps: float,
                chunk_seconds: int, height: int = 480,
                width: int = 853,
                init_header_bytes: int = 128000) -> List[StreamResponse]:
        # always continue past what was already delivered: a request whose
        # start overlaps served content (the client names its last held
        # second) gets the next chunk, not a re-send
        start = max(req.range_start_s, self.served_through_s + 1)
        if self.pending_correction:
            self.pending_correction = False
            info = StreamInfo.build(
                self.duration_s, self.current_bitrate or bitrate_bps,
                f"{self.last_chunk_start_s}-{self.served_through_s}",
                height, width)
            return [build_response(204, stream_info=info)]
        out: List[StreamResponse] = []
        if bitrate_bps != self.current_bitrate:
            info = StreamInfo.build(self.duration_s, bitrate_bps,
                                    f"{start}-", height, width)
            out.append(build_response(
                200, content_length=init_header_bytes,
                content_range=ContentRange("bytes", 0, init_header_bytes - 1,
                                           init_header_bytes),
                stream_info=info))
            self.current_bitrate = bitrate_bps
        end = min(start + chunk_seconds - 1, int(self.duration_s) - 1)
        nbytes = int((end - start + 1) * bitrate_bps / 8)
        info = StreamInfo.build(self.duration_s, bitrate_bps,
                                f"{start}-{end}", height, width)
        status = 200 if self.served_through_s < 0 else 206
        out.append(build_response(
            status, content_length=nbytes,
            content_range=ContentRange("seconds", start, end,
                                       end - start + 1),
            stream_info=info))
        self.served_through_s = end
        self.last_chunk_start_s = start
        return out
