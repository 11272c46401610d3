"""Command-line entry points: scenario runs, surface sweeps, config
comparisons, and the live shaping proxy."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List

from . import harness
from .profiles import ConfigError, get_profile, list_profiles
from .proxy import SessionConfig, ShapingProxy
from .shaper import Shaper


def _parse_grid(text: str) -> List[float]:
    """Grid syntax: comma list '1,2,5' or inclusive range 'start:stop:step'."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        out = []
        v = start
        while v <= stop + 1e-9:
            out.append(v)
            v += step
        return out
    return [float(x) for x in text.split(",")]


def _parse_listen(text: str):
    host, _, port = text.rpartition(":")
    return (host or "127.0.0.1", int(port))


def cmd_run(args) -> int:
    scenario = harness.load_scenario(args.scenario)
    result = harness.run(scenario)
    print(result.summary())
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "bursts.csv").write_text(
            Shaper.BURST_LOG_HEADER + "\n" + "\n".join(result.burst_log)
            + "\n")
        (out / "radio_states.csv").write_text(result.state_trace.to_csv())
        (out / "signaling.csv").write_text(result.signaling.to_csv())
        stalls = ["start_s,end_s"] + [
            f"{s:.6f},{'' if e is None else format(e, '.6f')}"
            for s, e in result.stall_log]
        (out / "stalls.csv").write_text("\n".join(stalls) + "\n")
        print(f"wrote {out}/bursts.csv radio_states.csv signaling.csv "
              f"stalls.csv")
    return 0


def cmd_sweep(args) -> int:
    profile = get_profile(args.profile)
    csv = harness.sweep_surface(profile, _parse_grid(args.rs),
                                _parse_grid(args.t), _parse_grid(args.b),
                                out_path=args.out)
    if args.out:
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv)
    return 0


def cmd_compare(args) -> int:
    scenario = harness.load_scenario(args.scenario)
    profiles = [get_profile(p) for p in args.profiles]
    expect = args.expect_energy_order.split(",") \
        if args.expect_energy_order else None
    rows = harness.compare_configs(scenario, profiles,
                                   expect_energy_order=expect)
    sys.stdout.write(harness.compare_table(rows))
    return 0


def cmd_proxy(args) -> int:
    config = SessionConfig(
        listen=_parse_listen(args.listen),
        origin=args.origin,
        fast_start_seconds=args.fast_start_seconds,
        granularity_s=args.granularity_s,
        rate_override_bps=args.rate_override_bps,
        log_path=args.log,
        backpressure_s=args.backpressure_s,
    )
    proxy = ShapingProxy(config)
    host, port = proxy.start()
    print(f"shaping proxy listening on {host}:{port}")
    try:
        proxy.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        proxy.close()
    return 0


def cmd_profiles(_args) -> int:
    for name in list_profiles():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burststream",
        description="Energy-aware burst shaping: simulate, sweep, compare, "
                    "or run the live proxy.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file (shaped vs baseline)")
    p.add_argument("scenario")
    p.add_argument("--out", help="directory for CSV outputs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="average-power surface over a grid")
    p.add_argument("profile", help="shipped profile name or .ini path")
    p.add_argument("--rs", required=True,
                   help="encoding rates, bit/s (list or start:stop:step)")
    p.add_argument("--t", required=True, help="burst intervals, seconds")
    p.add_argument("--b", required=True, help="buffer sizes, bytes")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare",
                       help="same scenario under several radio configs")
    p.add_argument("scenario")
    p.add_argument("profiles", nargs="+")
    p.add_argument("--expect-energy-order",
                   help="comma list of profile names in non-decreasing "
                        "shaped-energy order; violation exits nonzero")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("proxy", help="live HTTP shaping proxy")
    p.add_argument("--listen", default="127.0.0.1:8800")
    p.add_argument("--fast-start-seconds", type=float, default=20.0)
    p.add_argument("--granularity-s", type=float, default=1.0)
    p.add_argument("--rate-override-bps", type=float)
    p.add_argument("--log", help="burst log CSV path")
    p.add_argument("--origin", help="origin base URL override")
    p.add_argument("--backpressure-s", type=float, default=0.5)
    p.set_defaults(func=cmd_proxy)

    p = sub.add_parser("profiles", help="list shipped radio profiles")
    p.set_defaults(func=cmd_profiles)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, AssertionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
