"""Command-line front end.

Exit codes: 0 certified / definitely accepted, 1 not certified, 2 bad input.
"""

from __future__ import annotations

import argparse
import sys
import time

from .certifier import certify_access, certify_all
from .errors import ParseError, SpoofcertError
from .model import CT_STATES, PacketPattern
from .parser import load_table, parse_ipassmt
from .preprocess import apply_state_assumption, simplify, unfold
from .wordset import format_cidr, parse_addr

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
MAX_REPORTED_CIDRS = 8


class _InputError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise _InputError(f"error:0: cannot read {path}: {exc}") from exc


def _load_flat(args, assume_new: bool):
    text = _read(args.ruleset)
    try:
        table, diags = load_table(text, args.table, args.width)
    except ParseError as exc:
        raise _InputError(f"error:{exc.line or 0}: {exc.message}") from exc
    for d in diags:
        _err(str(d))
    flat = simplify(unfold(table, args.chain))
    return apply_state_assumption(flat, assume_new)


def format_offending(cidrs) -> str:
    shown = ", ".join(format_cidr(c) for c in cidrs[:MAX_REPORTED_CIDRS])
    extra = len(cidrs) - MAX_REPORTED_CIDRS
    return f"{shown} (+{extra} more)" if extra > 0 else shown


def cmd_certify(args) -> int:
    flat = _load_flat(args, not args.no_new_assumption)
    try:
        ipassmt = parse_ipassmt(_read(args.ipassmt), args.width)
    except ParseError as exc:
        raise _InputError(f"error:{exc.line or 0}: {exc.message}") from exc
    if not ipassmt:
        raise _InputError("error:0: ipassmt file lists no interfaces")
    if args.dump_flat:
        for rule in flat:
            print(rule.to_spec())
    started = time.perf_counter()
    results = certify_all(flat, ipassmt)
    if args.verbose:
        _err(f"info: {len(flat)} flat rules, {len(ipassmt)} interfaces, "
             f"certified in {time.perf_counter() - started:.3f}s")
    ok = True
    for iface, res in results.items():
        if res.certified:
            print(f"{iface}: CERTIFIED")
        else:
            ok = False
            v = res.first_violation
            where = str(v.origin) if v.origin else f"rule #{v.rule_index}"
            print(f"{iface}: FAIL at {where} — offending sources: "
                  f"{format_offending(v.offending.to_cidr_list())}")
        if args.verbose:
            _err(f"info: {iface}: potentially accepted sources: {res.final_allowed}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certify_access(args) -> int:
    try:
        src = parse_addr(args.src, args.width)
        dst = parse_addr(args.dst, args.width) if args.dst is not None else None
        packet = PacketPattern(args.in_iface, src, dst, args.proto.lower() if args.proto else None,
                               args.dport, args.state.upper())
    except (SpoofcertError, ValueError) as exc:
        raise _InputError(f"error:0: bad packet: {exc}") from exc
    flat = _load_flat(args, assume_new=False)
    if certify_access(flat, packet):
        print("DEFINITELY ACCEPTED")
        return EXIT_OK
    print("NOT CERTIFIABLE")
    return EXIT_FAIL


def cmd_dump_flat(args) -> int:
    for rule in _load_flat(args, args.assume_new):
        print(rule.to_spec())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spoofcert",
        description="Certify IP spoofing protection of iptables rulesets.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--ruleset", required=True, help="iptables-save output")
        sp.add_argument("--table", default="filter")
        sp.add_argument("--chain", default="FORWARD", help="built-in chain to analyse")
        sp.add_argument("--width", type=int, default=32, help=argparse.SUPPRESS)

    c = sub.add_parser("certify", help="certify spoofing protection per interface")
    common(c)
    c.add_argument("--ipassmt", required=True, help="interface address assignment file")
    c.add_argument("--no-new-assumption", action="store_true",
                   help="do not restrict the analysis to NEW packets")
    c.add_argument("--dump-flat", action="store_true", help="print the flattened ruleset first")
    c.add_argument("--verbose", "-v", action="store_true")
    c.set_defaults(func=cmd_certify)

    a = sub.add_parser("certify-access", help="check that a packet is definitely accepted")
    common(a)
    a.add_argument("--in-iface", required=True)
    a.add_argument("--src", required=True)
    a.add_argument("--dst")
    a.add_argument("--proto")
    a.add_argument("--dport", type=int)
    a.add_argument("--state", default="NEW", type=str.upper, choices=CT_STATES)
    a.set_defaults(func=cmd_certify_access)

    d = sub.add_parser("dump-flat", help="print the preprocessed ruleset")
    common(d)
    d.add_argument("--assume-new", action="store_true",
                   help="apply the NEW-state assumption before printing")
    d.set_defaults(func=cmd_dump_flat)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        _err(str(exc))
    except SpoofcertError as exc:
        _err(f"error:0: {exc}")
    except ValueError as exc:
        _err(f"error:0: {exc}")
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
