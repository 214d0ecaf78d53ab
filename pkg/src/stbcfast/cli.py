"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 oracle failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import ber, bench, complexity
from .channel import db_to_linear
from .scenario import ORACLE_TOLERANCE, ScenarioError, run_scenario

log = logging.getLogger("stbcfast")

EXIT_OK, EXIT_INVALID, EXIT_ORACLE = 0, 2, 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_scenario(args) -> int:
    overrides = {
        "seed": args.seed,
        "mode": args.mode,
        "rho_db": args.rho_db,
        "antennas": args.antennas,
        "verify_every": args.verify_every,
    }
    out_csv = _out_dir(args) / f"{Path(args.file).stem}_events.csv"
    try:
        report = run_scenario(args.file, out_csv, overrides)
    except ScenarioError as exc:
        log.error("invalid scenario: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("cannot read scenario: %s", exc)
        return EXIT_INVALID
    n_checked = sum(r.verified for r in report.records)
    print(f"events={len(report.records)} verified={n_checked} "
          f"max_error={report.max_error:.3e} mean_speedup={report.mean_speedup:.2f} "
          f"final_users={len(report.final_users)} csv={out_csv}")
    bad = report.first_failure
    if bad is not None:
        log.error("oracle failure at event %d (%s %r): error %.3e (tolerance %.0e), decisions_match=%s",
                  bad.index, bad.event, bad.user, bad.oracle_error, ORACLE_TOLERANCE, bad.decisions_match)
        return EXIT_ORACLE
    return EXIT_OK


def cmd_tables(args) -> int:
    out = _out_dir(args)
    for scenario in complexity.SCENARIOS:
        reports = complexity.reduction_table(scenario, args.users, csi_convention=args.csi_convention)
        text = complexity.write_csv(reports, out / f"table_{scenario}.csv")
        print(f"# {scenario}")
        print(text, end="")
    return EXIT_OK


def cmd_ber(args) -> int:
    points = ber.run_ber(
        antennas=args.antennas or 100,
        users=args.users,
        mode=args.mode or "zf",
        cons=args.constellation,
        snr_db=args.snr_db,
        trials=args.trials,
        blocks=args.blocks,
        seed=args.seed or 0,
        fast_state=args.fast_state,
        bits=args.bits,
        noiseless=args.noiseless,
    )
    suffix = "_fast" if args.fast_state else ""
    text = ber.write_csv(points, _out_dir(args) / f"ber{suffix}.csv")
    print(text, end="")
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = bench.run_bench(
        antennas=args.antennas or 100,
        M_values=args.users,
        scenario=args.scenario,
        repetitions=args.repetitions,
        mode=args.mode or "zf",
        rho=db_to_linear(args.rho_db if args.rho_db is not None else 10.0),
        seed=args.seed or 0,
    )
    text = bench.write_csv(rows, _out_dir(args) / f"bench_{args.scenario}.csv")
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--mode", choices=("zf", "mmse"), default=None, help="decoder (default zf)")
    common.add_argument("--rho-db", type=float, default=None, help="SNR in dB (default 10)")
    common.add_argument("--antennas", type=int, default=None, help="base-station antennas N (default 100)")
    common.add_argument("--out-dir", default=".", help="directory for CSV outputs")

    ap = argparse.ArgumentParser(
        prog="stbcfast",
        description="STBC massive-MIMO uplink decoding with incremental ZF/MMSE inverse updates.",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", parents=[common], help="replay a JSONL scenario with oracle checks")
    p.add_argument("file")
    p.add_argument("--verify-every", type=int, default=None)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("tables", parents=[common], help="operation-count tables")
    p.add_argument("--users", type=_int_list, default=list(complexity.REFERENCE_USER_COUNTS),
                   help="comma-separated user counts M")
    p.add_argument("--csi-convention", choices=("tabulated", "closed_form"), default="tabulated")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("ber", parents=[common], help="Monte-Carlo error rate vs SNR")
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--constellation", choices=("qpsk", "16qam"), default="qpsk")
    p.add_argument("--snr-db", type=_float_list, default=[0.0, 5.0, 10.0, 15.0, 20.0])
    p.add_argument("--trials", type=int, default=100, help="channel realizations per SNR")
    p.add_argument("--blocks", type=int, default=10, help="code blocks per realization")
    p.add_argument("--fast-state", action="store_true",
                   help="decode with a state reached through random add/remove/CSI events")
    p.add_argument("--bits", action="store_true", help="count bit errors (Gray labels)")
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("bench", parents=[common], help="time fast updates against rebuilds")
    p.add_argument("--users", type=_int_list, default=[10, 16, 24, 30])
    p.add_argument("--scenario", choices=complexity.SCENARIOS, default="remove")
    p.add_argument("--repetitions", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
