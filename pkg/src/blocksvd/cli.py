"""Command-line interface: ``blocksvd synth | svd | evaluate``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import BlockSvdError, SizeLimitError
from .metrics import evaluate_sweep, format_eval_csv
from .pipeline import BlockResultRecord, run_pipeline, write_block_record
from .repair import RepairMethod
from .sparse import load_matrix_market, save_matrix_market, synth_bipartite


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _density(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"density must lie in (0, 1], got {value}")
    return value


def _method(text):
    try:
        return RepairMethod.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_input(parser):
    parser.add_argument("--in", dest="input", type=Path, help="Matrix Market input file")
    parser.add_argument("--rows", type=_positive_int, help="synthesize an input with this many rows")
    parser.add_argument("--cols", type=_positive_int, help="synthesized column count")
    parser.add_argument("--density", type=_density, help="synthesized edge density")
    parser.add_argument("--synth-seed", type=int, help="seed for the synthesized input (defaults to --seed)")


def _add_run_options(parser):
    parser.add_argument("--method", type=_method, default=RepairMethod.NONE,
                        help="random, neighbor, neighbor-random or none (default)")
    parser.add_argument("--keep", type=_positive_int, default=None,
                        help="components kept per block (default: all)")
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--workers", type=_positive_int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="blocksvd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a random bipartite matrix in Matrix Market format")
    p.add_argument("--rows", type=_positive_int, required=True)
    p.add_argument("--cols", type=_positive_int, required=True)
    p.add_argument("--density", type=_density, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("svd", help="singular values and left vectors via the block proxy")
    _add_input(p)
    p.add_argument("--blocks", type=_positive_int, required=True)
    _add_run_options(p)
    p.add_argument("--out-dir", type=Path, default=Path("."),
                   help="directory for sigma.txt, u.rec and repair.log")

    p = sub.add_parser("evaluate", help="compare against the dense oracle over a sweep of block counts")
    _add_input(p)
    p.add_argument("--blocks", type=_positive_int, nargs="*", default=[],
                   help="block counts to sweep")
    _add_run_options(p)
    p.add_argument("--out", type=Path, default=None, help="CSV destination (default: stdout)")
    return parser


def _load_input(parser, args):
    synth = (args.rows, args.cols, args.density)
    if args.input is not None:
        if any(v is not None for v in synth):
            parser.error("use either --in or --rows/--cols/--density, not both")
        return load_matrix_market(args.input)
    if any(v is None for v in synth):
        parser.error("an input is required: --in PATH or all of --rows, --cols, --density")
    seed = args.seed if args.synth_seed is None else args.synth_seed
    return synth_bipartite(args.rows, args.cols, args.density, seed)


def cmd_synth(args):
    a = synth_bipartite(args.rows, args.cols, args.density, args.seed)
    save_matrix_market(a, args.out)
    print(a.nnz)


def cmd_svd(a, args):
    result = run_pipeline(a, args.blocks, args.method, keep=args.keep, seed=args.seed, workers=args.workers)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "sigma.txt").write_text("".join(f"{s!r}\n" for s in result.svd.sigma.tolist()))
    write_block_record(BlockResultRecord(0, result.svd.U), out / "u.rec")
    (out / "repair.log").write_text(result.report.to_log())
    print(f"{len(result.svd.sigma)} singular values, {len(result.report.added_edges)} edges added -> {out}")


def cmd_evaluate(a, args):
    rows = evaluate_sweep(a, args.blocks, args.method, args.seed, keep=args.keep, workers=args.workers)
    text = format_eval_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            cmd_synth(args)
            return 0
        a = _load_input(parser, args)
        if args.command == "svd":
            cmd_svd(a, args)
        else:
            cmd_evaluate(a, args)
    except (BlockSvdError, OSError) as exc:
        print(f"blocksvd: error: {exc}", file=sys.stderr)
        if isinstance(exc, SizeLimitError):
            print("blocksvd: the dense oracle needs a desk-scale input; try `blocksvd synth` with fewer rows/cols",
                  file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
