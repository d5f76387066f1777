"""Command line: convert a checkpoint into a .nncw weight file.

    nncw-convert convert --ckpt model.pt --config 12.5fps-1.1kbps-causal \
        --rules rules/flat-statedict.rules --out model.nncw [--report]

Rules files are data (see rules/README in this package's repository):
published checkpoints vary in tensor naming, so mappings ship as editable
text rather than code.
"""

from __future__ import annotations

import argparse
import sys

from .ckpt import CheckpointError
from .convert import ConvertError, convert
from .plan import PlanError
from .rules import RuleError, load_rules


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nncw-convert")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("convert",
                        help="map a checkpoint onto a codec config and "
                             "write .nncw")
    sp.add_argument("--ckpt", required=True,
                    help="checkpoint file (.npz natively; .pt/.ckpt/.bin "
                         "via torch)")
    sp.add_argument("--config", required=True,
                    help="codec config name or file (resolved by the codec "
                         "CLI)")
    sp.add_argument("--rules", required=True, help="name-mapping rules file")
    sp.add_argument("--out", help="output .nncw path (omit with --report)")
    sp.add_argument("--report", action="store_true",
                    help="print the mapping table; with no --out, nothing "
                         "is written")
    sp.add_argument("--codec-cli", default="nanocodec",
                    help="codec CLI executable used to fetch the shape plan")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not args.out and not args.report:
        print("error: pass --out to write a file and/or --report for a "
              "dry run", file=sys.stderr)
        return 2
    try:
        rules = load_rules(args.rules)
        report = convert(args.ckpt, args.config, rules, args.out,
                         codec_cli=args.codec_cli)
    except (ConvertError, CheckpointError, PlanError, RuleError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.report:
        for line in report.lines():
            print(line)
    else:
        print(f"mapped={len(report.mapped)} "
              f"unmapped={len(report.unmapped_sources)} out={report.out_path}")
    for name in report.downcast:
        print(f"warning: {name} downcast to float32", file=sys.stderr)
    for name in report.unmapped_sources:
        print(f"warning: unmapped source tensor {name!r}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
