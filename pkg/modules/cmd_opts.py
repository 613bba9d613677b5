import argparse
from typing import *

from lib.invperm.config import VERSION

FORMATS = ["text", "csv", "json", "svg"]


def common_parser() -> argparse.ArgumentParser:
    # flags every subcommand accepts
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--log-level",
        help="Logging level for stderr",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    parser.add_argument(
        "--exact-budget",
        help="Largest n*m handled by exact big-integer tables",
        type=int,
        default=None,
    )
    parser.add_argument("--no-progress", help="Hide progress bars", action="store_true")
    parser.add_argument("--seed", help="Random seed", type=int, default=None)
    parser.add_argument("--streams", help="Number of worker processes", type=int, default=None)
    parser.add_argument("--format", help="Output format", type=str, default=None, choices=FORMATS)
    parser.add_argument("--out", help="Write output to this path instead of stdout", type=str, default=None)
    parser.add_argument("--spec", help="Experiment spec file (key=value lines)", type=str, default=None)
    return parser


def build_parser(commands: List[Any]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invperm",
        description="Counting, sampling and limit checks for permutations with a fixed number of inversions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    common = common_parser()
    for command in commands:
        sub = subparsers.add_parser(command.name(), help=command.help(), parents=[common])
        command.add_arguments(sub)
    return parser
