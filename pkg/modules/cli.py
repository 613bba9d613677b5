import argparse
import importlib
import os
import sys
from typing import *

from pydantic import ValidationError

from lib.invperm import qcount
from lib.invperm.errors import DomainError, InvpermError
from lib.invperm.rng import MASK64
from lib.invperm.utils import logger, setup_logging, write_text

from . import cmd_opts
from .shared import ROOT_DIR

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class Command:
    COMMANDS_DIR = os.path.join(ROOT_DIR, "modules", "commands")
    FORMATS = ["text", "json"]

    def __init__(self, filepath: str) -> None:
        self.filepath = filepath

    def sort(self):
        return 1

    def name(self):
        return ""

    def help(self):
        return ""

    def add_arguments(self, parser: argparse.ArgumentParser):
        pass

    def validate(self, args: argparse.Namespace):
        """Reject bad flag combinations before any computation starts."""
        fmt = args.format or self.FORMATS[0]
        if fmt not in self.FORMATS:
            raise UsageError(f"{self.name()} supports --format {', '.join(self.FORMATS)}, not {fmt}")
        if args.streams is not None and args.streams < 1:
            raise UsageError("--streams must be >= 1")
        if args.seed is not None and not 0 <= args.seed <= MASK64:
            raise UsageError("--seed must lie in [0, 2**64)")
        if args.exact_budget is not None and args.exact_budget < 0:
            raise UsageError("--exact-budget must be >= 0")

    def run(self, args: argparse.Namespace) -> int:
        raise NotImplementedError

    # helpers shared by the commands

    def output_format(self, args: argparse.Namespace) -> str:
        return args.format or self.FORMATS[0]

    def exact_budget(self, args: argparse.Namespace) -> int:
        return qcount.EXACT_CELL_BUDGET if args.exact_budget is None else args.exact_budget

    def emit(self, args: argparse.Namespace, text: str):
        if args.out:
            write_text(text, args.out)
        else:
            sys.stdout.write(text)

    @staticmethod
    def require(args: argparse.Namespace, *names: str):
        missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
        if missing:
            raise UsageError(f"missing {', '.join(missing)}")


def load_commands() -> List[Command]:
    commands = []
    files = sorted(os.listdir(Command.COMMANDS_DIR))

    for file in files:
        if not file.endswith(".py") or file.startswith("_"):
            continue
        module_name = file[:-3]
        module = importlib.import_module(f"modules.commands.{module_name}")
        attrs = module.__dict__
        CommandClass = [
            x
            for x in attrs.values()
            if type(x) == type and issubclass(x, Command) and not x == Command
        ]
        if len(CommandClass) > 0:
            commands.append((os.path.join(Command.COMMANDS_DIR, file), CommandClass[0]))

    return sorted([CommandClass(path) for path, CommandClass in commands], key=lambda x: x.sort())


def main(argv: Optional[List[str]] = None) -> int:
    commands = load_commands()
    parser = cmd_opts.build_parser(commands)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    setup_logging(args.log_level)
    command = next(c for c in commands if c.name() == args.command)
    try:
        command.validate(args)
        return command.run(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ValidationError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvpermError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
