import json

from lib.invperm.utils import write_csv

from .. import suites
from ..cli import EXIT_FAILED, EXIT_OK, Command


class Verify(Command):
    FORMATS = ["text", "csv", "json"]

    def sort(self):
        return 6

    def name(self):
        return "verify"

    def help(self):
        return "Run acceptance suites; exits 1 if any check fails"

    def add_arguments(self, parser):
        parser.add_argument("--suite", choices=list(suites.SUITES) + ["all"], required=True)

    def run(self, args):
        context = suites.SuiteContext(
            seed=args.seed,
            streams=args.streams,
            exact_budget=args.exact_budget,
            progress=not args.no_progress,
        )
        results = suites.run_suites(args.suite, context)

        fmt = self.output_format(args)
        if fmt == "json":
            text = "".join(json.dumps(r.to_dict()) + "\n" for r in results)
        elif fmt == "csv":
            text = write_csv([r.to_dict() for r in results], ["suite", "check", "passed", "detail"])
        else:
            lines = [f"{'PASS' if r.passed else 'FAIL'} {r.suite}/{r.check}: {r.detail}" for r in results]
            failed = sum(1 for r in results if not r.passed)
            lines.append(f"{len(results) - failed}/{len(results)} checks passed")
            text = "\n".join(lines) + "\n"
        self.emit(args, text)
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
