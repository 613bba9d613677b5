import json

from lib.invperm import qcount, sampler
from lib.invperm.config import ExperimentSpec
from lib.invperm.experiments import run_experiment
from lib.invperm.permcore import parse_permutation
from lib.invperm.utils import format_decimal, write_csv

from ..cli import EXIT_OK, Command, UsageError


class Prob(Command):
    FORMATS = ["text", "json", "csv"]

    def sort(self):
        return 4

    def name(self):
        return "prob"

    def help(self):
        return "Probability of a pattern or a gap inversion, exact or by Monte Carlo"

    def add_arguments(self, parser):
        parser.add_argument("kind", choices=["pattern", "gap"])
        parser.add_argument("--n", type=int, default=None)
        parser.add_argument("--m", type=int, default=None)
        parser.add_argument("--k", type=int, default=None)
        parser.add_argument("--tau", type=str, default=None)
        parser.add_argument("--j", help="Position (Monte Carlo only)", type=str, default="1")
        mode = parser.add_mutually_exclusive_group()
        mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
        mode.add_argument("--mc", dest="mode", action="store_const", const="mc")
        parser.add_argument("--samples", type=int, default=10_000)
        parser.add_argument("--sampler", choices=sampler.SAMPLER_METHODS, default="auto")

    def validate(self, args):
        super().validate(args)
        self.require(args, "n", "m")
        if args.kind == "pattern":
            self.require(args, "tau")
            if args.k is not None:
                raise UsageError("--k is implied by --tau for patterns")
        else:
            self.require(args, "k")
            if args.tau is not None:
                raise UsageError("--tau applies to patterns only")
        if args.samples < 1:
            raise UsageError("--samples must be >= 1")

    def run(self, args):
        if (args.mode or "exact") == "exact":
            return self.run_exact(args)
        return self.run_mc(args)

    def run_exact(self, args):
        qcount.check_budget(args.n, args.m, self.exact_budget(args))
        if args.kind == "pattern":
            result = qcount.exact_pattern_prob(args.n, args.m, parse_permutation(args.tau))
        else:
            result = qcount.exact_gap_prob(args.n, args.m, args.k)
        fmt = self.output_format(args)
        if fmt == "json":
            text = json.dumps(result.to_dict()) + "\n"
        elif fmt == "csv":
            text = write_csv([result.to_dict()], ["num", "den", "approx"])
        else:
            text = f"{result}\n"
        self.emit(args, text)
        return EXIT_OK

    def run_mc(self, args):
        values = dict(
            n=args.n,
            m=args.m,
            position=args.j,
            samples=args.samples,
            sampler=args.sampler,
            exact_budget=self.exact_budget(args),
        )
        if args.seed is not None:
            values["seed"] = args.seed
        if args.streams is not None:
            values["streams"] = args.streams
        if args.kind == "pattern":
            values.update(kind="pattern_census", census="single", tau=args.tau)
        else:
            values.update(kind="gap_sweep", k=args.k)
        report = run_experiment(ExperimentSpec.parse_obj(values), progress=not args.no_progress)
        row = report.rows[0]

        record = {
            "estimate": row.estimate,
            "trials": row.trials,
            "successes": row.successes,
            "ci_low": row.ci_low,
            "ci_high": row.ci_high,
            "approximate": row.approximate,
        }
        fmt = self.output_format(args)
        if fmt == "json":
            text = json.dumps(record) + "\n"
        elif fmt == "csv":
            text = write_csv([record], list(record))
        else:
            text = " ".join(f"{key}={format_decimal(value)}" for key, value in record.items()) + "\n"
        self.emit(args, text)
        return EXIT_OK
