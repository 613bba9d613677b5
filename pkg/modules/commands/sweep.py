from lib.invperm.config import load_spec
from lib.invperm.experiments import run_experiment
from lib.invperm.utils import logger

from ..cli import EXIT_FAILED, EXIT_OK, Command, UsageError


class Sweep(Command):
    FORMATS = ["csv", "json"]

    def sort(self):
        return 5

    def name(self):
        return "sweep"

    def help(self):
        return "Run one experiment spec and write its report"

    def add_arguments(self, parser):
        parser.add_argument("--samples", type=int, default=None)

    def validate(self, args):
        super().validate(args)
        if args.spec is None:
            raise UsageError("sweep needs --spec PATH")

    def run(self, args):
        spec = load_spec(
            args.spec,
            seed=args.seed,
            streams=args.streams,
            samples=args.samples,
            exact_budget=args.exact_budget,
        )
        report = run_experiment(spec, progress=not args.no_progress)
        logger.info(f"sampler: {report.sampler}, wall time {report.wall_time:.1f}s")

        if self.output_format(args) == "json":
            text = report.to_jsonl()
        else:
            text = report.to_csv()
        self.emit(args, text)
        if args.out:
            report.to_meta_json(f"{args.out}.meta.json")
        return EXIT_OK if report.passed else EXIT_FAILED
