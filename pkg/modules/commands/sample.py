import json

from lib.invperm import sampler
from lib.invperm.permcore import format_permutation, inv_count
from lib.invperm.plot import permutation_svg
from lib.invperm.rng import RngStream
from lib.invperm.utils import write_csv

from ..cli import EXIT_OK, Command, UsageError


class Sample(Command):
    FORMATS = ["text", "json", "csv", "svg"]

    def sort(self):
        return 3

    def name(self):
        return "sample"

    def help(self):
        return "Uniform random permutations with n points and m inversions"

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, default=None)
        parser.add_argument("--m", type=int, default=None)
        parser.add_argument("--count", type=int, default=1)
        parser.add_argument("--sampler", choices=sampler.SAMPLER_METHODS, default="auto")

    def validate(self, args):
        super().validate(args)
        self.require(args, "n", "m")
        if args.count < 1:
            raise UsageError("--count must be >= 1")

    def run(self, args):
        rng = RngStream(args.seed or 0)
        fmt = self.output_format(args)
        count = 1 if fmt == "svg" else args.count
        perms = sampler.sample_perms(args.n, args.m, count, rng, args.sampler, self.exact_budget(args))

        if fmt == "svg":
            text = permutation_svg(perms[0])
        elif fmt == "json":
            text = json.dumps([{"perm": list(p.values), "inv": inv_count(p)} for p in perms]) + "\n"
        elif fmt == "csv":
            rows = [{"index": i, "inv": inv_count(p), "perm": format_permutation(p)} for i, p in enumerate(perms)]
            text = write_csv(rows, ["index", "inv", "perm"])
        else:
            text = "".join(format_permutation(p) + "\n" for p in perms)
        self.emit(args, text)
        return EXIT_OK
