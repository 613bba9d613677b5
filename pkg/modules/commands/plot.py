from lib.invperm import sampler
from lib.invperm.permcore import parse_permutation
from lib.invperm.plot import permutation_svg
from lib.invperm.rng import RngStream

from ..cli import EXIT_OK, Command, UsageError


class Plot(Command):
    FORMATS = ["svg"]

    def sort(self):
        return 7

    def name(self):
        return "plot"

    def help(self):
        return "SVG scatter of a permutation, given or sampled from (n, m)"

    def add_arguments(self, parser):
        parser.add_argument("--perm", help="Permutation text, e.g. 2341 or '3 1 2'", type=str, default=None)
        parser.add_argument("--n", type=int, default=None)
        parser.add_argument("--m", type=int, default=None)
        parser.add_argument("--sampler", choices=sampler.SAMPLER_METHODS, default="auto")

    def validate(self, args):
        super().validate(args)
        if args.perm is not None and (args.n is not None or args.m is not None):
            raise UsageError("give either --perm or --n/--m")
        if args.perm is None:
            self.require(args, "n", "m")

    def run(self, args):
        if args.perm is not None:
            p = parse_permutation(args.perm)
        else:
            rng = RngStream(args.seed or 0)
            p = sampler.sample_perms(args.n, args.m, 1, rng, args.sampler, self.exact_budget(args))[0]
        self.emit(args, permutation_svg(p))
        return EXIT_OK
