import json

from lib.invperm import asymptotics
from lib.invperm.permcore import parse_permutation
from lib.invperm.utils import format_decimal

from ..cli import EXIT_OK, Command, UsageError


class Predict(Command):
    def sort(self):
        return 2

    def name(self):
        return "predict"

    def help(self):
        return "Evaluate limit probabilities and tail bounds"

    def add_arguments(self, parser):
        parser.add_argument("kind", choices=asymptotics.PREDICT_KINDS)
        for name in ("alpha", "rho", "beta", "theta"):
            parser.add_argument(f"--{name}", type=float, default=None)
        parser.add_argument("--eps", dest="epsilon", type=float, default=None)
        for name in ("x", "y", "delta", "k", "n", "m", "t", "s"):
            parser.add_argument(f"--{name}", type=int, default=None)
        parser.add_argument("--tau", help="Pattern; sets rho and k", type=str, default=None)
        parser.add_argument(
            "--alpha-rule",
            help="Scale used when alpha is derived from --n/--m",
            choices=asymptotics.ALPHA_RULES,
            default="finite",
        )

    def validate(self, args):
        super().validate(args)
        if args.tau is not None and (args.rho is not None or args.k is not None):
            raise UsageError("--tau already fixes rho and k")
        if args.alpha is not None and args.m is not None:
            raise UsageError("give either --alpha or --n/--m, not both")
        if args.m is not None and args.n is None:
            raise UsageError("--m needs --n")
        if args.m is not None and args.k is None and args.tau is None:
            raise UsageError("deriving alpha from --n/--m needs --k or --tau")

    def run(self, args):
        rho, k = args.rho, args.k
        if args.tau is not None:
            tau = parse_permutation(args.tau)
            rho, k = asymptotics.pattern_density(tau), tau.n

        alpha = args.alpha
        if alpha is None and args.m is not None:
            if args.kind == "pattern":
                alpha = asymptotics.pattern_alpha(args.n, args.m, k, args.alpha_rule)
            elif args.kind == "gap":
                alpha = asymptotics.gap_alpha(args.n, args.m, args.k, args.alpha_rule)

        params = asymptotics.RegimeParams(
            alpha=alpha, rho=rho, beta=args.beta, theta=args.theta, epsilon=args.epsilon,
            x=args.x, y=args.y, delta=args.delta,
        )
        result = asymptotics.predict(args.kind, params, k=k, n=args.n, t=args.t, s=args.s)

        if self.output_format(args) == "json":
            text = json.dumps({"kind": args.kind, **result}) + "\n"
        else:
            text = "".join(f"{key}={format_decimal(value)}\n" for key, value in result.items())
        self.emit(args, text)
        return EXIT_OK
