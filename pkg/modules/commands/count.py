import json

from lib.invperm import qcount

from ..cli import EXIT_OK, Command


class Count(Command):
    def sort(self):
        return 1

    def name(self):
        return "count"

    def help(self):
        return "Exact counts: mahonian, weakcomp, restricted, suffix, prefix, gap"

    def add_arguments(self, parser):
        parser.add_argument("kind", choices=qcount.COUNT_KINDS)
        for name in ("n", "m", "k", "ell", "t", "s", "r"):
            parser.add_argument(f"--{name}", type=int, default=None)

    def validate(self, args):
        super().validate(args)
        required = {
            "mahonian": ("n", "m"),
            "weakcomp": ("t", "s"),
            "restricted": ("t", "s", "r"),
            "suffix": ("t", "s", "r"),
            "prefix": ("n", "m", "k", "ell"),
            "gap": ("n", "m", "k"),
        }[args.kind]
        self.require(args, *required)

    def run(self, args):
        query = qcount.CountQuery(n=args.n, m=args.m, k=args.k, ell=args.ell, t=args.t, s=args.s, r=args.r)
        if args.kind in ("mahonian", "prefix", "gap"):
            qcount.check_budget(args.n, max(args.m, 0), self.exact_budget(args))
        value = qcount.count(args.kind, query)
        values = list(value) if isinstance(value, tuple) else [value]

        if self.output_format(args) == "json":
            record = {"kind": args.kind, **query.dict(exclude_none=True), "value": [str(v) for v in values]}
            text = json.dumps(record) + "\n"
        else:
            text = " ".join(str(v) for v in values) + "\n"
        self.emit(args, text)
        return EXIT_OK
