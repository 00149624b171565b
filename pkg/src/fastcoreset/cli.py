"""Command-line entry point: ``fastcoreset {gen,coreset,eval,bench,stream}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .core import DegenerateInputError, DimensionMismatchError, distortion
from .datagen import DATASET_KINDS, DatasetSpec, generate
from .harness import PRESETS, ExperimentSpec, default_threads, merge_reports, run_experiment, run_preset
from .io import DataFormatError, load_coreset, load_dataset, save_coreset, write_dataset
from .samplers import DEFAULT_EPSILON, SAMPLER_KINDS, WEIGHT_MODES, SamplerSpec, run_sampler
from .streaming import MergeTreePlan, stream_coreset

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p, suppress: bool):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, **({"default": 0} if not suppress else kw), help="root random seed")
    p.add_argument("--threads", type=int, **({"default": None} if not suppress else kw),
                   help="worker threads (default from FASTCORESET_THREADS or 1)")
    p.add_argument("--format", choices=("csv", "binary"), **({"default": None} if not suppress else kw),
                   help="file format (default: by extension)")
    p.add_argument("--weight-mode", choices=WEIGHT_MODES, **({"default": "normalized"} if not suppress else kw))
    p.add_argument("-v", "--verbose", action="store_true", **kw)


def _sampler_flags(p):
    p.add_argument("--kind", choices=SAMPLER_KINDS, default="fast-coreset")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--z", type=int, choices=(1, 2), default=2)
    size = p.add_mutually_exclusive_group()
    size.add_argument("--m", type=int, help="coreset size")
    size.add_argument("--m-scalar", type=int, default=40, help="coreset size as a multiple of k")
    p.add_argument("--j", type=int, help="centers of the welterweight solution")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--no-dimred", action="store_true", help="fast-coreset: skip the projection")
    p.add_argument("--no-spread-reduction", action="store_true", help="fast-coreset: skip spread reduction")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fastcoreset", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset")
    g.add_argument("output")
    g.add_argument("--kind", choices=DATASET_KINDS, required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--c", type=float, help="c-outlier: outliers; geometric: size multiplier")
    g.add_argument("--r", type=float, help="geometric: decay; hardness: column depth")
    g.add_argument("--kappa", type=int)
    g.add_argument("--gamma", type=float)
    g.add_argument("--k", type=int, help="geometric / benchmark cluster count")
    g.add_argument("--c1", type=float)
    g.add_argument("--c2", type=float)
    g.add_argument("--n-prime", type=int)
    g.add_argument("--noise", type=float, help="uniform noise amplitude")

    c = sub.add_parser("coreset", parents=[common], help="build a coreset of a dataset")
    c.add_argument("dataset")
    c.add_argument("output")
    _sampler_flags(c)
    c.add_argument("--report", help="write the run report as JSON here")

    e = sub.add_parser("eval", parents=[common], help="distortion of a coreset")
    e.add_argument("dataset")
    e.add_argument("coreset")
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--z", type=int, choices=(1, 2), default=2)

    b = sub.add_parser("bench", parents=[common], help="run an experiment grid")
    b.add_argument("spec", nargs="?", help="JSON experiment spec")
    presets = b.add_mutually_exclusive_group()
    for name in PRESETS:
        presets.add_argument(f"--{name}", dest="preset", action="store_const", const=name)
    b.add_argument("--seeds", type=int, help="number of seeds for presets")
    b.add_argument("--n", type=int, help="dataset size for presets")
    b.add_argument("--out", default="bench", help="report prefix (writes .json and .csv)")

    s = sub.add_parser("stream", parents=[common], help="merge-&-reduce coreset over blocks")
    s.add_argument("dataset")
    s.add_argument("output")
    _sampler_flags(s)
    blocks = s.add_mutually_exclusive_group()
    blocks.add_argument("--blocks", type=int, default=None)
    blocks.add_argument("--block-size", type=int, default=None)
    return parser


def _sampler_from(args) -> SamplerSpec:
    if args.j is not None and args.kind != "welterweight":
        raise UsageError("--j applies to --kind welterweight only")
    opts = {}
    if args.kind == "fast-coreset":
        opts = {"use_dimred": not args.no_dimred, "use_spread_reduction": not args.no_spread_reduction}
    elif args.no_dimred or args.no_spread_reduction:
        raise UsageError("--no-dimred / --no-spread-reduction apply to --kind fast-coreset only")
    m = args.m if args.m is not None else args.m_scalar * args.k
    try:
        return SamplerSpec(args.kind, m, args.epsilon, args.seed, args.weight_mode, j=args.j, options=opts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_gen(args):
    params = {}
    for key in ("c", "r", "kappa", "gamma", "k", "c1", "c2"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    if args.n_prime is not None:
        params["n_prime"] = args.n_prime
    if args.kind in ("c-outlier", "gaussian-mixture", "hardness") and args.n is None:
        raise UsageError(f"--n is required for --kind {args.kind}")
    try:
        spec = DatasetSpec(args.kind, args.n, args.d, params, args.noise, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    X = generate(spec)
    write_dataset(X, args.output, args.format)
    print(f"wrote {X.shape[0]} x {X.shape[1]} points to {args.output}")


def _cmd_coreset(args):
    sampler = _sampler_from(args)
    X = load_dataset(args.dataset, args.format)
    coreset, report = run_sampler(X, sampler, args.k, args.z)
    save_coreset(coreset, args.output, args.format)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    print(f"wrote coreset of {coreset.m} points (total weight {coreset.total_weight:.6g}) to {args.output}")


def _cmd_eval(args):
    X = load_dataset(args.dataset, args.format)
    coreset = load_coreset(args.coreset, args.format)
    print(repr(distortion(X, coreset, args.k, args.z, solver_seed=args.seed)))


def _cmd_bench(args):
    if (args.spec is None) == (args.preset is None):
        raise UsageError("give either an experiment spec file or one preset flag")
    if args.spec is not None:
        try:
            spec = ExperimentSpec.from_file(args.spec)
        except (TypeError, ValueError) as exc:
            raise DataFormatError(f"{args.spec}: {exc}") from None
        report = merge_reports(spec.name, [run_experiment(spec, args.threads)])
    else:
        seeds = list(range(args.seeds)) if args.seeds else None
        overrides = {"n": args.n} if args.n else {}
        report = run_preset(args.preset, seeds=seeds, threads=args.threads, **overrides)
    jpath, cpath = report.write(args.out)
    print(f"{len(report.cells)} cells; wrote {jpath} and {cpath}")


def _cmd_stream(args):
    sampler = _sampler_from(args)
    X = load_dataset(args.dataset, args.format)
    plan = MergeTreePlan(sampler, args.k, args.z, block_size=args.block_size, blocks=args.blocks)
    coreset = stream_coreset(plan.split(X), plan)
    save_coreset(coreset, args.output, args.format)
    print(f"wrote streamed coreset of {coreset.m} points to {args.output}")


COMMANDS = {"gen": _cmd_gen, "coreset": _cmd_coreset, "eval": _cmd_eval, "bench": _cmd_bench, "stream": _cmd_stream}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is None:
        args.threads = default_threads()
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fastcoreset: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError, DegenerateInputError, DimensionMismatchError, ValueError) as exc:
        print(f"fastcoreset: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
