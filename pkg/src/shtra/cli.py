"""``trc`` command line: mask, synth, complete, eval.

Exit codes: 0 success (``complete``: converged), 2 ``complete`` stopped at
maxiter, 1 usage or I/O error.
"""

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import io
from .metrics import CSV_FIELDS, evaluate
from .solver import PENALTY_RULES, SolverConfig, solve
from .tensor import ObservationMask, frobenius_norm, make_mask
from .tr import random_chain, tr_reconstruct

log = logging.getLogger("shtra.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAXITER = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _ranks(text):
    values = _ints(text)
    return values[0] if len(values) == 1 else values


def _bool(text):
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# config-file key -> (SolverConfig field, parser)
CONFIG_KEYS = {
    "lambda": ("lam", float),
    "beta": ("beta", _floats),
    "w": ("weights", _floats),
    "rank": ("tr_ranks", _ranks),
    "maxiter": ("maxiter", int),
    "eps": ("epsilon", float),
    "kappa": ("kappa", float),
    "beta_cap": ("beta_cap", float),
    "eta": ("eta", _floats),
    "penalty_rule": ("penalty_rule", str),
    "prune": ("prune", _bool),
    "prune_tol": ("prune_tol", float),
    "prune_interval": ("prune_interval", int),
    "init_seed": ("seed", int),
    "threads": ("threads", int),
}


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            field, parse = CONFIG_KEYS[key]
            overrides[field] = parse(value)
    return overrides


def _add_solver_flags(p):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--beta", type=_floats, help="b1,b2,b3")
    p.add_argument("--w", type=_floats, help="w1,...,wN")
    p.add_argument("--rank", type=_ranks, help="R or R1,...,RN")
    p.add_argument("--maxiter", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta-cap", type=float)
    p.add_argument("--eta", type=_floats, help="eta1,eta2")
    p.add_argument("--penalty-rule", choices=PENALTY_RULES)
    p.add_argument("--prune-tol", type=float)
    p.add_argument("--prune-interval", type=int)
    p.add_argument("--no-prune", dest="prune", action="store_const", const=False)
    p.add_argument("--init-seed", type=int, help="seed for the random initial cores")
    p.add_argument("--beta2-off", action="store_true", help="disable the TV path (needs --lambda 0)")
    p.add_argument("--threads", type=int)


def build_config(args):
    overrides = read_config_file(args.config) if args.config else {}
    for key, (field, _) in CONFIG_KEYS.items():
        value = getattr(args, key, None)
        if value is not None:
            overrides[field] = value
    config = replace(SolverConfig(), **overrides)
    if args.beta2_off:
        if config.lam != 0:
            raise UsageError("--beta2-off requires --lambda 0")
        b1, _, b3 = config.beta
        config = replace(config, use_tv=False, beta=(b1, 0.0, b3))
    return config


def _mask_from_args(args, shape):
    if getattr(args, "mask", None):
        observed = io.load_mask_array(args.mask)
        if observed.shape != tuple(shape):
            raise UsageError(f"mask shape {observed.shape} does not match input {shape}")
        return ObservationMask(observed, observed.mean(), None)
    if args.sr is None:
        raise UsageError("need --mask or --sr")
    return make_mask(shape, args.sr, args.seed)


def cmd_mask(args):
    if args.input:
        shape = io.load_any(args.input).shape
    elif args.dims:
        shape = args.dims
    else:
        raise UsageError("need --dims or --input")
    mask = make_mask(shape, args.sr, args.seed)
    io.save_mask(args.out, mask)
    print(mask.count)
    return EXIT_OK


def cmd_synth(args):
    chain = random_chain(args.dims, args.rank, args.seed)
    if args.chain_out:
        io.save_chain(args.chain_out, chain)
    full = tr_reconstruct(chain)
    io.save_tensor(args.out, full / frobenius_norm(full))
    return EXIT_OK


def cmd_complete(args):
    config = build_config(args)
    data = io.load_any(args.input)
    if not np.all(np.isfinite(data)):
        raise UsageError(f"{args.input}: non-finite values")
    mask = _mask_from_args(args, data.shape)
    is_image = str(args.input).lower().endswith(".ppm")
    scale = 255.0 if is_image else float(np.max(np.abs(data)))
    if not args.normalize or scale == 0:
        scale = 1.0
    if config.weights is None:
        config = replace(config, weights=config.weights_for(data.ndim))
    result = solve(data / scale, mask, config)
    recovered = result.x * scale
    if str(args.out).lower().endswith(".ppm"):
        io.save_image(recovered, args.out)
    else:
        io.save_tensor(args.out, recovered)
    if args.history:
        io.write_history_csv(args.history, result.history)
    peak = args.peak
    if peak is None:
        peak = 255.0 if is_image else float(np.max(np.abs(data)))
    if args.metrics and np.any(recovered):
        io.write_metrics_csv(args.metrics, evaluate(data, recovered, peak))
    last = result.history[-1]
    print(
        f"iterations={last.iter} relchange={last.relchange:.3e} "
        f"ranks={','.join(map(str, last.ranks))} converged={result.converged}"
    )
    return EXIT_OK if result.converged else EXIT_MAXITER


def cmd_eval(args):
    ref = io.load_any(args.ref)
    est = io.load_any(args.est)
    report = evaluate(ref, est, args.peak)
    print(",".join(CSV_FIELDS))
    print(report.csv_row())
    for flag in report.flags:
        print(f"# {flag}", file=sys.stderr)
    if args.out:
        io.write_metrics_csv(args.out, report)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="trc", description="Hierarchical tensor-ring completion")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mask", help="write a random observation mask")
    p.add_argument("--dims", type=_ints)
    p.add_argument("--input")
    p.add_argument("--sr", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("synth", help="write a unit-norm random tensor-ring tensor")
    p.add_argument("--dims", type=_ints, required=True)
    p.add_argument("--rank", type=_ranks, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--chain-out", help="also store the cores in this directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("complete", help="mask an input and recover it")
    p.add_argument("--input", required=True)
    p.add_argument("--mask")
    p.add_argument("--sr", type=float)
    p.add_argument("--seed", type=int, default=0, help="mask seed")
    p.add_argument("--out", required=True)
    p.add_argument("--history")
    p.add_argument("--metrics")
    p.add_argument("--peak", type=float)
    p.add_argument(
        "--normalize",
        type=_bool,
        default=True,
        help="solve in [0,1] units: images / 255, tensors / max|x| (default true)",
    )
    _add_solver_flags(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("eval", help="compare a recovered tensor with a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--peak", type=float, default=255.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"trc: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
