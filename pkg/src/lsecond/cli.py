"""``lse-cond`` command-line interface.

Exit codes: 0 success, 2 I/O or malformed input, 3 violated rank or
structure assumptions, 4 non-convergence, 5 bad flags or out-of-domain
parameters.  Errors are printed to stdout as ``{"error": {"kind", "message"}}``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, harness, mmio
from .condition import (
    cond_exact_closed,
    cond_exact_gsvd,
    cond_exact_kron,
    cond_lls_closed,
    cond_lls_svd,
    cond_upper_bound,
)
from .core import ConditionWeights, solve_lse
from .errors import (
    DomainError,
    GeneratorError,
    LseError,
    OracleTooLargeError,
    RankDeficiencyError,
    ShapeError,
    StructureViolationError,
)
from .estimators import estimate_condition_pce, ssce_estimate
from .structured import StructureKind, cond_structured

EXIT_OK, EXIT_IO, EXIT_ASSUMPTIONS, EXIT_CONVERGENCE, EXIT_FLAGS = 0, 2, 3, 4, 5


class UsageError(Exception):
    kind = "flags"


class ConvergenceError(Exception):
    kind = "convergence"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    inputs: list[str]
    params: dict
    seed: int | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Ctx:
    args: argparse.Namespace
    manifest: RunManifest
    extra: dict = field(default_factory=dict)


def _exit_code(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, (OSError, ShapeError)):
        return EXIT_IO, "io" if isinstance(exc, OSError) else exc.kind
    if isinstance(exc, (RankDeficiencyError, StructureViolationError, GeneratorError)):
        return EXIT_ASSUMPTIONS, exc.kind
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE, exc.kind
    if isinstance(exc, (UsageError, DomainError, OracleTooLargeError)):
        return EXIT_FLAGS, exc.kind
    if isinstance(exc, ValueError):
        # malformed file contents surface as ValueError from the readers
        return EXIT_IO, "io"
    if isinstance(exc, LseError):
        return EXIT_FLAGS, exc.kind
    raise exc


def _parse_weights(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--weights expects four comma-separated numbers, got {text!r}")
    if len(vals) != 4:
        raise UsageError(f"--weights expects four comma-separated numbers, got {text!r}")
    return vals


def _parse_L(text: str, n: int):
    if text in (None, "identity", "I"):
        return None
    if text.startswith("e") and text[1:].isdigit():
        i = int(text[1:])
        if not 1 <= i <= n:
            raise UsageError(f"--L {text}: index must lie in 1..{n}")
        L = np.zeros((n, 1))
        L[i - 1, 0] = 1.0
        return L
    return mmio.read_matrix(text)


def _weights(args, n: int) -> ConditionWeights:
    aA, aB, ab, ad = _parse_weights(args.weights)
    return ConditionWeights(aA, aB, ab, ad, _parse_L(args.L, n))


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**63))
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _emit(ctx: _Ctx, payload: dict) -> None:
    payload = dict(payload)
    payload["manifest"] = ctx.manifest.to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if ctx.args.out:
        out = Path(ctx.args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        mmio.write_text_atomic(out, text)
    else:
        sys.stdout.write(text)


def cmd_solve(ctx: _Ctx) -> int:
    args = ctx.args
    problem = mmio.read_problem(args.problem)
    sol = solve_lse(problem)
    outdir = Path(args.out) if args.out else Path(".")
    outdir.mkdir(parents=True, exist_ok=True)
    mmio.write_matrix(outdir / "x.mtx", sol.x)
    mmio.write_matrix(outdir / "r.mtx", sol.r)
    summary = {
        "m": problem.m, "n": problem.n, "s": problem.s, "t": sol.factors.t,
        "x_norm": float(np.linalg.norm(sol.x)), "r_norm": float(np.linalg.norm(sol.r)),
        "constraint_residual": float(np.linalg.norm(problem.B @ sol.x - problem.d)) if problem.s else 0.0,
        "outputs": [str(outdir / "x.mtx"), str(outdir / "r.mtx")],
        "manifest": ctx.manifest.to_dict(),
    }
    mmio.write_text_atomic(outdir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_cond(ctx: _Ctx) -> int:
    args = ctx.args
    problem = mmio.read_problem(args.problem)
    w = _weights(args, problem.n)
    method = args.method
    if method == "kron":
        rep = cond_exact_kron(problem, w)
    elif method == "closed":
        rep = cond_exact_closed(problem, w)
    elif method == "gsvd":
        rep = cond_exact_gsvd(problem, w)
    elif method == "upper":
        rep = {"kappa_upper": cond_upper_bound(problem, w), "method": "upper_bound"}
    else:  # lls routes need s = 0
        if problem.s:
            raise DomainError(f"--method {method} applies to unconstrained problems (s = 0)")
        rep = (cond_lls_closed if method == "lls" else cond_lls_svd)(problem.A, problem.b, w)
    _emit(ctx, rep if isinstance(rep, dict) else rep.to_dict())
    return EXIT_OK


def cmd_structured(ctx: _Ctx) -> int:
    args = ctx.args
    problem = mmio.read_problem(args.problem)
    w = _weights(args, problem.n)
    rep = cond_structured(problem, w, args.struct_a, args.struct_b)
    payload = rep.to_dict()
    payload.update(struct_a=args.struct_a, struct_b=args.struct_b)
    if args.exact:
        kappa = cond_exact_gsvd(problem, w).kappa
        payload.update(kappa_unstructured=kappa, ratio=kappa / rep.kappa if rep.kappa else None)
    _emit(ctx, payload)
    return EXIT_OK


def cmd_estimate(ctx: _Ctx) -> int:
    args = ctx.args
    problem = mmio.read_problem(args.problem)
    w = _weights(args, problem.n)
    seed = ctx.manifest.seed
    if args.method == "pce":
        structure = None
        if args.struct_a != "full" or args.struct_b != "full":
            structure = (args.struct_a, args.struct_b)
        rep = estimate_condition_pce(problem, w, args.eps, args.delta, rng_seed=seed,
                                     structure=structure)
        payload = rep.to_dict()
        payload["interval"] = [float(np.sqrt(rep.alpha1)), float(np.sqrt(rep.alpha2))]
    else:
        rep = ssce_estimate(problem, w, q=args.q, rng_seed=seed, wallis_mode=args.wallis)
        payload = rep.to_dict()
        payload.pop("elapsed_ms")  # keeps reruns byte-identical
    payload["method"] = args.method
    if args.exact:
        if args.method == "pce" and (args.struct_a != "full" or args.struct_b != "full"):
            kappa = cond_structured(problem, w, args.struct_a, args.struct_b).kappa
        else:
            kappa = cond_exact_gsvd(problem, w).kappa
        payload["kappa_exact"] = kappa
        payload["ratio"] = payload["kappa_hat"] / kappa if kappa else None
    _emit(ctx, payload)
    if args.method == "pce" and not rep.converged:
        raise ConvergenceError(f"PCE stopped after {rep.iterations} steps without "
                               f"reaching alpha2 <= (1 + delta) alpha1")
    return EXIT_OK


def cmd_bench(ctx: _Ctx) -> int:
    args = ctx.args
    seed = ctx.manifest.seed
    outdir = Path(args.out) if args.out else Path(".")
    outdir.mkdir(parents=True, exist_ok=True)
    if args.experiment == "table1":
        rows = harness.run_table1(trials=args.trials or 500, seed=seed, eps=args.eps,
                                  delta=args.delta, q=args.q)
        name, text = "table1.csv", harness.to_csv(rows, harness.TABLE1_COLUMNS)
    elif args.experiment == "ratio":
        n = args.n or 100
        rows = harness.run_ratio_experiment(n=n, trials=args.trials or 200, seed=seed)
        name, text = f"ratio_n{n}.csv", harness.to_csv(rows, harness.RATIO_COLUMNS)
    else:
        sizes = tuple(range(10, 211, 20)) if args.sizes is None else tuple(args.sizes)
        rows = harness.run_dimension_sweep(sizes=sizes, trials=args.trials or 50, seed=seed)
        name, text = "dimsweep.csv", harness.to_csv(rows, harness.DIMSWEEP_COLUMNS)
    mmio.write_text_atomic(outdir / name, text)
    manifest_path = outdir / (Path(name).stem + ".manifest.json")
    mmio.write_text_atomic(manifest_path, json.dumps(ctx.manifest.to_dict(), indent=2,
                                                     sort_keys=True) + "\n")
    sys.stdout.write(json.dumps({"csv": str(outdir / name), "rows": len(rows),
                                 "manifest": ctx.manifest.to_dict()}, indent=2,
                                sort_keys=True) + "\n")
    return EXIT_OK


def _add_weights(p):
    p.add_argument("--weights", default="1,1,1,1", help="alpha_A,alpha_B,alpha_b,alpha_d")
    p.add_argument("--L", default="identity", help='"identity", "e<i>" or a Matrix Market file')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lse-cond", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    kinds = [k.value for k in StructureKind]

    p = sub.add_parser("solve", help="solve the LSE problem and write x, r")
    p.add_argument("problem", help="bundle directory or JSON manifest")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("cond", aliases=["exact"], help="exact partial condition number")
    p.add_argument("problem")
    p.add_argument("--method", choices=["kron", "closed", "gsvd", "upper", "lls", "lls_svd"],
                   default="gsvd")
    _add_weights(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cond)

    p = sub.add_parser("structured", help="structured partial condition number")
    p.add_argument("problem")
    p.add_argument("--struct-a", choices=kinds, default="full")
    p.add_argument("--struct-b", choices=kinds, default="full")
    p.add_argument("--exact", action="store_true", help="also report the unstructured value")
    _add_weights(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_structured)

    p = sub.add_parser("estimate", help="statistical condition estimate")
    p.add_argument("problem")
    p.add_argument("--method", choices=["pce", "ssce"], default="pce")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--wallis", choices=["approx", "exact"], default="approx")
    p.add_argument("--struct-a", choices=kinds, default="full")
    p.add_argument("--struct-b", choices=kinds, default="full")
    p.add_argument("--seed", type=int)
    p.add_argument("--exact", action="store_true", help="also report the exact value and ratio")
    _add_weights(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="reproduce an experiment as CSV")
    p.add_argument("--experiment", choices=["table1", "ratio", "dimsweep"], required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int, help="matrix size for the ratio experiment")
    p.add_argument("--sizes", type=int, nargs="+", help="sizes for the dimension sweep")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: current directory)")
    p.set_defaults(func=cmd_bench)
    return parser


def _manifest(args) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "problem", "command", "seed", "out")}
    inputs = [str(args.problem)] if getattr(args, "problem", None) else []
    seed = _seed(args) if hasattr(args, "seed") else None
    return RunManifest(args.command, inputs, params, seed)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise UsageError("--trials must be positive")
        if getattr(args, "problem", None) and not os.path.exists(args.problem):
            raise FileNotFoundError(f"no such problem bundle: {args.problem}")
        return args.func(_Ctx(args, _manifest(args)))
    except SystemExit:
        raise
    except BaseException as exc:  # noqa: BLE001 - translated into the exit-code contract
        if isinstance(exc, KeyboardInterrupt):
            raise
        code, kind = _exit_code(exc)
        print(json.dumps({"error": {"kind": kind, "message": str(exc)}}))
        return code


if __name__ == "__main__":
    sys.exit(main())
