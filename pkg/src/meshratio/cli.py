"""Command-line entry point: ``meshratio <subcommand> ...``.

Exit codes: 0 success, 1 domain error, 2 usage error. Every output carries
the tool version, the invocation and the rng seed so runs can be repeated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import shlex
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import __version__, acceptance, cantor, catalog, covering, optimize, riesz
from .config import Configuration

logger = logging.getLogger("meshratio")


class DomainError(Exception):
    pass


def _meta(args: argparse.Namespace, argv: Sequence[str]) -> dict[str, Any]:
    return {
        "tool": "meshratio",
        "version": __version__,
        "invocation": "meshratio " + shlex.join(argv),
        "seed": args.seed,
    }


def _meta_comment(meta: dict[str, Any]) -> str:
    return f"# {meta['tool']} {meta['version']} | {meta['invocation']} | seed={meta['seed']}"


def _read_config(path: str) -> Configuration:
    if path == "-":
        return Configuration.load(sys.stdin)
    try:
        with open(path, encoding="utf-8") as fh:
            return Configuration.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


def _dumps(payload: dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, allow_nan=True)


def _config_payload(config: Configuration, meta: dict[str, Any], **extra: Any) -> dict[str, Any]:
    payload = config.to_dict()
    payload.update(extra)
    payload["meta"] = meta
    return payload


def _table(meta: dict[str, Any], rows: list[tuple[str, Any]]) -> str:
    width = max(len(k) for k, _ in rows)
    lines = [_meta_comment(meta)]
    for key, value in rows:
        if isinstance(value, float):
            value = f"{value:.12g}"
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines)


def cmd_diagnose(args, meta) -> None:
    config = _read_config(args.config)
    report = covering.diagnose(config)
    if args.json:
        _emit(_dumps({**report.to_dict(), "meta": meta}), args.out)
    else:
        _emit(_table(meta, list(report.to_dict().items())), args.out)


def cmd_energy(args, meta) -> None:
    config = _read_config(args.config)
    s = args.s
    grad = riesz.gradient(config, s)
    data = {
        "s": s,
        "energy": riesz.energy(config, s),
        "log2_energy": riesz.log2_energy(config, s),
        "gradient_sup_norm": float(max(math.sqrt(float(v @ v)) for v in grad)),
    }
    if args.json:
        _emit(_dumps({**data, "meta": meta}), args.out)
    else:
        _emit(_table(meta, list(data.items())), args.out)


def cmd_hessian(args, meta) -> None:
    config = _read_config(args.config)
    report = riesz.hessian_spectrum(config, args.s)
    if args.json:
        _emit(_dumps({**report.to_dict(), "meta": meta}), args.out)
        return
    spec = report.hessian_spectrum
    k = args.show
    head = ", ".join(f"{v:.6g}" for v in spec[:k])
    tail = ", ".join(f"{v:.6g}" for v in spec[-k:])
    rows = [
        ("s", report.s),
        ("energy", report.energy),
        ("log2_energy", report.log2_energy),
        ("gradient_sup_norm", report.gradient_sup_norm),
        ("spectrum_size", len(spec)),
        ("spectrum_head", head),
        ("spectrum_tail", tail),
        ("rotation_rank", report.rotation_rank),
        ("gauge_dim", report.gauge_dim),
        ("min_constrained_eig", report.min_constrained_eig),
    ]
    _emit(_table(meta, rows), args.out)


def cmd_minimize(args, meta) -> None:
    spec = optimize.MinimizeSpec(
        dim=args.dim,
        n=args.n,
        s=args.s,
        restarts=args.restarts,
        rng_seed=args.seed,
        max_iters=args.max_iters,
        threads=args.threads,
    )
    res = optimize.minimize(spec)
    result = {
        "s": args.s,
        "energy": res.energy,
        "log2_energy": res.log2_energy,
        "grad_sup_norm": res.grad_sup_norm,
        "restart_index": res.restart_index,
        "iterations": res.iterations,
        "converged": res.converged,
        "discarded": res.discarded,
    }
    _emit(_dumps(_config_payload(res.config, meta, result=result)), args.out)


def cmd_sweep(args, meta) -> None:
    rows = optimize.sweep(args.s_min, args.s_max, args.step, args.restarts, args.seed, args.threads)
    _emit(_meta_comment(meta) + "\n" + optimize.sweep_csv(rows), args.out)


def cmd_sstar(args, meta) -> None:
    value = optimize.crossing_s_star()
    if args.json:
        _emit(_dumps({"s_star": value, "meta": meta}), args.out)
    else:
        _emit(_table(meta, [("s_star", value)]), args.out)


def cmd_continue(args, meta) -> None:
    s_start = args.s_min if args.s_min is not None else 4.0
    s_end = args.s_max if args.s_max is not None else 1000.0
    schedule = optimize.geometric_schedule(s_start, s_end, args.ratio)
    res = optimize.packing_via_large_s(
        args.dim, args.n, schedule, restarts=args.restarts, rng_seed=args.seed, threads=args.threads
    )
    stages = [
        {
            "s": st.s,
            "log2_energy": st.log2_energy,
            "delta": st.delta,
            "eta": st.eta,
            "eta_gap": st.eta_gap,
            "mesh_bound": st.mesh_bound,
            "converged": st.converged,
        }
        for st in res.stages
    ]
    _emit(
        _dumps(_config_payload(res.config, meta, delta_estimate=res.delta_estimate, stages=stages)),
        args.out,
    )


def cmd_special(args, meta) -> None:
    named = catalog.build(args.name, s=args.s, t=args.t)
    _emit(_dumps(_config_payload(named.config, meta, name=named.name, notes=named.notes)), args.out)


def _frac(x: Fraction) -> dict[str, Any]:
    return {"fraction": str(x), "decimal": float(x)}


def cmd_cantor(args, meta) -> None:
    p = cantor.cantor_packing(args.k, args.eval_depth)
    if args.json:
        payload = {
            "k": p.k,
            "eval_depth": p.eval_depth,
            "points": [str(x) for x in p.points],
            "delta": _frac(p.delta),
            "eta": _frac(p.eta),
            "gamma": _frac(p.gamma),
            "meta": meta,
        }
        _emit(_dumps(payload), args.out)
        return
    rows = [
        ("k", p.k),
        ("eval_depth", p.eval_depth),
        ("points", " ".join(str(x) for x in p.points)),
        ("delta", f"{p.delta} = {float(p.delta):.12g}"),
        ("eta", f"{p.eta} = {float(p.eta):.12g}"),
        ("gamma", f"{p.gamma} = {float(p.gamma):.12g}"),
    ]
    _emit(_table(meta, rows), args.out)


def cmd_verify(args, meta) -> int:
    print(_meta_comment(meta), flush=True)
    results = acceptance.run_all(lambda line: print(line, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master rng seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    common.add_argument("--out", default=None, help="output file ('-' for stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="meshratio",
        description="Riesz energy, separation and covering radius of point configurations on spheres.",
    )
    parser.add_argument("--version", action="version", version=f"meshratio {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", parents=[common], help="separation, covering radius, mesh ratio")
    p.add_argument("config", help="configuration JSON file, or '-' for stdin")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("energy", parents=[common], help="Riesz s-energy and gradient norm")
    p.add_argument("config")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("hessian", parents=[common], help="Hessian spectrum and stability")
    p.add_argument("config")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--show", type=int, default=6, help="eigenvalues shown at each end")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_hessian)

    p = sub.add_parser("minimize", parents=[common], help="multi-start energy minimization")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--restarts", type=int, default=optimize.DEFAULT_RESTARTS)
    p.add_argument("--max-iters", type=int, default=optimize.DEFAULT_MAX_ITERS)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("sweep", parents=[common], help="5-point BP/SBP data over a range of s (CSV)")
    p.add_argument("--s-min", type=float, default=1.0)
    p.add_argument("--s-max", type=float, default=40.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--restarts", type=int, default=0, help="multi-start budget per row (0 skips)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sstar", parents=[common], help="exponent where BP and SBP(s) energies cross")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sstar)

    p = sub.add_parser("continue", parents=[common], help="continuation in s toward a best packing")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-min", type=float, default=None, help="first exponent (default 4)")
    p.add_argument("--s-max", type=float, default=None, help="last exponent (default 1000)")
    p.add_argument("--ratio", type=float, default=optimize.CONTINUATION_RATIO)
    p.add_argument("--restarts", type=int, default=optimize.DEFAULT_RESTARTS)
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("special", parents=[common], help="write a named configuration as JSON")
    p.add_argument("name", choices=catalog.NAMES)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.set_defaults(func=cmd_special)

    p = sub.add_parser("cantor", parents=[common], help="Cantor-set packing with exact delta, eta, gamma")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eval-depth", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cantor)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    meta = _meta(args, argv)
    try:
        code = args.func(args, meta)
    except (DomainError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(code or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
